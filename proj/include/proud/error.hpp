#ifndef PROUD_ERROR_HPP_
#define PROUD_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <utility>

namespace proud {

/// Thrown when vector/matrix sizes disagree with the model they are used with.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The constrained-direction dual has no finite maximiser: the Pareto-improvement
/// constraints admit no common direction.
class DualUnbounded : public std::runtime_error {
 public:
  DualUnbounded() : std::runtime_error("dual-unbounded: no direction satisfies all improvement constraints") {}
};

/// Invalid run configuration. `key()` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error("config key '" + key + "': " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

namespace detail {

inline void require_dim(long got, long want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(want) + ", got " +
                         std::to_string(got));
  }
}

}  // namespace detail
}  // namespace proud

#endif  // PROUD_ERROR_HPP_
