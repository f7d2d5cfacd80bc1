#ifndef PROUD_HARNESS_FORMAT_HPP_
#define PROUD_HARNESS_FORMAT_HPP_

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace proud::harness {

/// Shortest decimal string that parses back to the same double.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) return std::to_string(v);
  return std::string(buf, res.ptr);
}

}  // namespace proud::harness

#endif  // PROUD_HARNESS_FORMAT_HPP_
