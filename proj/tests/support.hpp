#ifndef PROUD_TESTS_SUPPORT_HPP_
#define PROUD_TESTS_SUPPORT_HPP_

#include <Eigen/Core>

#include <initializer_list>
#include <random>
#include <vector>

namespace proud::test {

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

/// Matrix whose columns are the given vectors.
inline Eigen::MatrixXd cols(std::initializer_list<Eigen::VectorXd> v) {
  Eigen::MatrixXd out(v.begin()->size(), static_cast<Eigen::Index>(v.size()));
  Eigen::Index j = 0;
  for (const auto& c : v) out.col(j++) = c;
  return out;
}

inline Eigen::VectorXd normal_vec(Eigen::Index d, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::VectorXd v(d);
  for (Eigen::Index k = 0; k < d; ++k) v[k] = n(rng);
  return v;
}

inline Eigen::MatrixXd normal_mat(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) m.col(j) = normal_vec(r, rng);
  return m;
}

}  // namespace proud::test

#endif  // PROUD_TESTS_SUPPORT_HPP_
