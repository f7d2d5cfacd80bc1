#ifndef PROUD_ORACLE_BRUTE_FORCE_HPP_
#define PROUD_ORACLE_BRUTE_FORCE_HPP_

// Slow reference computations. Nothing here calls the solvers it is used to check.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace proud::oracle {

/// min over the simplex of |G w|^2 by exhaustive grid search with step 1/steps.
inline double simplex_grid_min(const Eigen::MatrixXd& G, int steps) {
  const Eigen::MatrixXd M = G.transpose() * G;
  const Eigen::Index m = G.cols();
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd w(m);
  if (m == 1) return M(0, 0);
  if (m == 2) {
    for (int i = 0; i <= steps; ++i) {
      const double a = static_cast<double>(i) / steps;
      w << a, 1.0 - a;
      best = std::min(best, w.dot(M * w));
    }
    return best;
  }
  if (m == 3) {
    for (int i = 0; i <= steps; ++i) {
      for (int j = 0; i + j <= steps; ++j) {
        const double a = static_cast<double>(i) / steps, b = static_cast<double>(j) / steps;
        w << a, b, 1.0 - a - b;
        best = std::min(best, w.dot(M * w));
      }
    }
    return best;
  }
  return best;
}

/// max over a grid on [0, hi]^m of -1/2 |eps + G l|^2 + phi * sum(l), m <= 2. For m = 2
/// the second coordinate is maximised exactly along each grid line of the first.
inline double dual_grid_max(const Eigen::VectorXd& eps, const Eigen::MatrixXd& G, double phi, double hi, double step) {
  auto value = [&](const Eigen::VectorXd& l) { return -0.5 * (eps + G * l).squaredNorm() + phi * l.sum(); };
  const int n = static_cast<int>(std::llround(hi / step));
  double best = -std::numeric_limits<double>::infinity();
  if (G.cols() == 1) {
    Eigen::VectorXd l(1);
    for (int i = 0; i <= n; ++i) {
      l[0] = i * step;
      best = std::max(best, value(l));
    }
    return best;
  }
  Eigen::VectorXd l(2);
  const double g2 = G.col(1).squaredNorm();
  for (int i = 0; i <= n; ++i) {
    l[0] = i * step;
    const Eigen::VectorXd base = eps + l[0] * G.col(0);
    double l2 = g2 > 0.0 ? (phi - G.col(1).dot(base)) / g2 : 0.0;
    l2 = std::clamp(l2, 0.0, hi);
    for (double cand : {l2, std::floor(l2 / step) * step, std::ceil(l2 / step) * step}) {
      l[1] = std::clamp(cand, 0.0, hi);
      best = std::max(best, value(l));
    }
  }
  return best;
}

/// Non-dominated indices by all-pairs comparison.
inline std::vector<std::size_t> pareto_brute(const std::vector<Eigen::VectorXd>& pts) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
      if (j == i) continue;
      const bool le = (pts[j].array() <= pts[i].array()).all();
      const bool lt = (pts[j].array() < pts[i].array()).any();
      dominated = le && lt;
    }
    if (!dominated) out.push_back(i);
  }
  return out;
}

/// Minimum mean Euclidean matching cost by enumerating every permutation.
inline double emd_brute(const std::vector<Eigen::VectorXd>& a, const std::vector<Eigen::VectorXd>& b) {
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) c += (a[i] - b[perm[i]]).norm();
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(a.size());
}

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Dominated volume by uniform sampling of the box [0, ref].
inline McEstimate hypervolume_mc_box(const std::vector<Eigen::VectorXd>& pts, const Eigen::VectorXd& ref, long samples,
                                     unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::Index m = ref.size();
  Eigen::VectorXd u(m);
  long hits = 0;
  for (long s = 0; s < samples; ++s) {
    for (Eigen::Index k = 0; k < m; ++k) u[k] = ref[k] * unit(rng);
    for (const auto& p : pts) {
      bool inside = true;
      for (Eigen::Index k = 0; k < m && inside; ++k) inside = p[k] <= u[k];
      if (inside) {
        ++hits;
        break;
      }
    }
  }
  const double box = ref.prod();
  const double f = static_cast<double>(hits) / static_cast<double>(samples);
  return {box * f, box * std::sqrt(f * (1.0 - f) / static_cast<double>(samples))};
}

/// Central-difference gradient.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                   double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    xp[k] = x[k] + h;
    xm[k] = x[k] - h;
    g[k] = (f(xp) - f(xm)) / (2.0 * h);
    xp[k] = xm[k] = x[k];
  }
  return g;
}

/// Relative error |a - b| / max(|b|, floor).
inline double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-8) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

/// Sum over ordered pairs i != j of 1 / |y_i - y_j|^2.
inline double diversity_energy(const std::vector<Eigen::VectorXd>& ys) {
  double l = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    for (std::size_t j = 0; j < ys.size(); ++j) {
      if (i != j) l += 1.0 / (ys[i] - ys[j]).squaredNorm();
    }
  }
  return l;
}

/// Closed form 0.0625 - integral_0^0.25 (0.5 - sqrt(u))^2 du for the two-anchor front.
inline constexpr double kTwoAnchorHv = 5.0 / 96.0;

}  // namespace proud::oracle

#endif  // PROUD_ORACLE_BRUTE_FORCE_HPP_
