#ifndef PROUD_MGD_HPP_
#define PROUD_MGD_HPP_

#include <Eigen/Core>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "proud/error.hpp"

namespace proud {

struct MinNormSolution {
  Eigen::VectorXd weights;    // on the simplex
  Eigen::VectorXd direction;  // G * weights
  double norm = 0.0;
};

namespace detail {

inline double quad(const Eigen::MatrixXd& M, const Eigen::VectorXd& w) { return w.dot(M * w); }

// Away-step Frank-Wolfe on min w'Mw over the simplex.
inline Eigen::VectorXd frank_wolfe(const Eigen::MatrixXd& M, long max_iter, double gap_tol) {
  const Eigen::Index m = M.rows();
  Eigen::Index start = 0;
  M.diagonal().minCoeff(&start);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  w[start] = 1.0;
  Eigen::VectorXd Mw = M.col(start);
  for (long it = 0; it < max_iter; ++it) {
    Eigen::Index s = 0;
    Mw.minCoeff(&s);
    const double wMw = w.dot(Mw);
    const double gap = 2.0 * (wMw - Mw[s]);
    if (gap < gap_tol) break;

    Eigen::Index a = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (w[i] > 0.0 && (a < 0 || Mw[i] > Mw[a])) a = i;
    }
    const double away_gap = 2.0 * (Mw[a] - wMw);
    Eigen::VectorXd dir = -w;
    double step_max = 1.0;
    if (gap >= away_gap || a == s) {
      dir[s] += 1.0;
    } else {
      dir = w;
      dir[a] -= 1.0;
      step_max = w[a] / (1.0 - w[a]);
      if (!std::isfinite(step_max)) step_max = 1.0;
    }
    const Eigen::VectorXd Md = M * dir;
    const double curv = dir.dot(Md);
    const double slope = dir.dot(Mw);
    double step = curv > 0.0 ? -slope / curv : step_max;
    step = std::clamp(step, 0.0, step_max);
    if (step == 0.0) break;
    w += step * dir;
    for (Eigen::Index i = 0; i < m; ++i) w[i] = std::max(w[i], 0.0);
    w /= w.sum();
    Mw = M * w;
  }
  return w;
}

// Wolfe's minimum-norm-point method on the Gram matrix: exact active-set search
// that keeps the support affinely independent. Returns false if it fails to
// terminate within its iteration budget.
inline bool wolfe_min_norm(const Eigen::MatrixXd& M, Eigen::VectorXd& w_out) {
  const Eigen::Index m = M.rows();
  const double scale = std::max(M.diagonal().maxCoeff(), 1e-300);
  const double tol = 1e-13 * scale;

  Eigen::Index first = 0;
  M.diagonal().minCoeff(&first);
  std::vector<Eigen::Index> S{first};
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  w[first] = 1.0;

  // Minimiser of |G v|^2 over the affine hull of S, as full-length weights.
  auto affine_min = [&](const std::vector<Eigen::Index>& set) {
    const auto k = static_cast<Eigen::Index>(set.size());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(k + 1, k + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) K(a, b) = M(set[a], set[b]);
      K(a, k) = K(k, a) = 1.0;
    }
    rhs[k] = 1.0;
    const Eigen::VectorXd sol = K.completeOrthogonalDecomposition().solve(rhs);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
    for (Eigen::Index a = 0; a < k; ++a) v[set[a]] = sol[a];
    return v;
  };

  const long budget = 50L * static_cast<long>(m) + 50;
  for (long major = 0; major < budget; ++major) {
    const Eigen::VectorXd Mw = M * w;
    const double xx = w.dot(Mw);
    Eigen::Index j = 0;
    const double lowest = Mw.minCoeff(&j);
    if (lowest >= xx - tol || std::find(S.begin(), S.end(), j) != S.end()) {
      w_out = w;
      return true;
    }
    S.push_back(j);
    for (long minor = 0; minor < budget; ++minor) {
      const Eigen::VectorXd v = affine_min(S);
      bool interior = true;
      for (Eigen::Index i : S) interior = interior && v[i] > 0.0;
      if (interior) {
        w = v;
        break;
      }
      double theta = 1.0;
      for (Eigen::Index i : S) {
        if (v[i] <= 0.0 && w[i] - v[i] > 0.0) theta = std::min(theta, w[i] / (w[i] - v[i]));
      }
      w += theta * (v - w);
      std::vector<Eigen::Index> kept;
      for (Eigen::Index i : S) {
        if (w[i] > 1e-15) {
          kept.push_back(i);
        } else {
          w[i] = 0.0;
        }
      }
      if (kept.size() == S.size()) {
        // Degenerate step; drop the most negative affine weight to make progress.
        Eigen::Index drop = S.front();
        for (Eigen::Index i : S) {
          if (v[i] < v[drop]) drop = i;
        }
        w[drop] = 0.0;
        kept.erase(std::find(kept.begin(), kept.end(), drop));
      }
      S = kept;
      w = w.cwiseMax(0.0);
      w /= w.sum();
    }
  }
  return false;
}

}  // namespace detail

/// Minimum-norm point of the convex hull of the columns of G (d x m).
inline MinNormSolution min_norm_weights(const Eigen::MatrixXd& G) {
  const Eigen::Index m = G.cols();
  if (m < 1) throw std::invalid_argument("min_norm_weights needs at least one gradient");
  if (G.rows() < 1) throw DimensionError("gradients must have positive dimension");

  MinNormSolution out;
  out.weights = Eigen::VectorXd::Zero(m);
  if (m == 1) {
    out.weights[0] = 1.0;
  } else if (m == 2) {
    const Eigen::VectorXd diff = G.col(0) - G.col(1);
    const double den = diff.squaredNorm();
    const double w = den == 0.0 ? 0.5 : std::clamp((-diff).dot(G.col(1)) / den, 0.0, 1.0);
    out.weights << w, 1.0 - w;
  } else {
    const Eigen::MatrixXd M = G.transpose() * G;
    const long cap = 10L * static_cast<long>(m) * static_cast<long>(G.rows());
    out.weights = detail::frank_wolfe(M, cap, 1e-10);
    Eigen::VectorXd exact;
    if (detail::wolfe_min_norm(M, exact) && detail::quad(M, exact) <= detail::quad(M, out.weights)) {
      out.weights = exact;
    }
  }
  out.direction = G * out.weights;
  out.norm = out.direction.norm();
  return out;
}

/// Convenience overload taking gradients as a list of vectors.
inline MinNormSolution min_norm_weights(const std::vector<Eigen::VectorXd>& gradients) {
  if (gradients.empty()) throw std::invalid_argument("min_norm_weights needs at least one gradient");
  Eigen::MatrixXd G(gradients.front().size(), static_cast<Eigen::Index>(gradients.size()));
  for (std::size_t i = 0; i < gradients.size(); ++i) {
    detail::require_dim(gradients[i].size(), G.rows(), "min_norm_weights");
    G.col(static_cast<Eigen::Index>(i)) = gradients[i];
  }
  return min_norm_weights(G);
}

/// y1 dominates y2 (minimization): componentwise <= and not identical.
inline bool dominates(const Eigen::VectorXd& y1, const Eigen::VectorXd& y2) {
  detail::require_dim(y1.size(), y2.size(), "dominates");
  bool strict = false;
  for (Eigen::Index i = 0; i < y1.size(); ++i) {
    if (y1[i] > y2[i]) return false;
    if (y1[i] < y2[i]) strict = true;
  }
  return strict;
}

/// Indices of the non-dominated points, in ascending index order.
/// A dominator always precedes its victim lexicographically, so one pass over the
/// lexicographically sorted points, testing against the kept set, is exact.
inline std::vector<std::size_t> pareto_filter(const std::vector<Eigen::VectorXd>& points) {
  if (points.empty()) throw std::invalid_argument("pareto_filter needs at least one point");
  const Eigen::Index m = points.front().size();
  for (const auto& p : points) detail::require_dim(p.size(), m, "pareto_filter");

  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(points[a].data(), points[a].data() + m, points[b].data(),
                                        points[b].data() + m);
  });
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    bool dominated = false;
    for (std::size_t k : kept) {
      if (dominates(points[k], points[idx])) {
        dominated = true;
        break;
      }
    }
    if (!dominated) kept.push_back(idx);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

/// Pareto stationarity: the min-norm combination of the gradients has norm <= tol.
inline bool is_stationary(const Eigen::MatrixXd& G, double tol = 1e-6) {
  if (!(tol > 0.0)) throw std::invalid_argument("stationarity tolerance must be positive");
  return min_norm_weights(G).norm <= tol;
}

}  // namespace proud

#endif  // PROUD_MGD_HPP_
