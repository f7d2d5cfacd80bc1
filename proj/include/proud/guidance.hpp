#ifndef PROUD_GUIDANCE_HPP_
#define PROUD_GUIDANCE_HPP_

#include <Eigen/Core>
#include <Eigen/QR>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "proud/error.hpp"
#include "proud/mgd.hpp"

namespace proud {

enum class Method { PROUD, DM_MMGD, DM_SINGLE, MPLUS1_MGD, M_MGD };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::PROUD: return "PROUD";
    case Method::DM_MMGD: return "DM_MMGD";
    case Method::DM_SINGLE: return "DM_SINGLE";
    case Method::MPLUS1_MGD: return "MPLUS1_MGD";
    case Method::M_MGD: return "M_MGD";
  }
  return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
  for (Method m : {Method::PROUD, Method::DM_MMGD, Method::DM_SINGLE, Method::MPLUS1_MGD, Method::M_MGD}) {
    if (method_name(m) == s) return m;
  }
  return std::nullopt;
}

struct GuidanceConfig {
  double alpha = 0.5;
  double e_threshold = 0.03;
  double gamma = 0.2;
  Method method = Method::PROUD;
  double fixed_lambda = 1.0;
  std::vector<double> single_weights;  // empty means uniform
  double diversity_clip = 1.0;         // max norm of a particle's diversity gradient; 0 disables clipping

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
    if (!(e_threshold > 0.0)) throw std::invalid_argument("e_threshold must be > 0");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("gamma must be >= 0");
    if (!(fixed_lambda >= 0.0) || !std::isfinite(fixed_lambda)) throw std::invalid_argument("fixed_lambda must be >= 0");
    if (!(diversity_clip >= 0.0)) throw std::invalid_argument("diversity_clip must be >= 0");
    if (!single_weights.empty()) {
      double s = 0.0;
      for (double w : single_weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("single_weights must be nonnegative");
        s += w;
      }
      if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("single_weights must sum to 1");
    }
  }

  /// Scalarization weights for m objectives.
  Eigen::VectorXd weights_for(Eigen::Index m) const {
    if (single_weights.empty()) return Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
    detail::require_dim(static_cast<long>(single_weights.size()), m, "single_weights");
    return Eigen::Map<const Eigen::VectorXd>(single_weights.data(), m);
  }
};

struct GuidanceOutcome {
  Eigen::VectorXd direction;
  Eigen::VectorXd multipliers;
  double phi = -std::numeric_limits<double>::infinity();
  double mgd_norm = 0.0;

  bool constrained() const noexcept { return std::isfinite(phi); }
};

/// alpha * |grad F| when |grad F| > e, otherwise -infinity.
inline double phi_switch(double mgd_norm, const GuidanceConfig& cfg) {
  if (mgd_norm > cfg.e_threshold) return cfg.alpha * mgd_norm;
  return -std::numeric_limits<double>::infinity();
}

namespace detail {

inline double dual_objective(const Eigen::VectorXd& eps, const Eigen::MatrixXd& G, double phi,
                             const Eigen::VectorXd& lambda) {
  return -0.5 * (eps + G * lambda).squaredNorm() + phi * lambda.sum();
}

// Exact maximiser by enumerating active sets, smallest first.
inline Eigen::VectorXd dual_enumerate(const Eigen::VectorXd& eps, const Eigen::MatrixXd& G, double phi) {
  const Eigen::Index m = G.cols();
  const Eigen::MatrixXd M = G.transpose() * G;
  const Eigen::VectorXd c = G.transpose() * eps;
  const double scale = 1.0 + std::abs(phi) + c.cwiseAbs().maxCoeff() + M.cwiseAbs().maxCoeff();
  const double tol = 1e-11 * scale;

  std::vector<unsigned> subsets;
  for (unsigned s = 0; s < (1u << m); ++s) subsets.push_back(s);
  std::stable_sort(subsets.begin(), subsets.end(),
                   [](unsigned a, unsigned b) { return std::popcount(a) < std::popcount(b); });

  for (unsigned s : subsets) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (s & (1u << i)) idx.push_back(i);
    }
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
    if (!idx.empty()) {
      const auto k = static_cast<Eigen::Index>(idx.size());
      Eigen::MatrixXd A(k, k);
      Eigen::VectorXd r(k);
      for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) A(a, b) = M(idx[a], idx[b]);
        r[a] = phi - c[idx[a]];
      }
      const Eigen::VectorXd sol = A.completeOrthogonalDecomposition().solve(r);
      if (!((A * sol - r).cwiseAbs().maxCoeff() <= tol)) continue;
      for (Eigen::Index a = 0; a < k; ++a) lambda[idx[a]] = sol[a];
    }
    if (lambda.minCoeff() < -tol) continue;
    lambda = lambda.cwiseMax(0.0);
    const Eigen::VectorXd slack = c + M * lambda - Eigen::VectorXd::Constant(m, phi);
    if (slack.minCoeff() < -tol) continue;
    return lambda;
  }
  throw DualUnbounded();
}

// Projected gradient ascent with step 1 / trace(Gram).
inline Eigen::VectorXd dual_ascent(const Eigen::VectorXd& eps, const Eigen::MatrixXd& G, double phi) {
  const Eigen::Index m = G.cols();
  const Eigen::MatrixXd M = G.transpose() * G;
  const Eigen::VectorXd c = G.transpose() * eps;
  const double L = M.trace();
  const Eigen::VectorXd rhs = Eigen::VectorXd::Constant(m, phi) - c;
  if (!(L > 0.0)) {
    // Objective is linear: bounded only if no coordinate has positive slope.
    if (rhs.maxCoeff() > 0.0) throw DualUnbounded();
    return Eigen::VectorXd::Zero(m);
  }
  if (phi > 0.0) {
    // Along lambda = s * w, with w the min-norm weights, the objective has slope
    // phi - v.eps - s |v|^2. Still rising at |lambda| = 1e8 means unbounded.
    const MinNormSolution mn = min_norm_weights(G);
    const double s = 1e8 / mn.weights.norm();
    if (phi - mn.direction.dot(eps) - s * mn.norm * mn.norm > 0.0) throw DualUnbounded();
  }
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
  double prev = dual_objective(eps, G, phi, lambda);
  constexpr long kMaxIter = 2'000'000;
  for (long it = 0; it < kMaxIter; ++it) {
    const Eigen::VectorXd grad = rhs - M * lambda;
    double pg = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const double gi = lambda[i] > 0.0 ? grad[i] : std::max(grad[i], 0.0);
      pg += gi * gi;
    }
    if (std::sqrt(pg) < 1e-9) break;
    lambda = (lambda + grad / L).cwiseMax(0.0);
    if ((it & 63) == 0) {
      const double val = dual_objective(eps, G, phi, lambda);
      if (lambda.norm() > 1e8 && val > prev) throw DualUnbounded();
      prev = val;
    }
  }

  // Exact solve on the support found by the ascent; kept only if it satisfies KKT
  // at least as tightly.
  auto kkt_residual = [&](const Eigen::VectorXd& l) {
    const Eigen::VectorXd slack = c + M * l - Eigen::VectorXd::Constant(m, phi);
    return std::max({0.0, -l.minCoeff(), -slack.minCoeff(), l.cwiseProduct(slack).cwiseAbs().maxCoeff()});
  };
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (lambda[i] > 0.0) idx.push_back(i);
  }
  if (!idx.empty()) {
    const auto k = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd A(k, k);
    Eigen::VectorXd r(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) A(a, b) = M(idx[a], idx[b]);
      r[a] = rhs[idx[a]];
    }
    const Eigen::VectorXd sol = A.completeOrthogonalDecomposition().solve(r);
    Eigen::VectorXd cand = Eigen::VectorXd::Zero(m);
    for (Eigen::Index a = 0; a < k; ++a) cand[idx[a]] = sol[a];
    if (cand.minCoeff() >= 0.0 && kkt_residual(cand) <= kkt_residual(lambda)) lambda = cand;
  }
  return lambda;
}

}  // namespace detail

/// Maximises -1/2 |eps + G lambda|^2 + phi * sum(lambda) over lambda >= 0.
/// G holds one objective gradient per column. Throws DualUnbounded when the
/// improvement constraints g_i . direction >= phi have no common solution.
inline Eigen::VectorXd solve_dual(const Eigen::VectorXd& eps, const Eigen::MatrixXd& G, double phi) {
  if (!std::isfinite(phi)) throw std::invalid_argument("solve_dual requires a finite phi");
  detail::require_dim(G.rows(), eps.size(), "solve_dual");
  if (G.cols() == 0) return Eigen::VectorXd(0);
  if (G.cols() <= 3) return detail::dual_enumerate(eps, G, phi);
  return detail::dual_ascent(eps, G, phi);
}

/// PROUD denoising direction eps + G lambda, with lambda from the dual when the
/// min-norm gradient exceeds the threshold and zero otherwise.
inline GuidanceOutcome proud_direction(const Eigen::VectorXd& eps, const Eigen::MatrixXd& G,
                                       const GuidanceConfig& cfg) {
  detail::require_dim(G.rows(), eps.size(), "proud_direction");
  GuidanceOutcome out;
  out.multipliers = Eigen::VectorXd::Zero(G.cols());
  if (G.cols() > 0) {
    out.mgd_norm = min_norm_weights(G).norm;
    out.phi = phi_switch(out.mgd_norm, cfg);
  }
  if (out.constrained()) {
    out.multipliers = solve_dual(eps, G, out.phi);
    out.direction = eps + G * out.multipliers;
  } else {
    out.direction = eps;
  }
  return out;
}

/// Update direction for the comparison methods.
inline Eigen::VectorXd baseline_direction(const Eigen::VectorXd& eps, const Eigen::MatrixXd& G,
                                          const GuidanceConfig& cfg) {
  detail::require_dim(G.rows(), eps.size(), "baseline_direction");
  switch (cfg.method) {
    case Method::DM_MMGD:
      return eps + cfg.fixed_lambda * min_norm_weights(G).direction;
    case Method::DM_SINGLE:
      return eps + cfg.fixed_lambda * (G * cfg.weights_for(G.cols()));
    case Method::MPLUS1_MGD: {
      Eigen::MatrixXd H(G.rows(), G.cols() + 1);
      H << G, eps;
      return min_norm_weights(H).direction;
    }
    case Method::M_MGD:
      return min_norm_weights(G).direction;
    case Method::PROUD:
      break;
  }
  throw std::invalid_argument("baseline_direction called with a non-baseline method");
}

}  // namespace proud

#endif  // PROUD_GUIDANCE_HPP_
