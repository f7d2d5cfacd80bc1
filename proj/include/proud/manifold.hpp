#ifndef PROUD_MANIFOLD_HPP_
#define PROUD_MANIFOLD_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "proud/error.hpp"
#include "proud/schedule.hpp"

namespace proud {

/// Isotropic Gaussian mixture standing in for the data distribution.
struct GaussianMixtureManifold {
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<double> stdevs;

  int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
  int components() const { return static_cast<int>(weights.size()); }

  void validate() const {
    if (weights.empty()) throw std::invalid_argument("mixture needs at least one component");
    if (means.size() != weights.size() || stdevs.size() != weights.size()) {
      throw std::invalid_argument("mixture weights/means/stdevs lengths differ");
    }
    double total = 0.0;
    for (double w : weights) {
      if (!(w > 0.0)) throw std::invalid_argument("mixture weights must be positive");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("mixture weights must sum to 1");
    for (double s : stdevs) {
      if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("mixture stdevs must be positive");
    }
    const auto d = means.front().size();
    if (d == 0) throw std::invalid_argument("mixture dimension must be positive");
    for (const auto& m : means) {
      if (m.size() != d) throw DimensionError("mixture means have different dimensions");
    }
  }

  static GaussianMixtureManifold create(std::vector<double> weights, std::vector<Eigen::VectorXd> means,
                                        std::vector<double> stdevs) {
    GaussianMixtureManifold m{std::move(weights), std::move(means), std::move(stdevs)};
    m.validate();
    return m;
  }
};

namespace detail {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Per-component log joint terms log w_k + log N(x; sqrt(ab) mu_k, var_k I), and var_k.
// alpha_bar = 1 gives the clean data density.
inline void mixture_terms(const GaussianMixtureManifold& model, const Eigen::VectorXd& x, double alpha_bar,
                          std::vector<double>& log_terms, std::vector<double>& variances) {
  const int k_count = model.components();
  const double d = static_cast<double>(x.size());
  const double scale = std::sqrt(alpha_bar);
  log_terms.resize(static_cast<std::size_t>(k_count));
  variances.resize(static_cast<std::size_t>(k_count));
  for (int k = 0; k < k_count; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double var = (1.0 - alpha_bar) + alpha_bar * model.stdevs[ku] * model.stdevs[ku];
    const double sq = (x - scale * model.means[ku]).squaredNorm();
    variances[ku] = var;
    log_terms[ku] = std::log(model.weights[ku]) - 0.5 * d * (kLog2Pi + std::log(var)) - 0.5 * sq / var;
  }
}

inline double log_sum_exp(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double a : v) mx = std::max(mx, a);
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (double a : v) acc += std::exp(a - mx);
  return mx + std::log(acc);
}

}  // namespace detail

/// log q_ab(x) for the forward-noised mixture at cumulative signal level alpha_bar.
inline double noised_log_density_at(const GaussianMixtureManifold& model, const Eigen::VectorXd& x,
                                    double alpha_bar) {
  detail::require_dim(x.size(), model.dim(), "noised_log_density");
  std::vector<double> terms, vars;
  detail::mixture_terms(model, x, alpha_bar, terms, vars);
  return detail::log_sum_exp(terms);
}

/// Gradient of log q_ab(x): posterior-weighted sum of component scores.
inline Eigen::VectorXd noised_score_at(const GaussianMixtureManifold& model, const Eigen::VectorXd& x,
                                       double alpha_bar) {
  detail::require_dim(x.size(), model.dim(), "noised_score");
  std::vector<double> terms, vars;
  detail::mixture_terms(model, x, alpha_bar, terms, vars);
  const double lse = detail::log_sum_exp(terms);
  const double scale = std::sqrt(alpha_bar);
  Eigen::VectorXd score = Eigen::VectorXd::Zero(x.size());
  for (int k = 0; k < model.components(); ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double post = std::exp(terms[ku] - lse);
    if (post == 0.0) continue;
    score -= (post / vars[ku]) * (x - scale * model.means[ku]);
  }
  return score;
}

inline Eigen::VectorXd noised_score(const GaussianMixtureManifold& model, const Eigen::VectorXd& x, int t,
                                    const NoiseSchedule& sched) {
  return noised_score_at(model, x, sched.alpha_bar(t));
}

/// Optimal noise prediction: eps*(x, t) = -sqrt(1 - alpha_bar_t) * score_t(x).
inline Eigen::VectorXd eps_star_at(const GaussianMixtureManifold& model, const Eigen::VectorXd& x,
                                   double alpha_bar) {
  return -std::sqrt(1.0 - alpha_bar) * noised_score_at(model, x, alpha_bar);
}

inline Eigen::VectorXd eps_star(const GaussianMixtureManifold& model, const Eigen::VectorXd& x, int t,
                                const NoiseSchedule& sched) {
  return eps_star_at(model, x, sched.alpha_bar(t));
}

/// Exact log density of the clean mixture, evaluated in log space.
inline double log_density(const GaussianMixtureManifold& model, const Eigen::VectorXd& x) {
  return noised_log_density_at(model, x, 1.0);
}

}  // namespace proud

#endif  // PROUD_MANIFOLD_HPP_
