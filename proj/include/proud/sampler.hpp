#ifndef PROUD_SAMPLER_HPP_
#define PROUD_SAMPLER_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "proud/error.hpp"
#include "proud/guidance.hpp"
#include "proud/manifold.hpp"
#include "proud/objectives.hpp"
#include "proud/schedule.hpp"

namespace proud {

/// How the direction enters the Langevin step.
///  kScoreScaled: x - (eta / sqrt(1 - alpha_bar)) g + sqrt(2 eta) z, so the eps term
///                contributes eta * score (annealed Langevin on q_t).
///  kLiteral:     x - eta g + sqrt(2 eta) z.
enum class UpdateForm { kScoreScaled, kLiteral };

struct SamplerOptions {
  UpdateForm form = UpdateForm::kScoreScaled;
  bool record_trace = false;
  int threads = 1;
};

struct TraceRecord {
  int step = 0;
  int particle = 0;
  double mgd_norm = 0.0;
  double phi = 0.0;  // -inf when the constraint branch did not fire
  Eigen::VectorXd lambda;
  bool fallback = false;
};

struct Population {
  Eigen::MatrixXd positions;  // d x N
  Eigen::MatrixXd values;     // m x N objective values, valid when fresh
  bool fresh = false;
  int step = 0;               // next step to apply; 0 once finished
  long fallbacks = 0;         // particle-steps where the dual was unbounded
  std::vector<TraceRecord> trace;

  int size() const noexcept { return static_cast<int>(positions.cols()); }
  int dim() const noexcept { return static_cast<int>(positions.rows()); }

  void refresh(const ObjectiveSet& set) {
    values.resize(set.size(), positions.cols());
    for (Eigen::Index i = 0; i < positions.cols(); ++i) values.col(i) = set.eval(positions.col(i));
    fresh = true;
  }
};

/// x' = x - h g + s z.
inline Eigen::VectorXd langevin_update(const Eigen::VectorXd& x, const Eigen::VectorXd& g, double h, double s,
                                       const Eigen::VectorXd& z) {
  return x - h * g + s * z;
}

/// Gradient with respect to x_i of sum_{i != j} 1 / |F_i - F_j|^2, given the m x N
/// objective values and particle i's d x m gradient matrix.
inline Eigen::VectorXd diversity_gradient(const Eigen::MatrixXd& values, const Eigen::MatrixXd& Gi, Eigen::Index i) {
  const Eigen::Index n = values.cols();
  if (n < 2) throw std::invalid_argument("diversity gradient needs at least two particles");
  detail::require_dim(Gi.cols(), values.rows(), "diversity_gradient");
  const Eigen::Index m = values.rows();
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(m);
  const double* fi = values.col(i).data();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (j == i) continue;
    const double* fj = values.col(j).data();
    double sq = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) sq += (fi[k] - fj[k]) * (fi[k] - fj[k]);
    if (std::sqrt(sq) < 1e-8) continue;
    const double c = -4.0 / (sq * sq);
    for (Eigen::Index k = 0; k < m; ++k) acc[k] += c * (fi[k] - fj[k]);
  }
  return Gi * acc;
}

inline Eigen::VectorXd diversity_gradient(const Population& pop, const ObjectiveSet& set, int i) {
  if (!pop.fresh) throw std::logic_error("population objective values are stale");
  return diversity_gradient(pop.values, set.grad(pop.positions.col(i)), i);
}

/// Population at step T with x_T ~ N(0, I), drawn particle-major.
template <class Rng>
Population initial_population(int n, int d, int T, Rng& rng) {
  if (n < 1 || d < 1) throw std::invalid_argument("population needs n >= 1 and d >= 1");
  std::normal_distribution<double> normal;
  Population pop;
  pop.positions.resize(d, n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) pop.positions(k, i) = normal(rng);
  }
  pop.step = T;
  return pop;
}

namespace detail {

template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, std::max(n, 1));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += threads) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// One reverse step t -> t-1 for every particle.
template <class Rng>
void step(Population& pop, const GaussianMixtureManifold& model, const NoiseSchedule& sched, const ObjectiveSet& set,
          const GuidanceConfig& cfg, const SamplerOptions& opts, Rng& rng) {
  if (pop.step < 1) throw std::logic_error("population has no steps left");
  detail::require_dim(pop.dim(), set.dim(), "sampler objectives");
  detail::require_dim(pop.dim(), model.dim(), "sampler manifold");
  const int t = pop.step;
  const int n = pop.size();
  const int d = pop.dim();

  // Noise first, particle-major then coordinate, so results do not depend on threading.
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(d, n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) z(k, i) = normal(rng);
  }

  const bool diversity = cfg.gamma > 0.0 && cfg.method != Method::MPLUS1_MGD && n >= 2;
  if (diversity && !pop.fresh) pop.refresh(set);
  const Eigen::MatrixXd& snapshot = pop.values;

  const double ab = sched.alpha_bar(t);
  const double eta = sched.step_size(t);
  const double h = opts.form == UpdateForm::kScoreScaled ? eta / std::sqrt(1.0 - ab) : eta;
  const double s = std::sqrt(2.0 * eta);

  Eigen::MatrixXd next(d, n);
  std::vector<TraceRecord> records(opts.record_trace ? static_cast<std::size_t>(n) : 0);
  std::vector<char> fell_back(static_cast<std::size_t>(n), 0);

  detail::parallel_for(n, opts.threads, [&](int i) {
    const Eigen::VectorXd x = pop.positions.col(i);
    const Eigen::MatrixXd G = set.grad(x);
    Eigen::VectorXd eps = cfg.method == Method::M_MGD ? Eigen::VectorXd::Zero(d) : eps_star_at(model, x, ab);
    Eigen::VectorXd dir;
    TraceRecord rec;
    rec.step = t;
    rec.particle = i;
    rec.phi = -std::numeric_limits<double>::infinity();
    if (cfg.method == Method::PROUD) {
      try {
        GuidanceOutcome g = proud_direction(eps, G, cfg);
        dir = std::move(g.direction);
        rec.mgd_norm = g.mgd_norm;
        rec.phi = g.phi;
        rec.lambda = std::move(g.multipliers);
      } catch (const DualUnbounded&) {
        const MinNormSolution mn = min_norm_weights(G);
        dir = mn.direction;
        rec.mgd_norm = mn.norm;
        rec.phi = phi_switch(mn.norm, cfg);
        rec.lambda = Eigen::VectorXd::Zero(G.cols());
        rec.fallback = true;
        fell_back[static_cast<std::size_t>(i)] = 1;
      }
    } else {
      dir = baseline_direction(eps, G, cfg);
      if (opts.record_trace) {
        rec.mgd_norm = min_norm_weights(G).norm;
        rec.lambda = Eigen::VectorXd::Zero(G.cols());
      }
    }
    if (diversity) {
      Eigen::VectorXd div = diversity_gradient(snapshot, G, i);
      const double norm = div.norm();
      if (cfg.diversity_clip > 0.0 && norm > cfg.diversity_clip) div *= cfg.diversity_clip / norm;
      dir += cfg.gamma * div;
    }
    next.col(i) = langevin_update(x, dir, h, s, z.col(i));
    if (opts.record_trace) records[static_cast<std::size_t>(i)] = std::move(rec);
  });

  for (char f : fell_back) pop.fallbacks += f;
  if (opts.record_trace) {
    for (auto& r : records) pop.trace.push_back(std::move(r));
  }
  pop.positions = std::move(next);
  pop.fresh = false;
  pop.step = t - 1;
}

/// Applies up to `max_steps` reverse steps (all remaining steps by default), then
/// refreshes the objective values.
template <class Rng>
void run_steps(Population& pop, const GaussianMixtureManifold& model, const NoiseSchedule& sched,
               const ObjectiveSet& set, const GuidanceConfig& cfg, const SamplerOptions& opts, Rng& rng,
               int max_steps = std::numeric_limits<int>::max()) {
  for (int k = 0; k < max_steps && pop.step >= 1; ++k) step(pop, model, sched, set, cfg, opts, rng);
  pop.refresh(set);
}

/// Draws x_T ~ N(0, I) for n particles and runs the full reverse chain to x_0.
template <class Rng>
Population run(int n, const GaussianMixtureManifold& model, const NoiseSchedule& sched, const ObjectiveSet& set,
               const GuidanceConfig& cfg, const SamplerOptions& opts, Rng& rng) {
  cfg.validate();
  Population pop = initial_population(n, set.dim(), sched.steps(), rng);
  run_steps(pop, model, sched, set, cfg, opts, rng);
  return pop;
}

}  // namespace proud

#endif  // PROUD_SAMPLER_HPP_
