#ifndef PROUD_METRICS_HPP_
#define PROUD_METRICS_HPP_

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "proud/error.hpp"
#include "proud/manifold.hpp"
#include "proud/mgd.hpp"
#include "proud/objectives.hpp"
#include "proud/sampler.hpp"

namespace proud {

struct HvEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

namespace detail {

inline std::vector<Eigen::VectorXd> inside_box(const std::vector<Eigen::VectorXd>& points, const Eigen::VectorXd& ref) {
  std::vector<Eigen::VectorXd> kept;
  for (const auto& p : points) {
    require_dim(p.size(), ref.size(), "hypervolume reference");
    if ((p.array() < ref.array()).all()) kept.push_back(p);
  }
  return kept;
}

inline double hv2(std::vector<Eigen::VectorXd> pts, const Eigen::VectorXd& ref) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
  });
  double hv = 0.0, level = ref[1];
  for (const auto& p : pts) {
    if (p[1] < level) {
      hv += (ref[0] - p[0]) * (level - p[1]);
      level = p[1];
    }
  }
  return hv;
}

// Sweep over the third coordinate, keeping the 2-D staircase of the slab in a map.
inline double hv3(std::vector<Eigen::VectorXd> pts, const Eigen::VectorXd& ref) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a[2] < b[2]; });
  std::map<double, double> stair;  // x -> y, y strictly decreasing in x
  double area = 0.0, volume = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double px = pts[k][0], py = pts[k][1];
    auto it = stair.lower_bound(px);
    const bool has_pred = it != stair.begin();
    const double pred_y = has_pred ? std::prev(it)->second : ref[1];
    const bool dominated = (has_pred && pred_y <= py) || (it != stair.end() && it->first == px && it->second <= py);
    if (!dominated) {
      double cur_x = px, cur_level = pred_y;
      bool closed = false;
      while (it != stair.end()) {
        const double qx = it->first, qy = it->second;
        area += (qx - cur_x) * (cur_level - py);
        if (qy < py) {
          closed = true;
          break;
        }
        cur_x = qx;
        cur_level = qy;
        it = stair.erase(it);
      }
      if (!closed) area += (ref[0] - cur_x) * (cur_level - py);
      stair.emplace(px, py);
    }
    const double next_z = k + 1 < pts.size() ? pts[k + 1][2] : ref[2];
    volume += area * (next_z - pts[k][2]);
  }
  return volume;
}

}  // namespace detail

/// Monte Carlo estimate of the dominated volume, uniform in [min(points), ref].
inline HvEstimate hypervolume_mc(const std::vector<Eigen::VectorXd>& points, const Eigen::VectorXd& ref,
                                 long samples = 1'000'000, std::uint64_t seed = 0) {
  const auto pts = detail::inside_box(points, ref);
  if (pts.empty()) return {};
  if (samples < 2) throw std::invalid_argument("Monte Carlo hypervolume needs at least two samples");
  const Eigen::Index m = ref.size();
  Eigen::VectorXd lo = pts.front();
  for (const auto& p : pts) lo = lo.cwiseMin(p);
  const double box = (ref - lo).prod();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd u(m);
  long hits = 0;
  for (long s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < m; ++i) u[i] = lo[i] + (ref[i] - lo[i]) * unit(rng);
    for (const auto& p : pts) {
      if ((p.array() <= u.array()).all()) {
        ++hits;
        break;
      }
    }
  }
  const double frac = static_cast<double>(hits) / static_cast<double>(samples);
  return {box * frac, box * std::sqrt(frac * (1.0 - frac) / static_cast<double>(samples))};
}

/// Volume of the union of boxes [y, ref] (minimization). Exact for m <= 3,
/// Monte Carlo with 1e6 samples and seed 0 otherwise.
inline double hypervolume(const std::vector<Eigen::VectorXd>& points, const Eigen::VectorXd& ref) {
  if (ref.size() < 1) throw DimensionError("hypervolume reference must be nonempty");
  auto pts = detail::inside_box(points, ref);
  if (pts.empty()) return 0.0;
  switch (ref.size()) {
    case 1: {
      double best = ref[0];
      for (const auto& p : pts) best = std::min(best, p[0]);
      return ref[0] - best;
    }
    case 2: return detail::hv2(std::move(pts), ref);
    case 3: return detail::hv3(std::move(pts), ref);
    default: return hypervolume_mc(pts, ref).value;
  }
}

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method with
/// potentials). Returns assignment[row] = column.
inline std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw DimensionError("assignment cost matrix must be square");
  if (!cost.allFinite()) throw std::invalid_argument("assignment cost matrix has non-finite entries");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assign(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) assign[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  return assign;
}

inline constexpr std::size_t kEmdMaxPoints = 2000;

/// Mean Euclidean cost of the optimal one-to-one matching between equal-size sets.
inline double emd(const std::vector<Eigen::VectorXd>& generated, const std::vector<Eigen::VectorXd>& reference) {
  if (generated.size() != reference.size()) throw std::invalid_argument("emd needs equal-size point sets");
  if (generated.empty()) throw std::invalid_argument("emd needs nonempty point sets");
  if (generated.size() > kEmdMaxPoints) throw std::invalid_argument("emd point count exceeds 2000");
  const auto n = static_cast<Eigen::Index>(generated.size());
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      detail::require_dim(generated[i].size(), reference[j].size(), "emd");
      cost(i, j) = (generated[i] - reference[j]).norm();
    }
  }
  const auto assign = hungarian(cost);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += cost(i, assign[static_cast<std::size_t>(i)]);
  return total / static_cast<double>(n);
}

/// Evenly strided subset of `n` points, preserving order.
inline std::vector<Eigen::VectorXd> stride_subsample(const std::vector<Eigen::VectorXd>& pts, std::size_t n) {
  if (n >= pts.size()) return pts;
  std::vector<Eigen::VectorXd> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(pts[i * pts.size() / n]);
  return out;
}

struct QualityScores {
  double mean_log_likelihood = 0.0;
  std::vector<double> per_sample;
};

inline QualityScores quality_scores(const Eigen::MatrixXd& positions, const GaussianMixtureManifold& model) {
  QualityScores q;
  q.per_sample.reserve(static_cast<std::size_t>(positions.cols()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < positions.cols(); ++i) {
    const double ll = log_density(model, positions.col(i));
    q.per_sample.push_back(ll);
    acc += ll;
  }
  q.mean_log_likelihood = positions.cols() > 0 ? acc / static_cast<double>(positions.cols()) : 0.0;
  return q;
}

/// Largest pairwise distance within a point set.
inline double max_pairwise_distance(const std::vector<Eigen::VectorXd>& pts) {
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::max(best, (pts[i] - pts[j]).norm());
  }
  return best;
}

struct MetricsSpec {
  Eigen::VectorXd reference;
  bool emd = true;
  int emd_front_points = 2000;
  double stationary_tol = 0.06;
};

struct MetricReport {
  double hv = 0.0;
  double hv_std_error = 0.0;
  Eigen::VectorXd hv_reference;
  std::optional<double> emd;
  std::optional<double> mean_front_distance;
  double mean_log_likelihood = 0.0;
  double pct_stationary = 0.0;
  int n_points = 0;
  int n_nondominated = 0;
  double spread = 0.0;
  Eigen::VectorXd mean_objectives;
};

inline MetricReport report(const Population& pop, const ObjectiveSet& set, const GaussianMixtureManifold& model,
                           const MetricsSpec& spec) {
  detail::require_dim(spec.reference.size(), set.size(), "metrics reference point");
  const int n = pop.size();
  if (n < 1) throw std::invalid_argument("report needs a nonempty population");
  if (!pop.positions.allFinite()) throw std::runtime_error("sampler diverged: non-finite particle positions");

  std::vector<Eigen::VectorXd> ys;
  ys.reserve(static_cast<std::size_t>(n));
  int stationary = 0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(set.size());
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd x = pop.positions.col(i);
    ys.push_back(pop.fresh ? Eigen::VectorXd(pop.values.col(i)) : set.eval(x));
    mean += ys.back();
    if (min_norm_weights(set.grad(x)).norm <= spec.stationary_tol) ++stationary;
  }

  MetricReport r;
  r.n_points = n;
  r.hv_reference = spec.reference;
  r.mean_objectives = mean / static_cast<double>(n);
  r.pct_stationary = static_cast<double>(stationary) / static_cast<double>(n);

  std::vector<Eigen::VectorXd> front;
  for (std::size_t k : pareto_filter(ys)) front.push_back(ys[k]);
  r.n_nondominated = static_cast<int>(front.size());
  r.spread = max_pairwise_distance(front);
  if (set.size() <= 3) {
    r.hv = hypervolume(front, spec.reference);
  } else {
    const HvEstimate est = hypervolume_mc(front, spec.reference);
    r.hv = est.value;
    r.hv_std_error = est.std_error;
  }

  r.mean_log_likelihood = quality_scores(pop.positions, model).mean_log_likelihood;

  if (set.has_front()) {
    double acc = 0.0;
    for (const auto& y : ys) acc += set.front_distance(y);
    r.mean_front_distance = acc / static_cast<double>(n);
    if (spec.emd) {
      const auto ref_front = set.front_samples(spec.emd_front_points);
      const std::size_t k = std::min({ys.size(), ref_front.size(), kEmdMaxPoints});
      r.emd = emd(stride_subsample(ys, k), stride_subsample(ref_front, k));
    }
  }
  return r;
}

}  // namespace proud

#endif  // PROUD_METRICS_HPP_
