#ifndef PROUD_ORACLE_SUITE_HPP_
#define PROUD_ORACLE_SUITE_HPP_

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "proud/error.hpp"
#include "proud/guidance.hpp"
#include "proud/harness/format.hpp"
#include "proud/metrics.hpp"
#include "proud/mgd.hpp"
#include "proud/objectives.hpp"
#include "proud/oracle/brute_force.hpp"
#include "proud/sampler.hpp"

namespace proud::oracle {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

namespace detail {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n;
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = n(rng);
  }
  return M;
}

inline CheckResult timed(const std::string& name, const std::function<CheckResult()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r = fn();
  r.name = name;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace detail

/// Min-norm weights against an exhaustive simplex grid on 200 random instances.
inline CheckResult check_min_norm(std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> mdist(2, 3), ddist(1, 4);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const int m = mdist(rng), d = ddist(rng);
    const Eigen::MatrixXd G = detail::random_matrix(rng, d, m);
    const double solver = min_norm_weights(G).direction.squaredNorm();
    const double grid = simplex_grid_min(G, m == 2 ? 10000 : 1000);
    worst = std::max(worst, solver - grid);
  }
  return {"", worst <= 1e-6, "max(solver - grid) = " + harness::fmt(worst)};
}

/// KKT residuals of the dual on 500 random instances (m = 1..5), plus grid-search
/// objective agreement for the m <= 2 instances whose optimum lies inside [0, 10]^m.
inline CheckResult check_dual(std::uint64_t seed = 2) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> mdist(1, 5), ddist(1, 3);
  std::uniform_real_distribution<double> phid(0.0, 1.0);
  double kkt = 0.0, grid_gap = 0.0;
  int solved = 0, unbounded = 0, grid_checked = 0;
  for (int k = 0; k < 500; ++k) {
    const int m = mdist(rng);
    const int d = std::max(m, ddist(rng));
    const Eigen::MatrixXd G = detail::random_matrix(rng, d, m);
    const Eigen::VectorXd eps = detail::random_matrix(rng, d, 1);
    const double phi = phid(rng);
    Eigen::VectorXd lambda;
    try {
      lambda = solve_dual(eps, G, phi);
    } catch (const DualUnbounded&) {
      ++unbounded;
      continue;
    }
    ++solved;
    const Eigen::VectorXd g = eps + G * lambda;
    const Eigen::VectorXd slack = G.transpose() * g - Eigen::VectorXd::Constant(m, phi);
    kkt = std::max(kkt, std::max(0.0, -lambda.minCoeff()));
    kkt = std::max(kkt, std::max(0.0, -slack.minCoeff()));
    kkt = std::max(kkt, lambda.cwiseProduct(slack).cwiseAbs().maxCoeff());
    if (m <= 2 && d <= 3 && lambda.maxCoeff() < 9.0) {
      ++grid_checked;
      const double mine = -0.5 * g.squaredNorm() + phi * lambda.sum();
      grid_gap = std::max(grid_gap, std::abs(mine - dual_grid_max(eps, G, phi, 10.0, 1e-3)));
    }
  }
  std::ostringstream s;
  s << "solved " << solved << ", unbounded " << unbounded << ", max KKT residual " << harness::fmt(kkt)
    << ", grid-checked " << grid_checked << ", max grid gap " << harness::fmt(grid_gap);
  return {"", kkt <= 1e-6 && grid_gap <= 1e-4 && grid_checked > 0, s.str()};
}

/// Objective gradients and the diversity gradient against central differences.
inline CheckResult check_gradients(std::uint64_t seed = 3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  double worst = 0.0;
  for (const ObjectiveSet& set : {two_anchor_benchmark(2), two_anchor_benchmark(5), three_anchor_benchmark(3),
                                  three_anchor_benchmark(6)}) {
    for (int k = 0; k < 100; ++k) {
      Eigen::VectorXd x(set.dim());
      for (auto& v : x) v = n(rng);
      const Eigen::MatrixXd G = set.grad(x);
      for (int i = 0; i < set.size(); ++i) {
        const auto fi = [&](const Eigen::VectorXd& y) { return set.eval(y)[i]; };
        worst = std::max(worst, rel_err(G.col(i), fd_gradient(fi, x, 1e-5)));
      }
    }
    for (int k = 0; k < 20; ++k) {
      std::vector<Eigen::VectorXd> xs(3, Eigen::VectorXd(set.dim()));
      for (auto& x : xs) {
        for (auto& v : x) v = n(rng);
      }
      Eigen::MatrixXd values(set.size(), 3);
      for (int j = 0; j < 3; ++j) values.col(j) = set.eval(xs[static_cast<std::size_t>(j)]);
      for (int i = 0; i < 3; ++i) {
        const Eigen::VectorXd analytic = diversity_gradient(values, set.grad(xs[static_cast<std::size_t>(i)]), i);
        const auto energy = [&](const Eigen::VectorXd& y) {
          std::vector<Eigen::VectorXd> ys;
          for (int j = 0; j < 3; ++j) ys.push_back(set.eval(j == i ? y : xs[static_cast<std::size_t>(j)]));
          return diversity_energy(ys);
        };
        const double h = 1e-6 * std::max(1.0, xs[static_cast<std::size_t>(i)].norm());
        worst = std::max(worst, rel_err(analytic, fd_gradient(energy, xs[static_cast<std::size_t>(i)], h)));
      }
    }
  }
  return {"", worst < 1e-5, "max relative error " + harness::fmt(worst)};
}

/// Exact 3-objective hypervolume against Monte Carlo (1e6 samples) on 50 instances.
inline CheckResult check_hv3(std::uint64_t seed = 4) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> ndist(1, 12);
  const Eigen::VectorXd ref = Eigen::VectorXd::Ones(3);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(ndist(rng)), Eigen::VectorXd(3));
    for (auto& p : pts) {
      for (auto& v : p) v = u(rng);
    }
    const double exact = hypervolume(pts, ref);
    const McEstimate mc = hypervolume_mc_box(pts, ref, 1'000'000, seed * 1000 + static_cast<unsigned>(k));
    worst = std::max(worst, std::abs(exact - mc.value) / std::max(mc.std_error, 1e-12));
  }
  return {"", worst <= 3.0, "max |exact - MC| / SE = " + harness::fmt(worst)};
}

/// Hungarian matching cost against permutation enumeration for n <= 7.
inline CheckResult check_emd(std::uint64_t seed = 5) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> ndist(1, 7);
  std::normal_distribution<double> n;
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const int size = ndist(rng);
    std::vector<Eigen::VectorXd> a(static_cast<std::size_t>(size), Eigen::VectorXd(2)), b = a;
    for (auto& p : a) {
      for (auto& v : p) v = n(rng);
    }
    for (auto& p : b) {
      for (auto& v : p) v = n(rng);
    }
    worst = std::max(worst, std::abs(emd(a, b) - emd_brute(a, b)));
  }
  return {"", worst <= 1e-12, "max |hungarian - brute| = " + harness::fmt(worst)};
}

/// pareto_filter against all-pairs comparison, including ties and duplicates.
inline CheckResult check_pareto(std::uint64_t seed = 6) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> grid(0, 6), mdist(2, 4), ndist(1, 200);
  int mismatches = 0;
  for (int k = 0; k < 50; ++k) {
    const int m = mdist(rng);
    std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(ndist(rng)), Eigen::VectorXd(m));
    for (auto& p : pts) {
      for (auto& v : p) v = grid(rng);  // coarse lattice forces ties
    }
    if (pareto_filter(pts) != pareto_brute(pts)) ++mismatches;
  }
  return {"", mismatches == 0, std::to_string(mismatches) + " mismatching instances"};
}

inline std::vector<CheckResult> run_suite() {
  return {
      detail::timed("min-norm vs simplex grid", [] { return check_min_norm(); }),
      detail::timed("dual KKT and grid search", [] { return check_dual(); }),
      detail::timed("gradients vs finite differences", [] { return check_gradients(); }),
      detail::timed("3-D hypervolume vs Monte Carlo", [] { return check_hv3(); }),
      detail::timed("Hungarian EMD vs permutations", [] { return check_emd(); }),
      detail::timed("pareto_filter vs all pairs", [] { return check_pareto(); }),
  };
}

}  // namespace proud::oracle

#endif  // PROUD_ORACLE_SUITE_HPP_
