#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "proud/manifold.hpp"
#include "proud/objectives.hpp"
#include "proud/oracle/brute_force.hpp"
#include "proud/sampler.hpp"
#include "proud/schedule.hpp"
#include "support.hpp"

namespace proud {
namespace {

using test::vec;

constexpr double kInf = std::numeric_limits<double>::infinity();

GaussianMixtureManifold segment_mixture() {
  std::vector<Eigen::VectorXd> means;
  for (int k = 0; k < 5; ++k) means.push_back(Eigen::VectorXd::Constant(2, 0.5 + 0.125 * k));
  return GaussianMixtureManifold::create({0.2, 0.2, 0.2, 0.2, 0.2}, means, {0.02, 0.02, 0.02, 0.02, 0.02});
}

ObjectiveSet identity_objectives(int d) {
  std::vector<Objective> objs;
  for (int k = 0; k < d; ++k) {
    objs.push_back(CustomObjective{[k](const Eigen::VectorXd& x) { return x[k]; },
                                   [k, d](const Eigen::VectorXd&) {
                                     Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
                                     g[k] = 1.0;
                                     return g;
                                   }});
  }
  return ObjectiveSet(d, objs);
}

TEST(LangevinUpdate, ZeroNoiseArithmetic) {
  // eta = 0.1: x - eta * g with z = 0.
  EXPECT_DOUBLE_EQ(langevin_update(vec({2.0}), vec({0.5}), 0.1, std::sqrt(0.2), vec({0.0}))[0], 1.95);
}

TEST(Diversity, TwoParticlesUnderIdentityMap) {
  Eigen::MatrixXd values(2, 2);
  values << 1, 0, 0, 0;
  const Eigen::VectorXd g = diversity_gradient(values, Eigen::MatrixXd::Identity(2, 2), 0);
  EXPECT_LT((g - vec({-4, 0})).norm(), 1e-12);

  const auto set = identity_objectives(2);
  Population pop;
  pop.positions = values;
  pop.refresh(set);
  EXPECT_LT((diversity_gradient(pop, set, 0) - vec({-4, 0})).norm(), 1e-12);
}

TEST(Diversity, CoincidentValuesContributeNothing) {
  Eigen::MatrixXd values(2, 2);
  values << 0.3, 0.3, 0.1, 0.1;
  EXPECT_EQ(diversity_gradient(values, Eigen::MatrixXd::Identity(2, 2), 1), Eigen::VectorXd::Zero(2));
}

TEST(Diversity, MatchesFiniteDifferencesOfEnergy) {
  std::mt19937_64 rng(41);
  const std::vector<ObjectiveSet> sets = {two_anchor_benchmark(2), three_anchor_benchmark(3), two_anchor_benchmark(5)};
  for (const auto& set : sets) {
    for (int trial = 0; trial < 20; ++trial) {
      Population pop;
      pop.positions = Eigen::MatrixXd(set.dim(), 3);
      for (int i = 0; i < 3; ++i) pop.positions.col(i) = test::normal_vec(set.dim(), rng);
      pop.refresh(set);
      for (int i = 0; i < 3; ++i) {
        auto energy = [&](const Eigen::VectorXd& xi) {
          std::vector<Eigen::VectorXd> ys;
          for (int j = 0; j < 3; ++j) ys.push_back(set.eval(j == i ? xi : Eigen::VectorXd(pop.positions.col(j))));
          return oracle::diversity_energy(ys);
        };
        const Eigen::VectorXd fd = oracle::fd_gradient(energy, pop.positions.col(i), 1e-6);
        EXPECT_LT(oracle::rel_err(diversity_gradient(pop, set, i), fd), 1e-5);
      }
    }
  }
}

TEST(Diversity, NeedsTwoParticles) {
  Eigen::MatrixXd values(2, 1);
  values << 0.1, 0.2;
  EXPECT_ANY_THROW(diversity_gradient(values, Eigen::MatrixXd::Identity(2, 2), 0));
}

TEST(Step, NoiseCorrectnessWithoutGuidance) {
  const auto model = segment_mixture();
  const auto set = two_anchor_benchmark(2);
  const auto sched = make_linear_schedule(50, 1e-3, 0.05, 1.0);
  GuidanceConfig cfg;
  cfg.e_threshold = kInf;
  cfg.gamma = 0.0;
  for (UpdateForm form : {UpdateForm::kLiteral, UpdateForm::kScoreScaled}) {
    SamplerOptions opts;
    opts.form = form;
    std::mt19937_64 rng(42);
    Population pop = initial_population(16, 2, 50, rng);
    const Eigen::MatrixXd x0 = pop.positions;
    std::mt19937_64 copy = rng;
    step(pop, model, sched, set, cfg, opts, rng);
    EXPECT_EQ(pop.step, 49);

    std::normal_distribution<double> normal;
    const double eta = sched.step_size(50), ab = sched.alpha_bar(50);
    const double h = form == UpdateForm::kLiteral ? eta : eta / std::sqrt(1.0 - ab);
    for (int i = 0; i < 16; ++i) {
      Eigen::VectorXd z(2);
      for (int k = 0; k < 2; ++k) z[k] = normal(copy);
      const Eigen::VectorXd x = x0.col(i);
      const Eigen::VectorXd want = x - h * eps_star(model, x, 50, sched) + std::sqrt(2.0 * eta) * z;
      EXPECT_LT((pop.positions.col(i) - want).norm(), 1e-14);
    }
  }
}

TEST(Step, InfiniteThresholdMatchesPureDiffusionBitwise) {
  const auto model = segment_mixture();
  const auto set = two_anchor_benchmark(2);
  const auto sched = make_linear_schedule(100, 1e-4, 0.02, 1.0);
  GuidanceConfig proud_cfg;
  proud_cfg.e_threshold = kInf;
  GuidanceConfig pure = proud_cfg;
  pure.method = Method::DM_MMGD;
  pure.fixed_lambda = 0.0;
  std::mt19937_64 r1(43), r2(43);
  const auto a = run(64, model, sched, set, proud_cfg, {}, r1);
  const auto b = run(64, model, sched, set, pure, {}, r2);
  EXPECT_EQ(a.positions, b.positions);
}

TEST(Step, MgdIgnoresTheManifold) {
  const auto set = two_anchor_benchmark(2);
  const auto sched = make_linear_schedule(100, 1e-4, 0.02, 1.0);
  GuidanceConfig cfg;
  cfg.method = Method::M_MGD;
  const auto other = GaussianMixtureManifold::create({1.0}, {vec({-3, 4})}, {0.5});
  std::mt19937_64 r1(44), r2(44);
  EXPECT_EQ(run(32, segment_mixture(), sched, set, cfg, {}, r1).positions,
            run(32, other, sched, set, cfg, {}, r2).positions);
}

TEST(Step, SingleParticleHasNoDiversityTerm) {
  const auto sched = make_linear_schedule(100, 1e-4, 0.02, 1.0);
  GuidanceConfig with, without;
  with.gamma = 0.2;
  without.gamma = 0.0;
  std::mt19937_64 r1(45), r2(45);
  EXPECT_EQ(run(1, segment_mixture(), sched, two_anchor_benchmark(2), with, {}, r1).positions,
            run(1, segment_mixture(), sched, two_anchor_benchmark(2), without, {}, r2).positions);
}

TEST(Run, ZeroStepsReturnsInitialization) {
  std::mt19937_64 rng(46), copy(46);
  Population pop = initial_population(8, 2, 10, rng);
  const Eigen::MatrixXd init = pop.positions;
  run_steps(pop, segment_mixture(), make_linear_schedule(10, 1e-3, 0.02, 1.0), two_anchor_benchmark(2),
            GuidanceConfig{}, {}, rng, 0);
  EXPECT_EQ(pop.positions, init);
  EXPECT_EQ(pop.step, 10);

  std::normal_distribution<double> normal;
  for (int i = 0; i < 8; ++i) {
    for (int k = 0; k < 2; ++k) EXPECT_EQ(init(k, i), normal(copy));
  }
}

TEST(Run, DeterministicAndThreadCountIndependent) {
  const auto sched = make_linear_schedule(200, 1e-4, 0.02, 1.0);
  GuidanceConfig cfg;
  SamplerOptions one, four;
  four.threads = 4;
  one.record_trace = four.record_trace = true;
  std::mt19937_64 r1(47), r2(47), r3(47);
  const auto a = run(64, segment_mixture(), sched, two_anchor_benchmark(2), cfg, one, r1);
  const auto b = run(64, segment_mixture(), sched, two_anchor_benchmark(2), cfg, one, r2);
  const auto c = run(64, segment_mixture(), sched, two_anchor_benchmark(2), cfg, four, r3);
  EXPECT_EQ(a.positions, b.positions);
  EXPECT_EQ(a.positions, c.positions);
  EXPECT_EQ(a.values, c.values);
  ASSERT_EQ(a.trace.size(), c.trace.size());
  for (std::size_t k = 0; k < a.trace.size(); ++k) {
    EXPECT_EQ(a.trace[k].particle, c.trace[k].particle);
    EXPECT_EQ(a.trace[k].lambda, c.trace[k].lambda);
  }
}

TEST(Run, ReachesStationarityOnTheSegmentBenchmark) {
  const auto sched = make_linear_schedule(1000, 1e-4, 0.02, 1.0);
  const auto set = two_anchor_benchmark(2);
  GuidanceConfig cfg;
  std::mt19937_64 rng(0);
  const auto pop = run(512, segment_mixture(), sched, set, cfg, {}, rng);
  EXPECT_EQ(pop.step, 0);
  ASSERT_TRUE(pop.fresh);
  int near = 0;
  for (int i = 0; i < pop.size(); ++i) near += min_norm_weights(set.grad(pop.positions.col(i))).norm <= 2.0 * cfg.e_threshold;
  EXPECT_GE(near, static_cast<int>(0.9 * 512));
  for (int i = 0; i < pop.size(); ++i) EXPECT_EQ(pop.values.col(i), set.eval(pop.positions.col(i)));
}

TEST(Run, TraceRecordsEveryBranch) {
  const int T = 1000, N = 512;
  const auto sched = make_linear_schedule(T, 1e-4, 0.02, 1.0);
  GuidanceConfig cfg;
  SamplerOptions opts;
  opts.record_trace = true;
  std::mt19937_64 rng(0);
  const auto pop = run(N, segment_mixture(), sched, two_anchor_benchmark(2), cfg, opts, rng);
  ASSERT_EQ(pop.trace.size(), static_cast<std::size_t>(T) * N);

  std::vector<int> unconstrained(T + 1, 0);
  for (const auto& r : pop.trace) {
    ASSERT_GE(r.step, 1);
    ASSERT_LE(r.step, T);
    ASSERT_EQ(r.lambda.size(), 2);
    if (std::isinf(r.phi)) {
      EXPECT_LT(r.phi, 0.0);
      EXPECT_EQ(r.lambda, Eigen::VectorXd::Zero(2));
      EXPECT_LE(r.mgd_norm, cfg.e_threshold);
      ++unconstrained[r.step];
    } else {
      EXPECT_GT(r.mgd_norm, cfg.e_threshold);
      EXPECT_DOUBLE_EQ(r.phi, cfg.alpha * r.mgd_norm);
      EXPECT_GE(r.lambda.minCoeff(), 0.0);
    }
  }
  // Over the last 10% of steps (t = 100 down to 1) the unconstrained share grows.
  // Single-step counts carry binomial noise of a few particles, so the check runs
  // on consecutive 10-step windows.
  int prev = -1;
  for (int hi = T / 10; hi > 0; hi -= 10) {
    int window = 0;
    for (int t = hi; t > hi - 10; --t) window += unconstrained[t];
    EXPECT_GE(window, prev) << "steps " << hi << ".." << hi - 9;
    prev = window;
  }
  EXPECT_GT(unconstrained[1], unconstrained[T / 10]);
}

TEST(Run, StandardGaussianTargetWithoutGuidance) {
  const int N = 4096;
  const auto model = GaussianMixtureManifold::create({1.0}, {Eigen::VectorXd::Zero(1)}, {1.0});
  const auto sched = make_linear_schedule(1000, 1e-4, 0.02, 1.0);
  GuidanceConfig cfg;
  cfg.e_threshold = kInf;
  cfg.gamma = 0.0;
  std::mt19937_64 rng(48);
  const auto pop = run(N, model, sched, two_anchor_benchmark(1), cfg, {}, rng);
  const double mean = pop.positions.mean();
  const double var = (pop.positions.array() - mean).square().sum() / (N - 1);
  EXPECT_LT(std::abs(mean), 3.0 / std::sqrt(double(N)));
  EXPECT_LT(std::abs(var - 1.0), 0.15);
}

TEST(Step, RejectsFinishedPopulationAndBadShapes) {
  std::mt19937_64 rng(49);
  Population pop = initial_population(4, 2, 1, rng);
  pop.step = 0;
  const auto sched = make_linear_schedule(1, 0.01, 0.01, 1.0);
  EXPECT_THROW(step(pop, segment_mixture(), sched, two_anchor_benchmark(2), GuidanceConfig{}, {}, rng), std::logic_error);
  Population wrong = initial_population(4, 3, 1, rng);
  EXPECT_THROW(step(wrong, segment_mixture(), sched, two_anchor_benchmark(2), GuidanceConfig{}, {}, rng), DimensionError);
  EXPECT_THROW(initial_population(0, 2, 1, rng), std::invalid_argument);
}

}  // namespace
}  // namespace proud
