#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "proud/manifold.hpp"
#include "proud/oracle/brute_force.hpp"
#include "proud/schedule.hpp"
#include "support.hpp"

namespace proud {
namespace {

using test::vec;

GaussianMixtureManifold standard_normal(int d) {
  return GaussianMixtureManifold::create({1.0}, {Eigen::VectorXd::Zero(d)}, {1.0});
}

TEST(Schedule, SingleStep) {
  const auto s = make_linear_schedule(1, 0.1, 0.1, 1.0);
  ASSERT_EQ(s.steps(), 1);
  EXPECT_DOUBLE_EQ(s.beta(1), 0.1);
  EXPECT_DOUBLE_EQ(s.alpha_bar(1), 0.9);
}

TEST(Schedule, TwoStepsFromBetas) {
  const auto s = NoiseSchedule::from_betas({0.1, 0.2}, 1.0);
  EXPECT_DOUBLE_EQ(s.alpha_bar(1), 0.9);
  EXPECT_NEAR(s.alpha_bar(2), 0.72, 1e-15);
}

TEST(Schedule, DefaultSchedulesFinalAlphaBarMatchesDirectProduct) {
  const auto s = make_linear_schedule(1000, 1e-4, 0.02, 1.0);
  long double prod = 1.0L;
  for (int i = 0; i < 1000; ++i) prod *= 1.0L - (1e-4L + (0.02L - 1e-4L) * i / 999.0L);
  EXPECT_NEAR(s.alpha_bar(1000), static_cast<double>(prod), 1e-15);
  EXPECT_NEAR(s.alpha_bar(1000), 4.04e-5, 0.01e-5);
}

TEST(Schedule, Invariants) {
  const auto s = make_linear_schedule(1000, 1e-4, 0.02, 0.7);
  for (int t = 1; t <= 1000; ++t) {
    EXPECT_GT(s.beta(t), 0.0);
    EXPECT_LT(s.beta(t), 1.0);
    EXPECT_GT(s.alpha_bar(t), 0.0);
    EXPECT_LT(s.alpha_bar(t), 1.0);
    EXPECT_GT(s.step_size(t), 0.0);
    EXPECT_DOUBLE_EQ(s.step_size(t), 0.7 * (1.0 - s.alpha_bar(t)));
    if (t > 1) {
      EXPECT_GT(s.beta(t), s.beta(t - 1));
      EXPECT_LT(s.alpha_bar(t), s.alpha_bar(t - 1));
    }
  }
  EXPECT_DOUBLE_EQ(s.beta(1), 1e-4);
  EXPECT_DOUBLE_EQ(s.beta(1000), 0.02);
}

TEST(Schedule, RejectsBadInput) {
  EXPECT_THROW(make_linear_schedule(0, 1e-4, 0.02, 1.0), std::invalid_argument);
  EXPECT_THROW(make_linear_schedule(10, 0.02, 1e-4, 1.0), std::invalid_argument);
  EXPECT_THROW(make_linear_schedule(10, 0.01, 0.01, 1.0), std::invalid_argument);
  EXPECT_THROW(make_linear_schedule(10, 0.0, 0.02, 1.0), std::invalid_argument);
  EXPECT_THROW(make_linear_schedule(10, 1e-4, 1.0, 1.0), std::invalid_argument);
  EXPECT_THROW(make_linear_schedule(10, 1e-4, 0.02, 0.0), std::invalid_argument);
  EXPECT_THROW(NoiseSchedule::from_betas({0.2, 0.1}, 1.0), std::invalid_argument);
  EXPECT_THROW(NoiseSchedule::from_betas({}, 1.0), std::invalid_argument);
  const auto s = make_linear_schedule(10, 1e-4, 0.02, 1.0);
  EXPECT_THROW(s.alpha_bar(0), std::out_of_range);
  EXPECT_THROW(s.alpha_bar(11), std::out_of_range);
}

TEST(Manifold, ValidatesFields) {
  EXPECT_THROW(GaussianMixtureManifold::create({0.5, 0.4}, {vec({0}), vec({1})}, {1, 1}), std::invalid_argument);
  EXPECT_THROW(GaussianMixtureManifold::create({1.0}, {vec({0})}, {0.0}), std::invalid_argument);
  EXPECT_ANY_THROW(GaussianMixtureManifold::create({0.5, 0.5}, {vec({0}), vec({1, 2})}, {1, 1}));
}

TEST(Score, StandardNormalScoreIsMinusX) {
  const auto model = standard_normal(3);
  const auto s = make_linear_schedule(1000, 1e-4, 0.02, 1.0);
  std::mt19937_64 rng(1);
  for (int t : {1, 17, 500, 1000}) {
    const Eigen::VectorXd x = test::normal_vec(3, rng);
    EXPECT_LT((noised_score(model, x, t, s) + x).norm(), 1e-12);
  }
}

TEST(Score, NearDiracComponent) {
  const Eigen::VectorXd mu = vec({0.3, -1.2});
  const auto model = GaussianMixtureManifold::create({1.0}, {mu}, {1e-9});
  const auto s = make_linear_schedule(100, 1e-3, 0.05, 1.0);
  const Eigen::VectorXd x = vec({0.5, 0.25});
  const int t = 40;
  const double ab = s.alpha_bar(t);
  const Eigen::VectorXd want = -(x - std::sqrt(ab) * mu) / (1.0 - ab);
  EXPECT_LT((noised_score(model, x, t, s) - want).norm(), 1e-12);
}

TEST(Score, SymmetricPairHasZeroScoreAtOrigin) {
  const auto model = GaussianMixtureManifold::create({0.5, 0.5}, {vec({1, -2}), vec({-1, 2})}, {0.3, 0.3});
  const auto s = make_linear_schedule(50, 1e-3, 0.05, 1.0);
  for (int t = 1; t <= 50; t += 7) EXPECT_LT(noised_score(model, vec({0, 0}), t, s).norm(), 1e-14);
}

TEST(EpsStar, StandardNormal) {
  const auto model = standard_normal(2);
  const auto s = make_linear_schedule(1000, 1e-4, 0.02, 1.0);
  const Eigen::VectorXd x = vec({0.7, -1.1});
  for (int t : {1, 300, 1000}) {
    EXPECT_LT((eps_star(model, x, t, s) - std::sqrt(1.0 - s.alpha_bar(t)) * x).norm(), 1e-12);
  }
}

TEST(EpsStar, DiracAtThreeQuarters) {
  const Eigen::VectorXd mu = vec({1.0, 2.0});
  const auto model = GaussianMixtureManifold::create({1.0}, {mu}, {1e-9});
  const Eigen::VectorXd x = vec({-0.5, 0.5});
  const Eigen::VectorXd want = (x - std::sqrt(0.75) * mu) / std::sqrt(0.25);
  EXPECT_LT((eps_star_at(model, x, 0.75) - want).norm(), 1e-9);
}

TEST(EpsStar, VanishesAtMode) {
  const Eigen::VectorXd mu = vec({1.0, -0.5, 2.0});
  const auto model = GaussianMixtureManifold::create({1.0}, {mu}, {0.2});
  EXPECT_LT(eps_star_at(model, std::sqrt(0.6) * mu, 0.6).norm(), 1e-14);
}

TEST(LogDensity, StandardNormalAtMode) {
  EXPECT_NEAR(log_density(standard_normal(1), vec({0.0})), -0.5 * std::log(2.0 * M_PI), 1e-15);
  EXPECT_NEAR(log_density(standard_normal(1), vec({0.0})), -0.9189, 1e-4);
}

TEST(LogDensity, FarPointsStayFinite) {
  const auto model = GaussianMixtureManifold::create({0.3, 0.7}, {vec({0, 0}), vec({1, 1})}, {0.02, 0.05});
  // More than 100 standard deviations from both components.
  const double far = log_density(model, vec({6.0, 6.0}));
  EXPECT_TRUE(std::isfinite(far));
  EXPECT_LT(far, -1000.0);
  const double very_far = log_density(model, vec({1e3, -1e3}));
  EXPECT_TRUE(std::isfinite(very_far));
  EXPECT_TRUE(noised_score_at(model, vec({1e3, -1e3}), 1.0).allFinite());
}

TEST(LogDensity, EqualComponentsGiveEqualValuesAtTheirMeans) {
  const auto model = GaussianMixtureManifold::create({0.5, 0.5}, {vec({0, 0}), vec({3, 1})}, {0.4, 0.4});
  EXPECT_NEAR(log_density(model, vec({0, 0})), log_density(model, vec({3, 1})), 1e-14);
}

TEST(Score, RejectsBadArguments) {
  const auto model = standard_normal(2);
  const auto s = make_linear_schedule(10, 1e-3, 0.02, 1.0);
  EXPECT_THROW(noised_score(model, vec({1, 2, 3}), 1, s), DimensionError);
  EXPECT_THROW(noised_score(model, vec({1, 2}), 0, s), std::out_of_range);
  EXPECT_THROW(noised_score(model, vec({1, 2}), 11, s), std::out_of_range);
  EXPECT_THROW(log_density(model, vec({1})), DimensionError);
}

TEST(ScoreProperty, MatchesFiniteDifferencesOfNoisedLogDensity) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::uniform_int_distribution<int> step(1, 1000);
  const auto s = make_linear_schedule(1000, 1e-4, 0.02, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double w = u(rng);
    const auto model = GaussianMixtureManifold::create(
        {w / 2, w / 2, 1 - w}, {test::normal_vec(2, rng), test::normal_vec(2, rng), test::normal_vec(2, rng)},
        {u(rng), u(rng), u(rng)});
    const Eigen::VectorXd x = test::normal_vec(2, rng, 1.5);
    const int t = step(rng);
    const double ab = s.alpha_bar(t);
    const Eigen::VectorXd fd = oracle::fd_gradient(
        [&](const Eigen::VectorXd& y) { return noised_log_density_at(model, y, ab); }, x, 1e-5);
    EXPECT_LT(oracle::rel_err(noised_score(model, x, t, s), fd), 1e-5) << "trial " << trial;
  }
}

TEST(ScoreProperty, ApproachesStandardNormalAtFinalStep) {
  const auto s = make_linear_schedule(1000, 1e-4, 0.02, 1.0);
  ASSERT_LT(s.alpha_bar(1000), 1e-4);
  const auto model = GaussianMixtureManifold::create({0.2, 0.8}, {vec({1, 1}), vec({0.5, -0.5})}, {0.02, 0.1});
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd x = test::normal_vec(2, rng, 2.0);
    EXPECT_LT((noised_score(model, x, 1000, s) + x).norm(), 1e-2);
  }
}

}  // namespace
}  // namespace proud
