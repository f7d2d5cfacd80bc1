#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "proud/mgd.hpp"
#include "proud/objectives.hpp"
#include "proud/oracle/brute_force.hpp"
#include "support.hpp"

namespace proud {
namespace {

using test::cols;
using test::vec;

TEST(MinNorm, SingleGradient) {
  const auto s = min_norm_weights(cols({vec({3, 4})}));
  EXPECT_EQ(s.weights, vec({1.0}));
  EXPECT_EQ(s.direction, vec({3, 4}));
  EXPECT_DOUBLE_EQ(s.norm, 5.0);
}

TEST(MinNorm, OrthogonalPair) {
  const auto s = min_norm_weights(cols({vec({1, 0}), vec({0, 1})}));
  EXPECT_NEAR(s.weights[0], 0.5, 1e-12);
  EXPECT_NEAR(s.weights[1], 0.5, 1e-12);
  EXPECT_LT((s.direction - vec({0.5, 0.5})).norm(), 1e-12);
  // grid oracle over the weight with step 1e-4
  EXPECT_NEAR(s.norm * s.norm, oracle::simplex_grid_min(cols({vec({1, 0}), vec({0, 1})}), 10000), 1e-12);
}

TEST(MinNorm, ParallelPairPicksShorter) {
  const auto s = min_norm_weights(std::vector<Eigen::VectorXd>{vec({1, 0}), vec({2, 0})});
  EXPECT_EQ(s.weights, vec({1.0, 0.0}));
  EXPECT_EQ(s.direction, vec({1, 0}));
}

TEST(MinNorm, RejectsBadInput) {
  EXPECT_ANY_THROW(min_norm_weights(std::vector<Eigen::VectorXd>{}));
  EXPECT_THROW(min_norm_weights(std::vector<Eigen::VectorXd>{vec({1, 0}), vec({1})}), DimensionError);
}

TEST(MinNormProperty, RandomInstances) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> mdist(1, 6), ddist(1, 5);
  for (int trial = 0; trial < 500; ++trial) {
    const int m = mdist(rng), d = ddist(rng);
    const Eigen::MatrixXd G = test::normal_mat(d, m, rng);
    const auto s = min_norm_weights(G);
    ASSERT_EQ(s.weights.size(), m);
    EXPECT_GE(s.weights.minCoeff(), 0.0);
    EXPECT_NEAR(s.weights.sum(), 1.0, 1e-9);
    EXPECT_EQ(s.direction, G * s.weights);
    EXPECT_DOUBLE_EQ(s.norm, s.direction.norm());
    const double v2 = s.direction.squaredNorm();
    double shortest = G.col(0).norm();
    for (int i = 0; i < m; ++i) {
      EXPECT_GE(s.direction.dot(G.col(i)), v2 - 1e-8) << "trial " << trial;
      shortest = std::min(shortest, G.col(i).norm());
    }
    EXPECT_LE(s.norm, shortest + 1e-8);

    const double c = 0.1 + 3.0 * (trial % 7);
    const auto scaled = min_norm_weights(c * G);
    // With the origin inside the hull every weight vector in a whole face is optimal,
    // so only the direction is determined there.
    if (s.norm > 1e-6) EXPECT_LT((scaled.weights - s.weights).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((scaled.direction - c * s.direction).norm(), 1e-8 * std::max(1.0, c));
  }
}

TEST(MinNormProperty, AgreesWithSimplexGrid) {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> mdist(2, 3), ddist(1, 4);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd G = test::normal_mat(ddist(rng), mdist(rng), rng);
    const double got = min_norm_weights(G).norm;
    EXPECT_LE(got * got - oracle::simplex_grid_min(G, 1000), 1e-6);
  }
}

TEST(Dominates, Definition) {
  EXPECT_TRUE(dominates(vec({1, 2}), vec({2, 2})));
  EXPECT_FALSE(dominates(vec({1, 2}), vec({2, 1})));
  EXPECT_FALSE(dominates(vec({1, 2}), vec({1, 2})));
  EXPECT_THROW(dominates(vec({1, 2}), vec({1})), DimensionError);
}

TEST(ParetoFilter, Examples) {
  EXPECT_EQ(pareto_filter({vec({0, 1}), vec({1, 0}), vec({1, 1})}), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(pareto_filter({vec({2, 2}), vec({2, 2}), vec({2, 2})}), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_ANY_THROW(pareto_filter({}));
}

TEST(ParetoFilter, MatchesAllPairs) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> coarse(0, 6);
  std::uniform_real_distribution<double> fine(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Eigen::VectorXd> pts;
    for (int i = 0; i < 200; ++i) {
      // Half the instances sit on a coarse lattice so ties and duplicates occur.
      if (trial % 2) pts.push_back(vec({double(coarse(rng)), double(coarse(rng)), double(coarse(rng))}));
      else pts.push_back(vec({fine(rng), fine(rng), fine(rng)}));
    }
    EXPECT_EQ(pareto_filter(pts), oracle::pareto_brute(pts));
  }
}

TEST(Stationary, Examples) {
  EXPECT_TRUE(is_stationary(cols({vec({1, 2}), vec({-1, -2})}), 1e-8));
  EXPECT_FALSE(is_stationary(cols({vec({1, 0})}), 1e-3));
  const auto set = two_anchor_benchmark(2);
  for (double k : {0.0, 0.3, 0.5, 0.99}) {
    EXPECT_TRUE(is_stationary(set.grad(Eigen::VectorXd::Constant(2, 0.5 + 0.5 * k)), 1e-8));
  }
  EXPECT_FALSE(is_stationary(set.grad(vec({0.5, 1.0})), 1e-8));
}

}  // namespace
}  // namespace proud
