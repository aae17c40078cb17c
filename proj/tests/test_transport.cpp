#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "mfcl/transport.hpp"
#include "support.hpp"

using namespace mfcl;

namespace {

WeightedCloud atoms(std::initializer_list<double> x, std::initializer_list<double> w) {
  WeightedCloud c;
  c.points = Eigen::Map<const Eigen::RowVectorXd>(x.begin(), static_cast<Index>(x.size()));
  c.weights = Eigen::Map<const Eigen::VectorXd>(w.begin(), static_cast<Index>(w.size()));
  return c;
}

WeightedCloud shifted(WeightedCloud c, const Eigen::VectorXd& h) {
  c.points.colwise() += h;
  return c;
}

void expect_valid_plan(const TransportResult& r, const WeightedCloud& a, const WeightedCloud& b, int p) {
  EXPECT_LT(marginal_residual(r.plan, a, b), 1e-10);
  for (double m : r.plan.mass) EXPECT_GE(m, 0.0);
  EXPECT_NEAR(plan_cost(r.plan, a, b, p), r.plan.cost, 1e-12);
}

}  // namespace

TEST(ExactUniform, IdenticalCloudsGiveZero) {
  std::mt19937_64 rng(1);
  const auto a = test::random_cloud(rng, 2, 10, true);
  const auto r = w2_exact_uniform(a, a);
  EXPECT_EQ(r.distance, 0.0);
  EXPECT_EQ(r.plan.cost, 0.0);
}

TEST(ExactUniform, Singletons) {
  const auto r = w2_exact_uniform(atoms({0.3}, {1.0}), atoms({-1.2}, {1.0}));
  EXPECT_DOUBLE_EQ(r.distance, 1.5);
}

TEST(ExactUniform, MatchesPermutationBruteForce) {
  std::mt19937_64 rng(2);
  for (int s = 0; s < 20; ++s) {
    const auto a = test::random_cloud(rng, 2, 6, true);
    const auto b = test::random_cloud(rng, 2, 6, true);
    const auto r = w2_exact_uniform(a, b);
    EXPECT_NEAR(r.distance, brute_force_ot(a, b, 2).distance, 1e-10);
    expect_valid_plan(r, a, b, 2);
  }
}

TEST(Weighted, DiracAgainstSplitPair) {
  const auto r = w2_weighted(atoms({0.0}, {1.0}), atoms({-1.0, 1.0}, {0.5, 0.5}));
  EXPECT_NEAR(r.distance, 1.0, 1e-15);
}

TEST(Weighted, MatchesBruteForceOnRandomInstances) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> size(1, 8);
  for (int s = 0; s < 100; ++s) {
    const Index d = 1 + s % 2;
    const auto a = test::random_cloud(rng, d, size(rng), false);
    const auto b = test::random_cloud(rng, d, size(rng), false);
    const auto r2 = w2_weighted(a, b);
    EXPECT_NEAR(r2.distance, brute_force_ot(a, b, 2).distance, 1e-9);
    expect_valid_plan(r2, a, b, 2);
    const auto r1 = w1(a, b);
    EXPECT_NEAR(r1.distance, brute_force_ot(a, b, 1).distance, 1e-9);
    expect_valid_plan(r1, a, b, 1);
    EXPECT_LE(r1.distance, r2.distance + 1e-12);
  }
}

TEST(W1, DiracPair) {
  EXPECT_DOUBLE_EQ(w1(atoms({2.0}, {1.0}), atoms({-0.5}, {1.0})).distance, 2.5);
  std::mt19937_64 rng(4);
  const auto a = test::random_cloud(rng, 2, 7, false);
  EXPECT_NEAR(w1(a, a).distance, 0.0, 1e-15);
}

TEST(BruteForce, OneDimensionalPicksSortedMatching) {
  const auto a = atoms({0.0, 1.0}, {0.5, 0.5});
  const auto b = atoms({1.2, 0.1}, {0.5, 0.5});
  const auto r = brute_force_ot(a, b, 2);
  EXPECT_NEAR(r.distance * r.distance, 0.5 * (0.01 + 0.04), 1e-15);
  EXPECT_EQ(brute_force_ot(atoms({0.4}, {1.0}), atoms({0.4}, {1.0}), 2).distance, 0.0);
}

TEST(Line, UniformCloudsMatchSortedValue) {
  std::mt19937_64 rng(5);
  for (int s = 0; s < 20; ++s) {
    const auto a = test::random_cloud(rng, 1, 50, true);
    const auto b = test::random_cloud(rng, 1, 50, true);
    std::vector<double> xa(a.points.data(), a.points.data() + 50), xb(b.points.data(), b.points.data() + 50);
    std::sort(xa.begin(), xa.end());
    std::sort(xb.begin(), xb.end());
    double c = 0.0;
    for (int k = 0; k < 50; ++k) c += (xa[k] - xb[k]) * (xa[k] - xb[k]) / 50.0;
    EXPECT_NEAR(w2_line(a, b).distance, std::sqrt(c), 1e-14);
    EXPECT_NEAR(w2_exact_uniform(a, b).distance, std::sqrt(c), 1e-12);
  }
}

TEST(Metric, SymmetryAndTriangleInequality) {
  std::mt19937_64 rng(6);
  for (int s = 0; s < 30; ++s) {
    const auto a = test::random_cloud(rng, 2, 7, false);
    const auto b = test::random_cloud(rng, 2, 5, false);
    const auto c = test::random_cloud(rng, 2, 6, false);
    const double ab = w2_weighted(a, b).distance;
    EXPECT_NEAR(ab, w2_weighted(b, a).distance, 1e-10);
    EXPECT_LE(w2_weighted(a, c).distance, ab + w2_weighted(b, c).distance + 1e-9);
  }
}

TEST(Metric, TranslationCovariance) {
  std::mt19937_64 rng(7);
  const auto a = test::random_cloud(rng, 2, 8, false);
  const auto b = test::random_cloud(rng, 2, 6, false);
  const Eigen::VectorXd h = Eigen::Vector2d(0.7, -1.1);
  EXPECT_NEAR(w2_weighted(shifted(a, h), shifted(b, h)).distance, w2_weighted(a, b).distance, 1e-12);
  EXPECT_NEAR(w2_weighted(a, shifted(a, h)).distance, h.norm(), 1e-12);
}

TEST(Metric, KantorovichRubinsteinAudit) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int s = 0; s < 100; ++s) {
    const auto a = test::random_cloud(rng, 1, 6, false);
    const auto b = test::random_cloud(rng, 1, 7, false);
    // f(x) = sum c_k sin(k x + p_k), Lip f <= sum k |c_k|.
    double c[3], p[3], lip = 0.0;
    for (int k = 0; k < 3; ++k) {
      c[k] = u(rng);
      p[k] = 3.0 * u(rng);
      lip += (k + 1) * std::abs(c[k]);
    }
    const auto integral = [&](const WeightedCloud& m) {
      double acc = 0.0;
      for (Index j = 0; j < m.size(); ++j)
        for (int k = 0; k < 3; ++k) acc += m.weights(j) * c[k] * std::sin((k + 1) * m.points(0, j) + p[k]);
      return acc;
    };
    EXPECT_LE(std::abs(integral(a) - integral(b)), lip * w1(a, b).distance * (1.0 + 1e-9));
  }
}

TEST(Sinkhorn, ApproachesZeroForIdenticalClouds) {
  std::mt19937_64 rng(9);
  const auto a = test::random_cloud(rng, 1, 6, true);
  const auto coarse = sinkhorn(a, a, 1e-1, 5000);
  const auto fine = sinkhorn(a, a, 1e-3, 20000);
  EXPECT_EQ(fine.epsilon, 1e-3);
  EXPECT_LT(fine.distance, coarse.distance);
  EXPECT_LT(fine.distance, 0.05);
}

TEST(Sinkhorn, SingletonPair) {
  const auto r = sinkhorn(atoms({0.0}, {1.0}), atoms({0.5}, {1.0}), 1e-2, 100);
  EXPECT_NEAR(r.distance * r.distance, 0.25, 1e-2);
}

TEST(Sinkhorn, UpperBoundsExactDistance) {
  std::mt19937_64 rng(10);
  const auto a = test::random_cloud(rng, 2, 8, false);
  const auto b = test::random_cloud(rng, 2, 8, false);
  const auto r = sinkhorn(a, b, 1e-2, 20000);
  EXPECT_TRUE(r.converged);
  EXPECT_GE(r.distance, w2_weighted(a, b).distance - 1e-9);
}

TEST(Symmetrize, SingleParticleIsUnchanged) {
  std::mt19937_64 rng(11);
  const auto a = test::random_cloud(rng, 2, 1, true);
  const auto b = test::random_cloud(rng, 2, 1, true);
  const auto plan = w2_exact_uniform(a, b).plan;
  const auto sym = symmetrize_plan(plan, 1, a, b);
  EXPECT_EQ(sym.source, plan.source);
  EXPECT_EQ(sym.target, plan.target);
  EXPECT_EQ(sym.mass, plan.mass);
}

TEST(Symmetrize, PreservesCostAndMarginals) {
  std::mt19937_64 rng(12);
  const Eigen::MatrixXd za = test::random_points(rng, 2, 3), zb = test::random_points(rng, 2, 3);
  const auto a = symmetrized_delta(za), b = symmetrized_delta(zb);
  EXPECT_EQ(a.size(), 6);
  const auto r = w2_exact_uniform(a, b);
  const auto sym = symmetrize_plan(r.plan, 3, a, b);
  EXPECT_NEAR(sym.cost, r.plan.cost, 1e-12);
  EXPECT_LT(marginal_residual(sym, a, b), 1e-12);
}

TEST(Permutations, LexicographicOrder) {
  const auto p = permutations(3);
  ASSERT_EQ(p.size(), 6u);
  EXPECT_EQ(p.front(), (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(p.back(), (std::vector<int>{2, 1, 0}));
  EXPECT_TRUE(std::is_sorted(p.begin(), p.end()));
}

TEST(Sinkhorn, SmallEpsilonWithinTwoPercentAtN256) {
  std::mt19937_64 rng(13);
  const auto relative_gap = [&](double shift, bool& above) {
    auto a = test::random_cloud(rng, 2, 256, true);
    auto b = test::random_cloud(rng, 2, 256, true);
    b.points.row(0).array() += shift;
    Eigen::MatrixXd all(2, 512);
    all << a.points, b.points;
    const double diam2 = (all.rowwise().maxCoeff() - all.rowwise().minCoeff()).squaredNorm();
    const double exact = w2_weighted(a, b).distance;
    const auto r = sinkhorn(a, b, 1e-3 * diam2, 20000);
    EXPECT_TRUE(r.converged);
    above = r.distance >= exact - 1e-12;
    return (r.distance - exact) / exact;
  };
  bool above = false;
  EXPECT_LT(relative_gap(1.0, above), 0.02);
  EXPECT_TRUE(above);
  // Two samples of one density: blur dominates, only the upward bias holds.
  relative_gap(0.0, above);
  EXPECT_TRUE(above);
}
