#include "jstable/error.hpp"
#include "jstable/stats.hpp"
#include "jstable/synth.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace jstable;

namespace {

LinearSem two_node(double w) {
    Adj a = Adj::Zero(2, 2);
    a(0, 1) = 1;
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(2, 2);
    W(0, 1) = w;
    return LinearSem{Dag(a), W, Eigen::VectorXd::Ones(2)};
}

double sample_corr(const Eigen::MatrixXd& x, int i, int j) {
    Eigen::VectorXd a = x.col(i).array() - x.col(i).mean();
    Eigen::VectorXd b = x.col(j).array() - x.col(j).mean();
    return a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
}

}  // namespace

TEST(SampleDag, EdgeCounts) {
    Rng rng(123);
    EXPECT_EQ(sample_dag(10, 1.0, rng).edge_count(), 10);
    EXPECT_EQ(sample_dag(20, 4.0, rng).edge_count(), 80);
    EXPECT_EQ(sample_dag(7, 0.0, rng).edge_count(), 0);
    EXPECT_THROW(sample_dag(4, 2.0, rng), Error);
    try {
        sample_dag(4, 2.0, rng);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_density);
    }
}

TEST(SampleDag, AcyclicAndDeterministic) {
    for (std::uint64_t s = 0; s < 30; ++s) {
        Rng a(s), b(s);
        Dag g = sample_dag(8, 1.5, a);
        EXPECT_TRUE(is_acyclic(g));
        EXPECT_EQ(g.adj, sample_dag(8, 1.5, b).adj);
    }
}

TEST(SampleWeights, MagnitudeAndSupport) {
    Rng rng(9);
    Dag g = sample_dag(12, 2.0, rng);
    LinearSem sem = sample_weights(g, rng);
    for (int i = 0; i < 12; ++i)
        for (int j = 0; j < 12; ++j) {
            if (g.adj(i, j)) {
                EXPECT_GE(std::abs(sem.weights(i, j)), 0.5);
                EXPECT_LE(std::abs(sem.weights(i, j)), 2.0);
            } else {
                EXPECT_EQ(sem.weights(i, j), 0.0);
            }
        }
    LinearSem empty = sample_weights(Dag(5), rng);
    EXPECT_TRUE(empty.weights.isZero());
}

TEST(SampleWeights, SignFrequencyNearHalf) {
    Rng rng(77);
    Dag g = sample_dag(101, 1.0, rng);  // 101 edges per draw
    long pos = 0, total = 0;
    while (total < 10000) {
        LinearSem sem = sample_weights(g, rng);
        for (int i = 0; i < g.d(); ++i)
            for (int j = 0; j < g.d(); ++j)
                if (g.adj(i, j)) {
                    pos += sem.weights(i, j) > 0;
                    ++total;
                }
    }
    EXPECT_NEAR(static_cast<double>(pos) / total, 0.5, 0.02);
}

TEST(SimulateRegime, SingleNodeVariance) {
    Rng rng(4);
    LinearSem sem{Dag(1), Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Ones(1)};
    const int n = 10000;
    auto ds = simulate_regime(sem, RegimeSpec{"e0", std::nullopt, 0.0}, n, rng);
    Eigen::VectorXd x = ds.data.col(0);
    double var = (x.array() - x.mean()).square().sum() / (n - 1);
    // stderr of the sample variance for N(0,1) is sqrt(2/(n-1))
    EXPECT_NEAR(var, 1.0, 3 * std::sqrt(2.0 / (n - 1)));
}

TEST(SimulateRegime, InterventionSeversDependence) {
    Rng rng(5);
    const int n = 10000;
    auto obs = simulate_regime(two_node(1.0), RegimeSpec{"e0", std::nullopt, 0.0}, n, rng);
    Eigen::VectorXd y = obs.data.col(1);
    double var_y = (y.array() - y.mean()).square().sum() / (n - 1);
    EXPECT_NEAR(var_y, 2.0, 3 * 2.0 * std::sqrt(2.0 / (n - 1)));
    auto intv = simulate_regime(two_node(1.0), RegimeSpec{"e1", 1, 0.0}, n, rng);
    EXPECT_LT(std::abs(sample_corr(intv.data, 0, 1)), 4.0 / std::sqrt(n));
    auto shifted = simulate_regime(two_node(1.0), RegimeSpec{"e2", 1, 3.0}, n, rng);
    EXPECT_NEAR(shifted.data.col(1).mean(), 3.0, 0.05);
}

TEST(SimulateRegime, ObservationalCovarianceMatchesClosedForm) {
    Rng rng(31);
    Dag g = sample_dag(4, 1.0, rng);
    LinearSem sem = sample_weights(g, rng);
    const int n = 200000;
    auto ds = simulate_regime(sem, RegimeSpec{"e0", std::nullopt, 0.0}, n, rng);
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(4, 4);
    Eigen::MatrixXd inv = (I - sem.weights).inverse();
    Eigen::MatrixXd expect = inv.transpose() * inv;
    Eigen::MatrixXd c = ds.data.rowwise() - ds.data.colwise().mean();
    Eigen::MatrixXd emp = c.transpose() * c / (n - 1.0);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double se = std::sqrt((expect(i, i) * expect(j, j) + expect(i, j) * expect(i, j)) / n);
            EXPECT_NEAR(emp(i, j), expect(i, j), 5 * se) << i << "," << j;
        }
}

TEST(MakeBenchmark, ShapeAndTargets) {
    auto data = make_benchmark(12, 1.0, 10, 1000, 123);
    EXPECT_EQ(data.total_rows(), 10000);
    ASSERT_EQ(data.regimes.size(), 10u);
    EXPECT_EQ(data.regimes[0].regime_id, "e0");
    EXPECT_FALSE(data.regimes[0].spec.target.has_value());
    std::set<int> targets;
    for (std::size_t r = 1; r < data.regimes.size(); ++r) {
        ASSERT_TRUE(data.regimes[r].spec.target.has_value());
        targets.insert(*data.regimes[r].spec.target);
    }
    EXPECT_EQ(targets.size(), 9u);
    ASSERT_TRUE(data.truth.has_value());
    EXPECT_EQ(data.truth->edge_count(), 12);
    EXPECT_NO_THROW(data.validate());
}

TEST(MakeBenchmark, SingleRegimeAndTooMany) {
    auto one = make_benchmark(5, 1.0, 1, 300, 1);
    ASSERT_EQ(one.regimes.size(), 1u);
    EXPECT_EQ(one.pooled(), one.regimes[0].data);
    EXPECT_THROW(make_benchmark(4, 1.0, 6, 10, 1), Error);
    auto all = make_benchmark(4, 1.0, 5, 10, 1);
    std::set<int> t;
    for (std::size_t r = 1; r < all.regimes.size(); ++r) t.insert(*all.regimes[r].spec.target);
    EXPECT_EQ(t.size(), 4u);
}

TEST(MakeBenchmark, BitIdenticalForSameSeed) {
    auto a = make_benchmark(6, 1.0, 4, 200, 42);
    auto b = make_benchmark(6, 1.0, 4, 200, 42);
    ASSERT_EQ(a.regimes.size(), b.regimes.size());
    for (std::size_t r = 0; r < a.regimes.size(); ++r) EXPECT_EQ(a.regimes[r].data, b.regimes[r].data);
    auto c = make_benchmark(6, 1.0, 4, 200, 43);
    EXPECT_NE(a.regimes[0].data, c.regimes[0].data);
}

TEST(MakeBenchmark, InterventionTargetIndependentOfOtherColumns) {
    // marginal Fisher-z p-values for (target, non-descendant) should look uniform across seeds;
    // descendants of the target still depend on it
    std::vector<double> ps;
    for (std::uint64_t s = 0; ps.size() < 200; ++s) {
        auto data = make_benchmark(5, 1.0, 2, 300, 1000 + s);
        const auto& reg = data.regimes[1];
        int t = *reg.spec.target;
        for (int k = 1; k < 5; ++k) {
            int other = (t + k) % 5;
            if (has_directed_path(data.truth->adj, t, other)) continue;
            ps.push_back(fisher_z_test(reg.data, t, other, {}));
            break;
        }
    }
    EXPECT_LT(jstable::testing::ks_uniform(ps), jstable::testing::ks_critical_1pct(ps.size()));
}

TEST(Zscore, UnitVarianceZeroMean) {
    Rng rng(2);
    Eigen::MatrixXd x(100, 3);
    for (int i = 0; i < 100; ++i) {
        x(i, 0) = 5 + 3 * rng.normal();
        x(i, 1) = rng.normal();
        x(i, 2) = 7.0;
    }
    Eigen::MatrixXd z = zscore(x);
    for (int c = 0; c < 2; ++c) {
        EXPECT_NEAR(z.col(c).mean(), 0.0, 1e-12);
        EXPECT_NEAR(z.col(c).squaredNorm() / 100, 1.0, 1e-12);
    }
    EXPECT_TRUE(z.col(2).isZero());
}
