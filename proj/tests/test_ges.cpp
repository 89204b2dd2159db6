#include "jstable/error.hpp"
#include "jstable/ges.hpp"
#include "jstable/stats.hpp"
#include "jstable/synth.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace jstable;

namespace {

Eigen::MatrixXd noise(int n, int d, Rng& rng) {
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
    return x;
}

MultiRegimeData wrap(std::vector<Eigen::MatrixXd> mats) {
    MultiRegimeData data;
    const int d = static_cast<int>(mats.front().cols());
    data.labels = default_labels(d);
    for (std::size_t r = 0; r < mats.size(); ++r)
        data.regimes.push_back({"e" + std::to_string(r), mats[r], RegimeSpec{"e" + std::to_string(r), {}, 0.0}});
    return data;
}

// total BIC of a DAG scored directly with bic_local
double dag_bic(const Eigen::MatrixXd& x, const Adj& a) {
    double s = 0;
    for (int v = 0; v < a.rows(); ++v) {
        std::vector<int> pa;
        for (int u = 0; u < a.rows(); ++u)
            if (a(u, v)) pa.push_back(u);
        s += bic_local(x, v, pa);
    }
    return s;
}

std::vector<Adj> all_dags(int d) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) pairs.emplace_back(i, j);
    std::vector<Adj> out;
    long total = 1;
    for (std::size_t k = 0; k < pairs.size(); ++k) total *= 3;
    for (long code = 0; code < total; ++code) {
        Adj a = Adj::Zero(d, d);
        long c = code;
        for (auto [i, j] : pairs) {
            int t = c % 3;
            c /= 3;
            if (t == 1) a(i, j) = 1;
            if (t == 2) a(j, i) = 1;
        }
        if (is_acyclic(a)) out.push_back(a);
    }
    return out;
}

int step_of_pair(const SearchResult& r, int a, int b) {
    for (const auto& e : r.log)
        if (e.move.kind == Move::Add && ((e.move.u == a && e.move.v == b) || (e.move.u == b && e.move.v == a)))
            return e.step;
    return 1 << 20;
}

}  // namespace

TEST(GesSearch, TwoVariablesMatchesExhaustiveScoring) {
    Rng rng(1);
    Eigen::MatrixXd x = noise(2000, 2, rng);
    x.col(1) += 2.0 * x.col(0);
    SearchResult r = ges_search(x, ScoreConfig{});
    Eigen::MatrixXd z = zscore(x);
    double best = -1e300;
    Adj best_adj;
    for (const Adj& a : all_dags(2)) {
        double s = dag_bic(z, a);
        if (s > best + 1e-9) {
            best = s;
            best_adj = a;
        }
    }
    EXPECT_EQ(skeleton(r.dag).sum(), 2);
    EXPECT_EQ(skeleton(r.dag), skeleton(best_adj));
    EXPECT_NEAR(r.score, best, 1e-6 * std::abs(best));
}

TEST(GesSearch, IndependentColumnsGiveEmptyGraph) {
    int empty = 0;
    for (std::uint64_t s = 0; s < 40; ++s) {
        Rng rng(100 + s);
        empty += ges_search(noise(500, 4, rng), ScoreConfig{}).dag.edge_count() == 0;
    }
    EXPECT_GE(empty, 38);  // 95%
}

TEST(GesSearch, ChainSkeletonMatchesBestScoringClass) {
    Rng rng(2);
    Eigen::MatrixXd x = noise(5000, 3, rng);
    x.col(1) += 0.8 * x.col(0);
    x.col(2) += 0.8 * x.col(1);
    SearchResult r = ges_search(x, ScoreConfig{});
    Eigen::MatrixXd z = zscore(x);
    double best = -1e300;
    Adj best_adj;
    for (const Adj& a : all_dags(3)) {
        double s = dag_bic(z, a);
        if (s > best + 1e-9) {
            best = s;
            best_adj = a;
        }
    }
    Adj chain = Adj::Zero(3, 3);
    chain(0, 1) = chain(1, 0) = chain(1, 2) = chain(2, 1) = 1;
    EXPECT_EQ(skeleton(best_adj), chain);
    EXPECT_EQ(skeleton(r.dag), chain);
    EXPECT_TRUE(is_acyclic(r.dag));
}

TEST(CgesDelta, CompositionWithTriangles) {
    Rng rng(3);
    ScoreConfig cfg;
    cfg.lambda_top = 0.1;
    cfg.lambda_tri = 0.05;
    SearchState st(std::vector<Eigen::MatrixXd>{noise(200, 4, rng)}, cfg);
    for (auto m : {Move{Move::Add, 0, 2}, Move{Move::Add, 1, 2}, Move{Move::Add, 0, 3}, Move{Move::Add, 1, 3}})
        st.apply(m);
    ScoreDelta dl = cges_delta(st, Move{Move::Add, 0, 1});
    EXPECT_EQ(dl.d_f1, 1);
    EXPECT_EQ(dl.d_f2, 2);
    EXPECT_NEAR(dl.total, dl.d_bic - 0.1 - 0.1, 1e-12);

    ScoreConfig plain;
    SearchState st0(std::vector<Eigen::MatrixXd>{noise(200, 4, rng)}, plain);
    ScoreDelta d0 = cges_delta(st0, Move{Move::Add, 0, 1});
    EXPECT_EQ(d0.total, d0.d_bic);
}

TEST(CgesDelta, DeleteUniqueEdgeSigns) {
    Rng rng(4);
    SearchState st(std::vector<Eigen::MatrixXd>{noise(200, 3, rng)}, ScoreConfig{});
    st.apply({Move::Add, 0, 1});
    st.apply({Move::Add, 0, 2});
    st.apply({Move::Add, 1, 2});
    ScoreDelta dl = cges_delta(st, Move{Move::Delete, 0, 1});
    EXPECT_EQ(dl.d_f1, -1);
    EXPECT_EQ(dl.d_f2, -1);
}

TEST(CgesDelta, IllegalMovesAndIndegreeCap) {
    Rng rng(5);
    ScoreConfig cfg;
    cfg.d_max = 1;
    SearchState st(std::vector<Eigen::MatrixXd>{noise(200, 3, rng)}, cfg);
    st.apply({Move::Add, 0, 1});
    st.apply({Move::Add, 1, 2});
    EXPECT_THROW(cges_delta(st, Move{Move::Add, 2, 0}), Error);
    try {
        cges_delta(st, Move{Move::Add, 2, 0});
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_move);
    }
    EXPECT_TRUE(cges_delta(st, Move{Move::Add, 0, 2}).rejected());
    EXPECT_THROW(cges_delta(st, Move{Move::Delete, 2, 1}), Error);
}

TEST(JstabLocal, Examples) {
    Rng rng(6);
    Eigen::MatrixXd x = noise(100, 2, rng);
    x.col(1) += x.col(0);
    EXPECT_DOUBLE_EQ(tces_jstab_local({x, x}, 1, {0}), 0.0);
    EXPECT_DOUBLE_EQ(tces_jstab_local({x}, 1, {0}), 0.0);
    EXPECT_DOUBLE_EQ(tces_jstab_local({x, x}, 1, {}), 0.0);

    Eigen::MatrixXd a(20, 2), b(20, 2);
    for (int i = 0; i < 20; ++i) {
        a(i, 0) = b(i, 0) = i - 9.5;
        a(i, 1) = 1.0 * a(i, 0);
        b(i, 1) = 1.5 * b(i, 0);
    }
    EXPECT_NEAR(tces_jstab_local({a, b}, 1, {0}, false), 0.5, 1e-12);
    EXPECT_THROW(tces_jstab_local({a.topRows(2), b}, 1, {0}, false), Error);
}

TEST(JstabLocal, ThreeRegimesSumPairwiseNorms) {
    Rng rng(7);
    std::vector<Eigen::MatrixXd> envs;
    for (double w : {0.5, 1.0, 2.0}) {
        Eigen::MatrixXd x = noise(150, 3, rng);
        x.col(2) += w * x.col(0) - 0.3 * x.col(1);
        envs.push_back(x);
    }
    for (bool standardize : {false, true}) {
        std::vector<Eigen::VectorXd> betas;
        for (const auto& raw : envs) {
            Eigen::MatrixXd x = standardize ? zscore(raw) : raw;
            Eigen::MatrixXd A(x.rows(), 3);
            A.col(0).setOnes();
            A.col(1) = x.col(0);
            A.col(2) = x.col(1);
            Eigen::VectorXd t = (A.transpose() * A).ldlt().solve(A.transpose() * x.col(2));
            betas.push_back(t.tail(2));
        }
        double expect = (betas[0] - betas[1]).norm() + (betas[0] - betas[2]).norm() + (betas[1] - betas[2]).norm();
        EXPECT_NEAR(tces_jstab_local(envs, 2, {0, 1}, standardize), expect, 1e-9);
    }
}

TEST(SheafLocal, EmptyCoverAndIidNull) {
    Rng rng(8);
    const int n = 400;
    Eigen::MatrixXd x = noise(n, 3, rng);
    ScoreConfig cfg;
    EXPECT_EQ(tces_sheaf_local(x, 0, {}, cfg), 0.0);
    EXPECT_EQ(tces_sheaf_local(x, 0, {1}, cfg), 0.0);  // overlaps of a 2-chart cover are empty
    double stat = tces_sheaf_local(x, 2, {0, 1}, cfg);
    EXPECT_GE(stat, 0.0);

    // permutation null: same statistic on random half splits drawn here
    std::vector<double> null;
    Rng perm_rng(99);
    for (int rep = 0; rep < 200; ++rep) {
        double total = 0;
        for (int pair = 0; pair < 3; ++pair) {
            int col = 2 - pair;  // overlap of charts omitting the other two
            double acc = 0;
            for (int s = 0; s < cfg.sheaf_splits; ++s) {
                auto p = perm_rng.permutation(n);
                Eigen::MatrixXd A(n / 2, 1), B(n / 2, 1);
                for (int r = 0; r < n / 2; ++r) {
                    A(r, 0) = x(p[r], col);
                    B(r, 0) = x(p[r + n / 2], col);
                }
                acc += energy_distance(A, B);
            }
            total += acc / cfg.sheaf_splits;
        }
        null.push_back(total);
    }
    std::sort(null.begin(), null.end());
    EXPECT_LT(stat, null[189]);
}

TEST(SheafLocal, MetricsAndDeterminism) {
    Rng rng(9);
    Eigen::MatrixXd x = noise(300, 4, rng);
    ScoreConfig cfg;
    for (auto metric : {SheafMetric::Energy, SheafMetric::Mmd, SheafMetric::GaussKl}) {
        cfg.sheaf_metric = metric;
        double a = tces_sheaf_local(x, 3, {0, 1, 2}, cfg);
        EXPECT_GE(a, 0.0);
        EXPECT_EQ(a, tces_sheaf_local(x, 3, {2, 1, 0}, cfg));
    }
    EXPECT_EQ(parse_sheaf_metric("gauss_kl"), SheafMetric::GaussKl);
    EXPECT_EQ(parse_sheaf_metric("mmd"), SheafMetric::Mmd);
    EXPECT_THROW(parse_sheaf_metric("wasserstein"), Error);
}

TEST(TcesSearch, ReducesToGesBitwise) {
    auto data = make_benchmark(6, 1.0, 3, 300, 17);
    ScoreConfig cfg;
    cfg.lambda_top = 0.2;
    SearchResult a = tces_search(data, cfg);
    ScoreConfig with_unused = cfg;
    with_unused.lambda_j = 0.3;
    with_unused.lambda_sheaf = 0.05;
    SearchResult b = ges_search(data, with_unused);
    EXPECT_EQ(a.dag.adj, b.dag.adj);
    ASSERT_EQ(a.log.size(), b.log.size());
    for (std::size_t k = 0; k < a.log.size(); ++k) {
        EXPECT_EQ(a.log[k].delta.total, b.log[k].delta.total);
        EXPECT_EQ(a.log[k].move.u, b.log[k].move.u);
        EXPECT_EQ(a.log[k].move.v, b.log[k].move.v);
        EXPECT_EQ(a.log[k].move.kind, b.log[k].move.kind);
    }
    EXPECT_EQ(a.score, b.score);
}

TEST(TcesSearch, TelescopingMonotoneAndDecomposable) {
    auto data = make_benchmark(7, 1.0, 3, 200, 5);
    ScoreConfig cfg;
    cfg.lambda_top = 0.1;
    cfg.lambda_tri = 0.05;
    cfg.lambda_j = 0.1;
    cfg.lambda_sheaf = 0.05;
    SearchResult r = tces_search(data, cfg);
    ASSERT_FALSE(r.log.empty());
    double sum = 0;
    for (const auto& e : r.log) {
        EXPECT_GT(e.delta.total, 1e-9);
        EXPECT_NEAR(e.weighted_j, cfg.lambda_j * e.delta.d_j, 1e-15);
        sum += e.delta.total;
    }
    EXPECT_NEAR(sum, r.score - r.empty_score, 1e-6);

    // replay with a fresh state after every move: from-scratch totals equal incremental sums
    SearchState inc(data, cfg);
    double running = inc.total_score();
    for (const auto& e : r.log) {
        running += inc.delta(e.move).total;
        inc.apply(e.move);
        EXPECT_EQ(inc.skel(), skeleton(inc.adj()));
        SearchState fresh(data, cfg);
        fresh.set_graph(inc.adj());
        EXPECT_NEAR(fresh.total_score(), running, 1e-6);
    }
    EXPECT_EQ(inc.adj(), r.dag.adj);
}

TEST(TcesSearch, VaryingMechanismAcceptedLater) {
    // X->Y invariant vs regime-varying slope, other edges of similar strength
    int later = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        int rank[2];
        for (int varying = 0; varying < 2; ++varying) {
            Rng rng(derive_seed(777, s));
            std::vector<Eigen::MatrixXd> envs;
            const double slopes_var[3] = {0.2, 1.0, 1.8};
            for (int e = 0; e < 3; ++e) {
                Eigen::MatrixXd x = noise(500, 6, rng);
                x.col(1) += (varying ? slopes_var[e] : 1.0) * x.col(0);
                x.col(3) += 0.9 * x.col(2);
                x.col(5) += 0.9 * x.col(4);
                envs.push_back(x);
            }
            ScoreConfig cfg;
            cfg.lambda_j = 0.1;
            rank[varying] = step_of_pair(tces_search(wrap(envs), cfg), 0, 1);
        }
        later += rank[1] > rank[0];
    }
    EXPECT_GE(later, 14);
}

TEST(Bootstrap, FrequenciesAndDeterminism) {
    Rng rng(10);
    Eigen::MatrixXd x = noise(400, 3, rng);
    x.col(1) += 1.5 * x.col(0);
    auto data = wrap({x});
    ScoreConfig cfg;
    BootstrapFrequencies one = bootstrap_ges(data, 1, cfg, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            EXPECT_TRUE(one.directed(i, j) == 0.0 || one.directed(i, j) == 1.0);
            EXPECT_EQ(one.undirected(i, j), std::max(one.directed(i, j), one.directed(j, i)));
        }

    BootstrapFrequencies f = bootstrap_ges(data, 50, cfg, 11, 1);
    EXPECT_GE(f.undirected(0, 1), 0.9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            EXPECT_GE(f.directed(i, j), 0.0);
            EXPECT_LE(f.undirected(i, j), 1.0);
            EXPECT_GE(f.undirected(i, j), std::max(f.directed(i, j), f.directed(j, i)));
        }
    BootstrapFrequencies g = bootstrap_ges(data, 50, cfg, 11, 3);
    EXPECT_EQ(f.directed, g.directed);
    EXPECT_EQ(f.undirected, g.undirected);
    EXPECT_THROW(bootstrap_ges(data, 0, cfg, 1), Error);
}

TEST(DecisionLog, CsvColumns) {
    auto data = make_benchmark(4, 1.0, 2, 300, 2);
    SearchResult r = tces_search(data, ScoreConfig{});
    std::ostringstream os;
    write_decision_log(os, r.log, data.labels);
    std::string text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "step,move,child,delta_total,delta_bic,lambda_j_dJ,lambda_s_dsheaf");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), static_cast<long>(r.log.size()) + 1);
}
