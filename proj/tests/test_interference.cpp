#include "jstable/error.hpp"
#include "jstable/interference.hpp"
#include "jstable/stats.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

using namespace jstable;

namespace {

double partial_corr_e2y(const ExposureSeries& s) {
    Eigen::MatrixXd x(s.T(), 3);
    for (int t = 0; t < s.T(); ++t) x.row(t) << s.E1[t], s.E2[t], s.Y[t];
    return partial_correlation(correlation_matrix(x), 1, 2, {0});
}

ChartFrequencies freqs(const ExposureSeries& s, const InterferenceConfig& cfg, const std::string& cover) {
    return chart_frequencies(s, regime_masks(s, cfg).at(cover), cfg.K, cfg.tau_beta);
}

}  // namespace

TEST(Simulate, ZeroBetaTwoDecouplesE2) {
    InterferenceConfig cfg;
    cfg.beta2 = 0.0;
    Rng rng(1);
    ExposureSeries s = simulate_interference(cfg, rng);
    EXPECT_LT(std::abs(partial_corr_e2y(s)), 4.0 / std::sqrt(s.T()));
}

TEST(Simulate, NoiselessStructuralEquation) {
    InterferenceConfig cfg;
    cfg.eta_sd = 0.0;
    cfg.eps_sd = 0.0;
    cfg.beta1 = 1.3;
    cfg.beta2 = -0.4;
    cfg.T = 500;
    Rng rng(2);
    ExposureSeries s = simulate_interference(cfg, rng);
    for (int t = 0; t < s.T(); ++t) {
        EXPECT_NEAR(s.Y[t], 1.3 * s.E1[t] - 0.4 * s.E2[t], 1e-12);
        EXPECT_NEAR(s.E1[t], plant_weight(cfg.west_large, s.theta[t], s.M[t], cfg) * s.Z1[t], 1e-12);
        EXPECT_NEAR(s.E2[t], plant_weight(cfg.east, s.theta[t], s.M[t], cfg) * s.Z2[t], 1e-12);
    }
    cfg.T = 50;
    EXPECT_THROW(simulate_interference(cfg, rng), Error);
}

TEST(Simulate, OutcomeGivenTreatmentDependsOnWind) {
    InterferenceConfig cfg;
    cfg.T = 10000;
    Rng rng(3);
    ExposureSeries s = simulate_interference(cfg, rng);
    auto masks = regime_masks(s, cfg);
    auto stats = [&](const std::vector<int>& m) {
        double sum = 0, sq = 0;
        int n = 0;
        for (int t : m)
            if (s.Z1[t] == 1 && s.Z2[t] == 0) {
                sum += s.Y[t];
                sq += s.Y[t] * s.Y[t];
                ++n;
            }
        double mu = sum / n;
        return std::array<double, 3>{mu, sq / n - mu * mu, static_cast<double>(n)};
    };
    auto w = stats(masks.at("WL")), e = stats(masks.at("E"));
    double t = (w[0] - e[0]) / std::sqrt(w[1] / w[2] + e[1] / e[2]);
    EXPECT_GT(t, 4.0);
}

TEST(Masks, MembershipAndNesting) {
    InterferenceConfig cfg;
    ExposureSeries s;
    s.theta = {270.0, 90.0, 240.0};
    s.M = {-1.0, 0.0, 0.3};
    auto m = regime_masks(s, cfg);
    auto in = [&](const std::string& c, int t) {
        return std::find(m.at(c).begin(), m.at(c).end(), t) != m.at(c).end();
    };
    for (const auto& c : {"WL", "WS", "LM", "WL_LM"}) EXPECT_TRUE(in(c, 0)) << c;
    EXPECT_FALSE(in("E", 0));
    EXPECT_TRUE(in("E", 1));
    EXPECT_FALSE(in("WL", 1));
    EXPECT_TRUE(in("WL", 2));
    EXPECT_FALSE(in("WS", 2));
    EXPECT_EQ(cover_names(), (std::vector<std::string>{"WL", "WS", "E", "LM", "WL_LM", "E_LM"}));

    Rng rng(4);
    ExposureSeries big = simulate_interference(cfg, rng);
    auto bm = regime_masks(big, cfg);
    EXPECT_LE(bm.at("WS").size(), bm.at("WL").size());
    EXPECT_TRUE(std::includes(bm.at("WL").begin(), bm.at("WL").end(), bm.at("WS").begin(), bm.at("WS").end()));
    EXPECT_TRUE(std::includes(bm.at("LM").begin(), bm.at("LM").end(), bm.at("E_LM").begin(), bm.at("E_LM").end()));
}

TEST(ChartFrequencies, WestEastFlip) {
    InterferenceConfig cfg;
    Rng rng(5);
    ExposureSeries s = simulate_interference(cfg, rng);
    for (const auto& c : {"WL", "WS", "WL_LM"}) {
        auto f = freqs(s, cfg, c);
        EXPECT_GE(f.f_e1y, 0.8) << c;
        EXPECT_LE(f.f_e2y, 0.2) << c;
        EXPECT_EQ(f.charts_used, cfg.K);
        EXPECT_EQ(f.betas.size(), static_cast<std::size_t>(cfg.K));
    }
    for (const auto& c : {"E", "E_LM"}) {
        auto f = freqs(s, cfg, c);
        EXPECT_GE(f.f_e2y, 0.8) << c;
        EXPECT_LE(f.f_e1y, 0.2) << c;
    }
    EXPECT_THROW(chart_frequencies(s, {1, 2, 3}, 10, 0.2), Error);
    EXPECT_THROW(chart_frequencies(s, regime_masks(s, cfg).at("WL"), 1, 0.2), Error);
}

TEST(ChartFrequencies, NullRateAndZeroBetaTwo) {
    // null rate of the threshold with no effects at all
    double null_hits = 0, null_total = 0, e2_hits = 0, e2_total = 0;
    std::map<std::string, double> null_mean;
    const int seeds = 10;
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        InterferenceConfig null_cfg;
        null_cfg.beta1 = null_cfg.beta2 = 0.0;
        Rng a(100 + seed);
        ExposureSeries s0 = simulate_interference(null_cfg, a);
        InterferenceConfig cfg;
        cfg.beta2 = 0.0;
        Rng b(200 + seed);
        ExposureSeries s1 = simulate_interference(cfg, b);
        for (const auto& c : cover_names()) {
            auto f0 = freqs(s0, null_cfg, c);
            null_mean[c] += (f0.f_e1y + f0.f_e2y) / (2.0 * seeds);
            null_hits += (f0.f_e1y + f0.f_e2y) * f0.charts_used;
            null_total += 2 * f0.charts_used;
            auto f1 = freqs(s1, cfg, c);
            e2_hits += f1.f_e2y * f1.charts_used;
            e2_total += f1.charts_used;
        }
    }
    for (const auto& [c, m] : null_mean) EXPECT_LT(m, 0.2) << c;
    EXPECT_LE(e2_hits / e2_total, 2 * null_hits / null_total);
}

TEST(ChartFrequencies, ResponseScaleInvariance) {
    InterferenceConfig cfg;
    Rng rng(6);
    ExposureSeries s = simulate_interference(cfg, rng);
    ExposureSeries scaled = s;
    for (double& y : scaled.Y) y *= 37.5;
    for (const auto& c : cover_names()) {
        auto a = freqs(s, cfg, c), b = freqs(scaled, cfg, c);
        EXPECT_EQ(a.f_e1y, b.f_e1y);
        EXPECT_EQ(a.f_e2y, b.f_e2y);
    }
}

TEST(StabilityDecision, Examples) {
    auto all = stability_decision({{1.0, 1.0}, {1.0, 1.0}}, 0.8);
    EXPECT_TRUE(all.first);
    EXPECT_TRUE(all.second);
    auto one = stability_decision({{1.0, 0.5}, {1.0, 1.0}}, 0.8);
    EXPECT_TRUE(one.first);
    EXPECT_FALSE(one.second);
    auto zero = stability_decision({{0.0, 0.0}}, 0.0);
    EXPECT_TRUE(zero.first);
    EXPECT_TRUE(zero.second);
}

TEST(RunInterference, ReportAndCsv) {
    InterferenceConfig cfg;
    InterferenceReport r = run_interference(cfg, 7);
    EXPECT_EQ(r.covers, cover_names());
    EXPECT_EQ(r.freqs.size(), r.covers.size());
    std::ostringstream f, c;
    write_interference_frequencies(f, r);
    write_charts(c, r);
    const std::string fs = f.str(), cs = c.str();
    EXPECT_EQ(fs.substr(0, fs.find('\n')), "cover,f_E1_Y,f_E2_Y,charts");
    EXPECT_EQ(std::count(fs.begin(), fs.end(), '\n'), 7);
    EXPECT_EQ(std::count(cs.begin(), cs.end(), '\n'), 1 + 6 * cfg.K);
    InterferenceReport again = run_interference(cfg, 7);
    for (std::size_t k = 0; k < r.freqs.size(); ++k) EXPECT_EQ(r.freqs[k].betas, again.freqs[k].betas);
}
