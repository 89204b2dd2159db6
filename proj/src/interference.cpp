#include "jstable/interference.hpp"
#include "jstable/error.hpp"
#include "jstable/stats.hpp"
#include "jstable/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace jstable {

double plant_weight(const Sector& sector, double theta, double M, const InterferenceConfig& cfg) {
    double w = std::max(0.0, std::cos((theta - sector.center()) * std::numbers::pi / 180.0));
    if (M < cfg.mixing_threshold) w *= 1.0 + cfg.low_mixing_gain;
    return w;
}

ExposureSeries simulate_interference(const InterferenceConfig& cfg, Rng& rng) {
    if (cfg.T < 100) throw Error(ErrorKind::invalid_config, "interference demo needs T >= 100");
    ExposureSeries s;
    const int T = cfg.T;
    s.Z1.resize(T);
    s.Z2.resize(T);
    s.theta.resize(T);
    s.M.resize(T);
    s.E1.resize(T);
    s.E2.resize(T);
    s.Y.resize(T);
    for (int t = 0; t < T; ++t) {
        s.Z1[t] = rng.bernoulli(0.5);
        s.Z2[t] = rng.bernoulli(0.5);
        s.theta[t] = rng.uniform(0.0, 360.0);
        s.M[t] = rng.normal();
        s.E1[t] = plant_weight(cfg.west_large, s.theta[t], s.M[t], cfg) * s.Z1[t] + cfg.eta_sd * rng.normal();
        s.E2[t] = plant_weight(cfg.east, s.theta[t], s.M[t], cfg) * s.Z2[t] + cfg.eta_sd * rng.normal();
        s.Y[t] = cfg.beta1 * s.E1[t] + cfg.beta2 * s.E2[t] + cfg.eps_sd * rng.normal();
    }
    return s;
}

std::vector<std::string> cover_names() { return {"WL", "WS", "E", "LM", "WL_LM", "E_LM"}; }

std::map<std::string, std::vector<int>> regime_masks(const ExposureSeries& s, const InterferenceConfig& cfg) {
    std::map<std::string, std::vector<int>> m;
    for (const auto& n : cover_names()) m[n];
    for (int t = 0; t < s.T(); ++t) {
        bool wl = cfg.west_large.contains(s.theta[t]);
        bool ws = cfg.west_small.contains(s.theta[t]);
        bool e = cfg.east.contains(s.theta[t]);
        bool lm = s.M[t] < cfg.mixing_threshold;
        if (wl) m["WL"].push_back(t);
        if (ws) m["WS"].push_back(t);
        if (e) m["E"].push_back(t);
        if (lm) m["LM"].push_back(t);
        if (wl && lm) m["WL_LM"].push_back(t);
        if (e && lm) m["E_LM"].push_back(t);
    }
    return m;
}

ChartFrequencies chart_frequencies(const ExposureSeries& s, const std::vector<int>& mask, int K, double tau_beta) {
    if (K < 2) throw Error(ErrorKind::invalid_config, "need K >= 2 charts");
    if (!(tau_beta > 0)) throw Error(ErrorKind::invalid_config, "tau_beta must be positive");
    const int n = static_cast<int>(mask.size());
    if (n < 2 * K) throw Error(ErrorKind::insufficient_data, "mask smaller than 2K");
    ChartFrequencies out;
    int hit1 = 0, hit2 = 0;
    for (int k = 0; k < K; ++k) {
        int lo = static_cast<int>(static_cast<long>(n) * k / K);
        int hi = static_cast<int>(static_cast<long>(n) * (k + 1) / K);
        const int m = hi - lo;
        Eigen::MatrixXd x(m, 3);
        for (int r = 0; r < m; ++r) {
            int t = mask[lo + r];
            x(r, 0) = s.E1[t];
            x(r, 1) = s.E2[t];
            x(r, 2) = s.Y[t];
        }
        if (m < 4) {
            ++out.charts_skipped;
            continue;
        }
        Eigen::MatrixXd z = zscore(x);
        FitResult fit;
        try {
            fit = ols_fit(z.leftCols(2), z.col(2));
        } catch (const Error&) {
            ++out.charts_skipped;
            continue;
        }
        double b1 = fit.coefficients(0), b2 = fit.coefficients(1);
        out.betas.emplace_back(b1, b2);
        hit1 += std::fabs(b1) >= tau_beta;
        hit2 += std::fabs(b2) >= tau_beta;
    }
    out.charts_used = K - out.charts_skipped;
    if (out.charts_used > 0) {
        out.f_e1y = static_cast<double>(hit1) / out.charts_used;
        out.f_e2y = static_cast<double>(hit2) / out.charts_used;
    }
    return out;
}

std::pair<bool, bool> stability_decision(const std::vector<std::pair<double, double>>& freqs_by_cover, double pi) {
    bool a = true, b = true;
    for (const auto& [f1, f2] : freqs_by_cover) {
        a = a && f1 >= pi;
        b = b && f2 >= pi;
    }
    return {a, b};
}

InterferenceReport run_interference(const InterferenceConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    ExposureSeries s = simulate_interference(cfg, rng);
    auto masks = regime_masks(s, cfg);
    InterferenceReport r;
    for (const auto& name : cover_names()) {
        const auto& mask = masks[name];
        if (static_cast<int>(mask.size()) < 2 * cfg.K) {
            r.warnings.push_back("cover " + name + " has too few rows and is excluded");
            continue;
        }
        r.covers.push_back(name);
        r.freqs.push_back(chart_frequencies(s, mask, cfg.K, cfg.tau_beta));
    }
    return r;
}

void write_interference_frequencies(std::ostream& os, const InterferenceReport& r) {
    os << "cover,f_E1_Y,f_E2_Y,charts\n";
    for (std::size_t i = 0; i < r.covers.size(); ++i)
        os << r.covers[i] << ',' << r.freqs[i].f_e1y << ',' << r.freqs[i].f_e2y << ',' << r.freqs[i].charts_used
           << '\n';
}

void write_charts(std::ostream& os, const InterferenceReport& r) {
    os << "cover,chart,beta1,beta2\n";
    os.precision(8);
    for (std::size_t i = 0; i < r.covers.size(); ++i)
        for (std::size_t k = 0; k < r.freqs[i].betas.size(); ++k)
            os << r.covers[i] << ',' << k << ',' << r.freqs[i].betas[k].first << ','
               << r.freqs[i].betas[k].second << '\n';
}

}  // namespace jstable
