#pragma once

#include "jstable/rng.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace jstable {

struct Sector {
    double lo = 0.0;  // degrees, inclusive
    double hi = 0.0;
    double center() const { return 0.5 * (lo + hi); }
    bool contains(double theta) const { return theta >= lo && theta <= hi; }
};

struct InterferenceConfig {
    int T = 20000;
    double beta1 = 1.0;
    double beta2 = 1.0;
    double eta_sd = 0.05;
    double eps_sd = 0.5;
    Sector west_large{230.0, 310.0};
    Sector west_small{250.0, 290.0};
    Sector east{70.0, 110.0};
    double mixing_threshold = -0.5;  // LM: M below this
    double low_mixing_gain = 0.5;    // weights scaled by 1 + gain under LM
    int K = 10;
    double tau_beta = 0.2;
    double pi = 0.8;
};

struct ExposureSeries {
    std::vector<int> Z1, Z2;
    std::vector<double> theta, M, E1, E2, Y;
    int T() const { return static_cast<int>(theta.size()); }
};

// plant 1 sits so that westerly wind carries it to the residents, plant 2 easterly
double plant_weight(const Sector& sector, double theta, double M, const InterferenceConfig& cfg);

ExposureSeries simulate_interference(const InterferenceConfig& cfg, Rng& rng);

// covers in report order: WL, WS, E, LM, WL_LM, E_LM
std::vector<std::string> cover_names();
std::map<std::string, std::vector<int>> regime_masks(const ExposureSeries& s, const InterferenceConfig& cfg);

struct ChartFrequencies {
    double f_e1y = 0.0;
    double f_e2y = 0.0;
    int charts_used = 0;
    int charts_skipped = 0;
    std::vector<std::pair<double, double>> betas;  // standardized (beta1, beta2) per chart
};

ChartFrequencies chart_frequencies(const ExposureSeries& s, const std::vector<int>& mask, int K, double tau_beta);

// per edge: true when every member meets pi
std::pair<bool, bool> stability_decision(const std::vector<std::pair<double, double>>& freqs_by_cover, double pi);

struct InterferenceReport {
    std::vector<std::string> covers;
    std::vector<ChartFrequencies> freqs;
    std::vector<std::string> warnings;
};

InterferenceReport run_interference(const InterferenceConfig& cfg, std::uint64_t seed);
void write_interference_frequencies(std::ostream& os, const InterferenceReport& r);
void write_charts(std::ostream& os, const InterferenceReport& r);

}  // namespace jstable
