#pragma once

#include "jstable/aggregate.hpp"
#include "jstable/ci.hpp"
#include "jstable/ges.hpp"
#include "jstable/metrics.hpp"
#include "jstable/synth.hpp"

#include "json.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace jstable {

inline constexpr const char* kReportSchema = "jstable.report/1";

struct SyntheticSpec {
    int d = 10;
    double density = 1.0;
    int regimes = 3;
    int n_per = 1000;

    static SyntheticSpec parse(const std::string& text);  // d:density:R:n_per
};

enum class Learner { Ges, Cges, Tces, Ci };
Learner parse_learner(const std::string& name);
const char* to_string(Learner l);

struct RunConfig {
    std::string input;
    std::optional<SyntheticSpec> synthetic;
    std::string env_col = "env";
    int min_rows = 25;
    double mean_shift = 0.0;
    Learner learner = Learner::Ci;
    CiConfig ci;
    ScoreConfig score;
    int bootstrap = 0;
    std::vector<ThresholdRule> rules{ThresholdRule{}};
    std::vector<double> pi_grid;  // empty: no pi selection
    OrientationPolicy policy;
    std::string guards_file;
    int workers = 1;
    std::uint64_t seed = 0;
    std::string out_dir;  // empty: nothing written

    void validate() const;
};

struct MetricBlock {
    Confusion confusion;
    ShdBreakdown shd;
};

struct RegimeSummary {
    std::string regime_id;
    int n = 0;
    int edges = 0;
    std::string error;
};

struct RuleResult {
    ThresholdRule rule;
    Adj adj;
    long reducer_visits = 0;
    std::map<std::string, MetricBlock> metrics;  // keyed by "skeleton" / "directed"
};

struct RunReport {
    std::vector<std::string> labels;
    std::vector<RegimeSummary> regimes;
    std::vector<Adj> regime_adjs;  // successful regimes, sorted by id
    SupportTable support;
    Adj pooled;
    std::map<std::string, MetricBlock> pooled_metrics;
    std::vector<RuleResult> rules;
    std::optional<PiSelection> pi;
    Pdag pi_graph;
    std::map<std::string, MetricBlock> pi_metrics;
    std::optional<double> stability;
    std::map<std::string, double> timing;
    int workers = 1;
    std::vector<std::string> warnings;
    std::vector<std::string> artifacts;
    bool has_truth = false;

    nlohmann::ordered_json to_json(const RunConfig& cfg, bool include_timing = true) const;
};

MultiRegimeData load_run_data(const RunConfig& cfg, std::vector<std::string>* warnings = nullptr);

// per-regime learner output as an adjacency (undirected marks count both ways)
Adj fit_adjacency(Learner learner, const MultiRegimeData& data, const RunConfig& cfg, std::uint64_t seed,
                  int workers = 1);

RunReport run_pipeline(const RunConfig& cfg);
RunReport run_pipeline(const RunConfig& cfg, const MultiRegimeData& data);

struct SweepGrid {
    std::vector<double> alphas;
    std::vector<int> depths;
    std::vector<double> lambda_tops;
};

struct SweepRow {
    std::map<std::string, std::string> cells;
};

// one pipeline run per (alpha, depth, lambda_top) cell, one row per rule
std::vector<SweepRow> sweep(const RunConfig& base, const SweepGrid& grid);
void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

}  // namespace jstable
