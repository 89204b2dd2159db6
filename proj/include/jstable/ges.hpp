#pragma once

#include "jstable/graph.hpp"
#include "jstable/stats.hpp"
#include "jstable/synth.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace jstable {

enum class SheafMetric { Mmd, Energy, GaussKl };

SheafMetric parse_sheaf_metric(const std::string& name);

struct ScoreConfig {
    double lambda_top = 0.0;
    double lambda_tri = 0.0;
    double lambda_sheaf = 0.0;
    double lambda_j = 0.0;
    int d_max = 64;
    SheafMetric sheaf_metric = SheafMetric::Energy;
    int sheaf_splits = 2;
    int sheaf_min_overlap = 1;
    int sheaf_max_rows = 200;  // rows kept per split half
    bool standardize = true;
    int pseudo_envs = 5;       // row folds when only one regime is present
    std::uint64_t seed = 0;
    bool reversals = true;
};

struct Move {
    enum Kind { Add, Delete, Reverse };
    Kind kind = Add;
    int u = 0;
    int v = 0;
};

const char* to_string(Move::Kind k);

struct ScoreDelta {
    double total = 0.0;
    double d_bic = 0.0;
    int d_f1 = 0;
    int d_f2 = 0;
    double d_sheaf = 0.0;
    double d_j = 0.0;
    Move move;

    bool rejected() const { return total == -std::numeric_limits<double>::infinity(); }
};

struct DecisionEntry {
    int step = 0;
    Move move;
    int child = 0;  // node whose parent set grew or shrank (v for add/delete/reverse)
    ScoreDelta delta;
    double weighted_j = 0.0;      // lambda_j * d_j
    double weighted_sheaf = 0.0;  // lambda_sheaf * d_sheaf
};

struct SearchResult {
    Dag dag;
    std::vector<DecisionEntry> log;
    double score = 0.0;
    double empty_score = 0.0;
};

double tces_jstab_local(const std::vector<Eigen::MatrixXd>& data_by_env, int v, const std::vector<int>& parents,
                        bool standardize = true);
double tces_sheaf_local(const Eigen::MatrixXd& data, int v, const std::vector<int>& parents,
                        const ScoreConfig& cfg);

// Incremental search state; exposed so deltas can be audited and tested.
class SearchState {
public:
    SearchState(const MultiRegimeData& data, const ScoreConfig& cfg);
    SearchState(std::vector<Eigen::MatrixXd> regimes, const ScoreConfig& cfg);

    int d() const { return d_; }
    const Adj& adj() const { return adj_; }
    const Adj& skel() const { return skel_; }
    std::uint64_t parent_mask(int v) const { return masks_[v]; }

    bool legal(const Move& m) const;
    ScoreDelta delta(const Move& m);
    void apply(const Move& m);
    void set_graph(const Adj& adj);

    double bic(int v, std::uint64_t mask);
    double sheaf(int v, std::uint64_t mask);
    double jstab(int v, std::uint64_t mask);
    double total_score();
    const ScoreConfig& config() const { return cfg_; }

private:
    ScoreConfig cfg_;
    int d_;
    Eigen::MatrixXd pooled_;
    std::vector<Eigen::MatrixXd> regimes_;
    std::unique_ptr<BicScorer> scorer_;
    std::vector<std::unordered_map<std::uint64_t, double>> sheaf_cache_, j_cache_;
    Adj adj_, skel_;
    std::vector<std::uint64_t> masks_;
};

ScoreDelta cges_delta(SearchState& state, const Move& move);

// all four lambdas honoured
SearchResult tces_search(const MultiRegimeData& data, const ScoreConfig& cfg);
// lambda_sheaf and lambda_j ignored: plain GES when lambda_top = lambda_tri = 0
SearchResult ges_search(const MultiRegimeData& data, const ScoreConfig& cfg);
SearchResult ges_search(const Eigen::MatrixXd& data, const ScoreConfig& cfg);

struct BootstrapFrequencies {
    Eigen::MatrixXd directed;    // fraction of replicates with i->j
    Eigen::MatrixXd undirected;  // fraction of replicates with i,j adjacent (symmetric)
    int B = 0;
};

BootstrapFrequencies bootstrap_ges(const MultiRegimeData& data, int B, const ScoreConfig& cfg, std::uint64_t seed,
                                   int workers = 1);

void write_decision_log(std::ostream& os, const std::vector<DecisionEntry>& log,
                        const std::vector<std::string>& labels);

}  // namespace jstable
