#pragma once

#include "jstable/graph.hpp"
#include "jstable/stats.hpp"

#include <Eigen/Dense>

#include <set>
#include <string>
#include <utility>
#include <vector>

namespace jstable {

struct SupportTable {
    int E = 0;
    Eigen::MatrixXi C;
    Eigen::MatrixXd F;

    int d() const { return static_cast<int>(C.rows()); }
};

struct ThresholdRule {
    enum Kind { Intersection, Union, KOfE, AllButK, Ratio };
    Kind kind = Intersection;
    double value = 0.0;  // tau for KOfE/Ratio, k for AllButK

    static ThresholdRule parse(const std::string& text);
    std::string name() const;
    // smallest count that keeps an edge among E charts
    int min_count(int E) const;
};

struct OrientationPolicy {
    double delta_margin = 0.1;
    std::set<std::pair<int, int>> guards;  // forbidden directed edges (from, to)
};

SupportTable support(const std::vector<Adj>& adjs);
Adj aggregate(const SupportTable& table, const ThresholdRule& rule);

struct StreamStats {
    Eigen::MatrixXi visits;  // charts read before the edge was decided
};

// single-reducer pass over charts with early accept/reject
Adj aggregate_streaming(const std::vector<Adj>& charts, const ThresholdRule& rule, StreamStats* stats = nullptr);

Adj pi_skeleton(const Eigen::MatrixXd& F, double pi);
Pdag orient_net_preference(const Eigen::MatrixXd& F, const OrientationPolicy& policy, const Adj& base);

struct PiScore {
    double pi = 0.0;
    double val_loglik = 0.0;  // mean per validation row
    int edges = 0;
    int directed = 0;
    int dropped_undirected = 0;
    int dropped_cyclic = 0;  // directed edges skipped to keep the scored structure acyclic
};

struct PiSelection {
    double pi = 1.0;
    std::vector<PiScore> table;
};

std::vector<double> default_pi_grid();

// validation log-likelihood of a linear-Gaussian SEM whose parents are the
// directed edges of g, fitted on train
double validation_loglik(const Pdag& g, const Eigen::MatrixXd& train, const Eigen::MatrixXd& val);

// directed part of g with cycles broken: edges are kept in decreasing F margin
// order (ties by index) and skipped when they would close a cycle
Adj acyclic_directed_part(const Pdag& g, const Eigen::MatrixXd& F, int* dropped = nullptr);

PiSelection select_pi(const Eigen::MatrixXd& F, const std::vector<double>& candidates, const OrientationPolicy& policy,
                      const std::vector<Eigen::MatrixXd>& train, const std::vector<Eigen::MatrixXd>& val);

// discrete per-regime table for j-do queries
struct DiscreteTable {
    std::string regime_id;
    Eigen::MatrixXi codes;    // n x d, values in [0, levels[v])
    std::vector<int> levels;  // per variable
};

enum class CoverCombiner { Mean, TrimmedMean };

// per-variable quantile codes; cut points taken from the pooled columns so all
// regimes share one coding
std::vector<DiscreteTable> quantile_bin(const std::vector<std::string>& ids, const std::vector<Eigen::MatrixXd>& data,
                                        int bins = 4);

std::vector<double> adjustment_estimate(const DiscreteTable& t, int x_var, int x_val, int y_var,
                                        const std::vector<int>& z_vars, double smoothing = 0.5);

std::vector<double> jdo_backdoor(const std::vector<DiscreteTable>& tables, int x_var, int x_val, int y_var,
                                 const std::vector<int>& z_vars, const std::vector<std::string>& cover,
                                 CoverCombiner combiner = CoverCombiner::Mean, double smoothing = 0.5);

// kernel[x][z][y] = P(y|x,z); mix[x][z] = P(z|x)
std::vector<double> mixture_conditional(const std::vector<std::vector<std::vector<double>>>& kernel,
                                        const std::vector<std::vector<double>>& mix, int x_val);

struct MarginReport {
    Eigen::MatrixXd margins;               // F - F^T
    std::vector<std::pair<int, long>> curve;  // (t, #ordered pairs with C >= t)
};

MarginReport stability_margin_report(const SupportTable& table);

}  // namespace jstable
