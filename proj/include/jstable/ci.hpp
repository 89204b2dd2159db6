#pragma once

#include "jstable/graph.hpp"
#include "jstable/stats.hpp"
#include "jstable/synth.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace jstable {

// Reference: flip when the reference regime says independent but another
// regime rejects. AnyRegime: flip when any regime rejects.
enum class VetoGate { None, Reference, AnyRegime };

struct CiConfig {
    double alpha = 0.01;
    int depth = 0;  // negative means no limit
    AggregatorKind kind = AggregatorKind::Fisher;
    VetoGate veto = VetoGate::None;
    std::string veto_ref = "e0";
};

struct CiDecision {
    int i = 0;
    int j = 0;
    std::vector<int> S;
    std::vector<std::pair<std::string, double>> per_regime_p;
    std::vector<std::string> skipped;  // regimes too small for |S|
    double p_sheaf = 1.0;
    bool dependent = false;
    bool vetoed = false;
};

// combine per-regime p-values with the aggregator and apply the veto gate
CiDecision decide_from_pvalues(const std::vector<std::pair<std::string, double>>& per_regime_p, double alpha,
                               AggregatorKind kind, VetoGate veto, const std::string& veto_ref);

class CiOracle {
public:
    virtual ~CiOracle() = default;
    virtual int d() const = 0;
    virtual CiDecision decide(int i, int j, const std::vector<int>& S) = 0;
};

// Fisher-z per regime, aggregated across regimes
class JStableCiTester : public CiOracle {
public:
    JStableCiTester(const std::vector<std::string>& ids, const std::vector<Eigen::MatrixXd>& data_by_env,
                    const CiConfig& cfg);
    int d() const override { return d_; }
    CiDecision decide(int i, int j, const std::vector<int>& S) override;

private:
    std::vector<std::string> ids_;
    std::vector<Eigen::MatrixXd> corr_;
    std::vector<int> n_;
    CiConfig cfg_;
    int d_ = 0;
};

// d-separation in a known DAG, standing in for statistical tests
class DsepOracle : public CiOracle {
public:
    explicit DsepOracle(Dag dag) : dag_(std::move(dag)) {}
    int d() const override { return dag_.d(); }
    CiDecision decide(int i, int j, const std::vector<int>& S) override;

private:
    Dag dag_;
};

CiDecision jstable_ci_decision(const std::vector<std::string>& ids, const std::vector<Eigen::MatrixXd>& data_by_env,
                               int i, int j, const std::vector<int>& S, const CiConfig& cfg);

struct SkeletonResult {
    Adj skeleton;
    SepSets sepsets;
    int tests = 0;
    int vetoes = 0;
};

// PC-stable elimination: neighbour sets are frozen at the start of each level
SkeletonResult skeleton_search(CiOracle& oracle, int depth);
SkeletonResult skeleton_search(const MultiRegimeData& data, const CiConfig& cfg);

Pdag orient(const Adj& skel, const SepSets& sepsets);

struct RegimeGraph {
    std::string regime_id;
    Pdag graph;
    SepSets sepsets;
    std::string error;  // non-empty when the regime failed
};

std::vector<RegimeGraph> discover_per_regime(const MultiRegimeData& data, const CiConfig& cfg, int workers = 1);

}  // namespace jstable
