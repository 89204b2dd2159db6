#include "jstable/ci.hpp"
#include "jstable/error.hpp"
#include "jstable/parallel.hpp"

#include <algorithm>
#include <functional>

namespace jstable {

CiDecision decide_from_pvalues(const std::vector<std::pair<std::string, double>>& per_regime_p, double alpha,
                               AggregatorKind kind, VetoGate veto, const std::string& veto_ref) {
    if (per_regime_p.empty()) throw Error(ErrorKind::insufficient_data, "no regime could be tested");
    CiDecision out;
    out.per_regime_p = per_regime_p;
    std::vector<double> ps;
    for (const auto& kv : per_regime_p) ps.push_back(kv.second);
    out.p_sheaf = aggregate_pvalues(ps, kind);
    out.dependent = out.p_sheaf <= alpha;
    if (out.dependent || veto == VetoGate::None) return out;

    bool any_reject = std::any_of(ps.begin(), ps.end(), [alpha](double p) { return p <= alpha; });
    bool fire = false;
    if (veto == VetoGate::AnyRegime) {
        fire = any_reject;
    } else {
        auto ref = std::find_if(per_regime_p.begin(), per_regime_p.end(),
                                [&](const auto& kv) { return kv.first == veto_ref; });
        fire = ref != per_regime_p.end() && ref->second > alpha && any_reject;
    }
    if (fire) {
        out.dependent = true;
        out.vetoed = true;
    }
    return out;
}

JStableCiTester::JStableCiTester(const std::vector<std::string>& ids, const std::vector<Eigen::MatrixXd>& data_by_env,
                                 const CiConfig& cfg)
    : ids_(ids), cfg_(cfg) {
    if (ids.size() != data_by_env.size()) throw Error(ErrorKind::dimension_mismatch, "regime ids vs matrices");
    if (data_by_env.empty()) throw Error(ErrorKind::insufficient_data, "no regimes");
    d_ = static_cast<int>(data_by_env.front().cols());
    for (const auto& x : data_by_env) {
        if (x.cols() != d_) throw Error(ErrorKind::dimension_mismatch, "regime column counts differ");
        corr_.push_back(correlation_matrix(x));
        n_.push_back(static_cast<int>(x.rows()));
    }
}

CiDecision JStableCiTester::decide(int i, int j, const std::vector<int>& S) {
    std::vector<std::pair<std::string, double>> ps;
    std::vector<std::string> skipped;
    const int s = static_cast<int>(S.size());
    for (std::size_t e = 0; e < corr_.size(); ++e) {
        if (n_[e] - s - 3 <= 0) {
            skipped.push_back(ids_[e]);
            continue;
        }
        ps.emplace_back(ids_[e], fisher_z_pvalue(partial_correlation(corr_[e], i, j, S), n_[e], s));
    }
    CiDecision out = decide_from_pvalues(ps, cfg_.alpha, cfg_.kind, cfg_.veto, cfg_.veto_ref);
    out.i = i;
    out.j = j;
    out.S = S;
    out.skipped = std::move(skipped);
    return out;
}

CiDecision DsepOracle::decide(int i, int j, const std::vector<int>& S) {
    CiDecision out;
    out.i = i;
    out.j = j;
    out.S = S;
    out.dependent = !d_separated(dag_, i, j, S);
    out.p_sheaf = out.dependent ? 0.0 : 1.0;
    out.per_regime_p.emplace_back("oracle", out.p_sheaf);
    return out;
}

CiDecision jstable_ci_decision(const std::vector<std::string>& ids, const std::vector<Eigen::MatrixXd>& data_by_env,
                               int i, int j, const std::vector<int>& S, const CiConfig& cfg) {
    JStableCiTester tester(ids, data_by_env, cfg);
    return tester.decide(i, j, S);
}

namespace {

// all size-k subsets of pool in lexicographic order; stops when fn returns true
bool for_each_subset(const std::vector<int>& pool, int k, const std::function<bool(const std::vector<int>&)>& fn) {
    const int n = static_cast<int>(pool.size());
    if (k > n) return false;
    std::vector<int> idx(k);
    for (int a = 0; a < k; ++a) idx[a] = a;
    std::vector<int> subset(k);
    while (true) {
        for (int a = 0; a < k; ++a) subset[a] = pool[idx[a]];
        if (fn(subset)) return true;
        int a = k - 1;
        while (a >= 0 && idx[a] == n - k + a) --a;
        if (a < 0) return false;
        ++idx[a];
        for (int b = a + 1; b < k; ++b) idx[b] = idx[b - 1] + 1;
    }
}

}  // namespace

SkeletonResult skeleton_search(CiOracle& oracle, int depth) {
    const int d = oracle.d();
    SkeletonResult res;
    res.skeleton = Adj::Ones(d, d);
    res.skeleton.diagonal().setZero();
    const int max_level = depth < 0 ? d - 2 : depth;
    for (int level = 0; level <= max_level; ++level) {
        Adj frozen = res.skeleton;
        bool any_testable = false;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) {
                if (!res.skeleton(i, j)) continue;
                bool removed = false;
                for (int side = 0; side < 2 && !removed; ++side) {
                    int a = side == 0 ? i : j, b = side == 0 ? j : i;
                    std::vector<int> pool;
                    for (int w = 0; w < d; ++w)
                        if (w != b && frozen(a, w)) pool.push_back(w);
                    if (static_cast<int>(pool.size()) < level) continue;
                    any_testable = true;
                    removed = for_each_subset(pool, level, [&](const std::vector<int>& S) {
                        CiDecision dec = oracle.decide(i, j, S);
                        ++res.tests;
                        if (dec.vetoed) ++res.vetoes;
                        if (dec.dependent) return false;
                        res.sepsets[{i, j}] = S;
                        return true;
                    });
                }
                if (removed) res.skeleton(i, j) = res.skeleton(j, i) = 0;
            }
        if (!any_testable) break;
    }
    return res;
}

SkeletonResult skeleton_search(const MultiRegimeData& data, const CiConfig& cfg) {
    std::vector<std::string> ids;
    for (const auto& r : data.regimes) ids.push_back(r.regime_id);
    JStableCiTester tester(ids, data.matrices(), cfg);
    return skeleton_search(tester, cfg.depth);
}

Pdag orient(const Adj& skel, const SepSets& sepsets) { return meek_closure(orient_v_structures(skel, sepsets)); }

std::vector<RegimeGraph> discover_per_regime(const MultiRegimeData& data, const CiConfig& cfg, int workers) {
    std::vector<RegimeGraph> out(data.regimes.size());
    parallel_for(data.regimes.size(), workers, [&](std::size_t e) {
        const auto& r = data.regimes[e];
        out[e].regime_id = r.regime_id;
        try {
            JStableCiTester tester({r.regime_id}, {r.data}, cfg);
            SkeletonResult sk = skeleton_search(tester, cfg.depth);
            out[e].graph = orient(sk.skeleton, sk.sepsets);
            out[e].sepsets = std::move(sk.sepsets);
        } catch (const std::exception& ex) {
            out[e].error = ex.what();
        }
    });
    return out;
}

}  // namespace jstable
