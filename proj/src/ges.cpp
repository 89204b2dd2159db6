#include "jstable/ges.hpp"
#include "jstable/error.hpp"
#include "jstable/parallel.hpp"
#include "jstable/rng.hpp"

#include <algorithm>
#include <bit>
#include <tuple>
#include <cmath>
#include <ostream>

namespace jstable {

SheafMetric parse_sheaf_metric(const std::string& name) {
    if (name == "mmd") return SheafMetric::Mmd;
    if (name == "energy") return SheafMetric::Energy;
    if (name == "gauss_kl") return SheafMetric::GaussKl;
    throw Error(ErrorKind::invalid_config, "unknown sheaf metric '" + name + "'");
}

const char* to_string(Move::Kind k) {
    switch (k) {
        case Move::Add: return "add";
        case Move::Delete: return "delete";
        case Move::Reverse: return "reverse";
    }
    return "?";
}

namespace {

std::vector<int> mask_to_vec(std::uint64_t mask) {
    std::vector<int> out;
    for (int u = 0; mask; ++u, mask >>= 1)
        if (mask & 1ULL) out.push_back(u);
    return out;
}

std::vector<Eigen::MatrixXd> fold_rows(const Eigen::MatrixXd& x, int k) {
    const int n = static_cast<int>(x.rows());
    k = std::max(1, std::min(k, n));
    std::vector<Eigen::MatrixXd> out;
    for (int f = 0; f < k; ++f) {
        int lo = static_cast<int>(static_cast<long>(n) * f / k);
        int hi = static_cast<int>(static_cast<long>(n) * (f + 1) / k);
        out.push_back(x.middleRows(lo, hi - lo));
    }
    return out;
}

}  // namespace

double tces_jstab_local(const std::vector<Eigen::MatrixXd>& data_by_env, int v, const std::vector<int>& parents,
                        bool standardize) {
    if (data_by_env.empty()) throw Error(ErrorKind::invalid_argument, "no regimes");
    if (data_by_env.size() == 1 || parents.empty()) return 0.0;
    std::vector<Eigen::VectorXd> betas;
    for (const auto& raw : data_by_env) {
        if (raw.rows() < static_cast<Eigen::Index>(parents.size()) + 2)
            throw Error(ErrorKind::degenerate_regime, "regime has too few rows for the parent set");
        Eigen::MatrixXd x = standardize ? zscore(raw) : raw;
        try {
            betas.push_back(ols_fit_robust(select_columns(x, parents), x.col(v)).coefficients);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::singular_fit) throw Error(ErrorKind::degenerate_regime, e.what());
            throw;
        }
    }
    double s = 0.0;
    for (std::size_t a = 0; a < betas.size(); ++a)
        for (std::size_t b = a + 1; b < betas.size(); ++b) s += (betas[a] - betas[b]).norm();
    return s;
}

double tces_sheaf_local(const Eigen::MatrixXd& data, int v, const std::vector<int>& parents,
                        const ScoreConfig& cfg) {
    std::vector<int> U = parents;
    U.push_back(v);
    std::sort(U.begin(), U.end());
    const int m = static_cast<int>(U.size());
    const int n = static_cast<int>(data.rows());
    if (m < 2 || n < 4 || cfg.sheaf_splits < 1) return 0.0;
    const int need = std::max(1, cfg.sheaf_min_overlap);

    // one row split per index, shared by every node and parent set
    std::vector<std::pair<std::vector<int>, std::vector<int>>> splits;
    for (int s = 0; s < cfg.sheaf_splits; ++s) {
        Rng rng(derive_seed(cfg.seed, 0x5eafULL + s));
        auto perm = rng.permutation(n);
        std::vector<int> h1, h2;
        for (int r = 0; r < n; ++r) (r < n / 2 ? h1 : h2).push_back(static_cast<int>(perm[r]));
        if (cfg.sheaf_max_rows > 0) {
            if (static_cast<int>(h1.size()) > cfg.sheaf_max_rows) h1.resize(cfg.sheaf_max_rows);
            if (static_cast<int>(h2.size()) > cfg.sheaf_max_rows) h2.resize(cfg.sheaf_max_rows);
        }
        splits.emplace_back(std::move(h1), std::move(h2));
    }

    double total = 0.0;
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b) {
            // charts omit U[a] and U[b]; their overlap omits both
            std::vector<int> overlap;
            for (int k = 0; k < m; ++k)
                if (k != a && k != b) overlap.push_back(U[k]);
            if (static_cast<int>(overlap.size()) < need) continue;
            double acc = 0.0;
            for (const auto& [h1, h2] : splits) {
                Eigen::MatrixXd A(h1.size(), overlap.size()), B(h2.size(), overlap.size());
                for (std::size_t r = 0; r < h1.size(); ++r)
                    for (std::size_t c = 0; c < overlap.size(); ++c) A(r, c) = data(h1[r], overlap[c]);
                for (std::size_t r = 0; r < h2.size(); ++r)
                    for (std::size_t c = 0; c < overlap.size(); ++c) B(r, c) = data(h2[r], overlap[c]);
                switch (cfg.sheaf_metric) {
                    case SheafMetric::Energy: acc += energy_distance(A, B); break;
                    case SheafMetric::Mmd: acc += mmd(A, B); break;
                    case SheafMetric::GaussKl: acc += gaussian_sym_kl(summarize(A), summarize(B)); break;
                }
            }
            total += acc / static_cast<double>(splits.size());
        }
    return total;
}

SearchState::SearchState(const MultiRegimeData& data, const ScoreConfig& cfg)
    : SearchState(data.matrices(), cfg) {}

SearchState::SearchState(std::vector<Eigen::MatrixXd> regimes, const ScoreConfig& cfg) : cfg_(cfg) {
    if (regimes.empty()) throw Error(ErrorKind::insufficient_data, "no regimes to search");
    if (cfg.d_max < 1) throw Error(ErrorKind::invalid_config, "d_max must be >= 1");
    d_ = static_cast<int>(regimes.front().cols());
    int rows = 0;
    for (const auto& r : regimes) {
        if (r.cols() != d_) throw Error(ErrorKind::dimension_mismatch, "regime column counts differ");
        rows += static_cast<int>(r.rows());
    }
    if (rows <= d_ + 2) throw Error(ErrorKind::insufficient_data, "pooled row count must exceed d + 2");
    pooled_.resize(rows, d_);
    int at = 0;
    for (const auto& r : regimes) {
        pooled_.middleRows(at, r.rows()) = r;
        at += static_cast<int>(r.rows());
    }
    if (cfg.standardize) pooled_ = zscore(pooled_);
    regimes_ = regimes.size() == 1 ? fold_rows(regimes.front(), cfg.pseudo_envs) : std::move(regimes);
    scorer_ = std::make_unique<BicScorer>(pooled_);
    sheaf_cache_.resize(d_);
    j_cache_.resize(d_);
    adj_ = Adj::Zero(d_, d_);
    skel_ = Adj::Zero(d_, d_);
    masks_.assign(d_, 0);
}

double SearchState::bic(int v, std::uint64_t mask) { return scorer_->local(v, mask); }

double SearchState::sheaf(int v, std::uint64_t mask) {
    auto it = sheaf_cache_[v].find(mask);
    if (it != sheaf_cache_[v].end()) return it->second;
    double s = tces_sheaf_local(pooled_, v, mask_to_vec(mask), cfg_);
    sheaf_cache_[v].emplace(mask, s);
    return s;
}

double SearchState::jstab(int v, std::uint64_t mask) {
    auto it = j_cache_[v].find(mask);
    if (it != j_cache_[v].end()) return it->second;
    double s = tces_jstab_local(regimes_, v, mask_to_vec(mask), cfg_.standardize);
    j_cache_[v].emplace(mask, s);
    return s;
}

bool SearchState::legal(const Move& m) const {
    if (m.u == m.v || m.u < 0 || m.v < 0 || m.u >= d_ || m.v >= d_) return false;
    switch (m.kind) {
        case Move::Add:
            return !adj_(m.u, m.v) && !adj_(m.v, m.u) && !has_directed_path(adj_, m.v, m.u);
        case Move::Delete:
            return adj_(m.u, m.v) != 0;
        case Move::Reverse: {
            if (!adj_(m.u, m.v)) return false;
            Adj tmp = adj_;
            tmp(m.u, m.v) = 0;
            return !has_directed_path(tmp, m.u, m.v);
        }
    }
    return false;
}

ScoreDelta SearchState::delta(const Move& m) {
    if (!legal(m)) throw Error(ErrorKind::invalid_move, "move breaks acyclicity or targets a missing edge");
    ScoreDelta out;
    out.move = m;
    const std::uint64_t bu = 1ULL << m.u, bv = 1ULL << m.v;
    // (node, old mask, new mask) for every family that changes
    std::vector<std::tuple<int, std::uint64_t, std::uint64_t>> fam;
    switch (m.kind) {
        case Move::Add:
            if (std::popcount(masks_[m.v]) >= cfg_.d_max) {
                out.total = -std::numeric_limits<double>::infinity();
                return out;
            }
            out.d_f1 = skel_(m.u, m.v) ? 0 : 1;
            out.d_f2 = common_neighbors(skel_, m.u, m.v);
            fam.emplace_back(m.v, masks_[m.v], masks_[m.v] | bu);
            break;
        case Move::Delete:
            out.d_f1 = -1;
            out.d_f2 = -common_neighbors(skel_, m.u, m.v);
            fam.emplace_back(m.v, masks_[m.v], masks_[m.v] & ~bu);
            break;
        case Move::Reverse:
            if (std::popcount(masks_[m.u]) >= cfg_.d_max) {
                out.total = -std::numeric_limits<double>::infinity();
                return out;
            }
            fam.emplace_back(m.v, masks_[m.v], masks_[m.v] & ~bu);
            fam.emplace_back(m.u, masks_[m.u], masks_[m.u] | bv);
            break;
    }
    for (auto [node, before, after] : fam) {
        out.d_bic += bic(node, after) - bic(node, before);
        // penalties only evaluated when switched on, so zero lambdas reproduce GES bit for bit
        if (cfg_.lambda_sheaf > 0) out.d_sheaf += sheaf(node, after) - sheaf(node, before);
        if (cfg_.lambda_j > 0) out.d_j += jstab(node, after) - jstab(node, before);
    }
    out.total = out.d_bic - cfg_.lambda_top * out.d_f1 - cfg_.lambda_tri * out.d_f2 -
                cfg_.lambda_sheaf * out.d_sheaf - cfg_.lambda_j * out.d_j;
    return out;
}

void SearchState::apply(const Move& m) {
    if (!legal(m)) throw Error(ErrorKind::invalid_move, "illegal move applied");
    switch (m.kind) {
        case Move::Add:
            adj_(m.u, m.v) = 1;
            masks_[m.v] |= 1ULL << m.u;
            skel_(m.u, m.v) = skel_(m.v, m.u) = 1;
            break;
        case Move::Delete:
            adj_(m.u, m.v) = 0;
            masks_[m.v] &= ~(1ULL << m.u);
            skel_(m.u, m.v) = skel_(m.v, m.u) = 0;
            break;
        case Move::Reverse:
            adj_(m.u, m.v) = 0;
            adj_(m.v, m.u) = 1;
            masks_[m.v] &= ~(1ULL << m.u);
            masks_[m.u] |= 1ULL << m.v;
            break;
    }
}

void SearchState::set_graph(const Adj& adj) {
    if (adj.rows() != d_ || !is_acyclic(adj)) throw Error(ErrorKind::invalid_argument, "set_graph needs a DAG");
    adj_ = adj;
    skel_ = skeleton(adj);
    for (int v = 0; v < d_; ++v) {
        masks_[v] = 0;
        for (int u = 0; u < d_; ++u)
            if (adj(u, v)) masks_[v] |= 1ULL << u;
    }
}

double SearchState::total_score() {
    double s = 0.0;
    for (int v = 0; v < d_; ++v) {
        s += bic(v, masks_[v]);
        if (cfg_.lambda_sheaf > 0) s -= cfg_.lambda_sheaf * sheaf(v, masks_[v]);
        if (cfg_.lambda_j > 0) s -= cfg_.lambda_j * jstab(v, masks_[v]);
    }
    FVector f = f_vector(skel_);
    return s - cfg_.lambda_top * f.f1 - cfg_.lambda_tri * f.f2;
}

ScoreDelta cges_delta(SearchState& state, const Move& move) { return state.delta(move); }

namespace {

SearchResult run_search(SearchState& st) {
    constexpr double kAccept = 1e-9;
    const int d = st.d();
    SearchResult res;
    res.empty_score = st.total_score();
    const long cap = 200L * d * d + 100;
    int step = 0;
    for (int phase = 0; phase < 2; ++phase) {
        const bool forward = phase == 0;
        for (long iter = 0; iter < cap; ++iter) {
            ScoreDelta best;
            best.total = kAccept;
            bool found = false;
            for (int u = 0; u < d; ++u)
                for (int v = 0; v < d; ++v) {
                    if (u == v) continue;
                    Move cand[2];
                    int nc = 0;
                    if (st.adj()(u, v)) {
                        if (!forward) cand[nc++] = {Move::Delete, u, v};
                        if (st.config().reversals) cand[nc++] = {Move::Reverse, u, v};
                    } else if (forward && !st.adj()(v, u)) {
                        cand[nc++] = {Move::Add, u, v};
                    }
                    for (int c = 0; c < nc; ++c) {
                        if (!st.legal(cand[c])) continue;
                        ScoreDelta dl = st.delta(cand[c]);
                        if (dl.total > best.total) {
                            best = dl;
                            found = true;
                        }
                    }
                }
            if (!found) break;
            st.apply(best.move);
            res.log.push_back({++step, best.move, best.move.v, best, st.config().lambda_j * best.d_j,
                               st.config().lambda_sheaf * best.d_sheaf});
        }
    }
    res.score = st.total_score();
    res.dag = Dag(st.adj());
    return res;
}

}  // namespace

SearchResult tces_search(const MultiRegimeData& data, const ScoreConfig& cfg) {
    SearchState st(data, cfg);
    SearchResult r = run_search(st);
    r.dag.labels = data.labels;
    return r;
}

SearchResult ges_search(const MultiRegimeData& data, const ScoreConfig& cfg) {
    ScoreConfig c = cfg;
    c.lambda_sheaf = 0.0;
    c.lambda_j = 0.0;
    return tces_search(data, c);
}

SearchResult ges_search(const Eigen::MatrixXd& data, const ScoreConfig& cfg) {
    ScoreConfig c = cfg;
    c.lambda_sheaf = 0.0;
    c.lambda_j = 0.0;
    SearchState st(std::vector<Eigen::MatrixXd>{data}, c);
    return run_search(st);
}

BootstrapFrequencies bootstrap_ges(const MultiRegimeData& data, int B, const ScoreConfig& cfg, std::uint64_t seed,
                                   int workers) {
    if (B < 1) throw Error(ErrorKind::invalid_config, "bootstrap needs B >= 1");
    const int d = data.d();
    std::vector<Adj> results(B);
    parallel_for(B, workers, [&](std::size_t b) {
        Rng rng(derive_seed(seed, b));
        std::vector<Eigen::MatrixXd> resampled;
        for (const auto& r : data.regimes) {
            Eigen::MatrixXd x(r.n(), d);
            for (int i = 0; i < r.n(); ++i) x.row(i) = r.data.row(rng.below(r.n()));
            resampled.push_back(std::move(x));
        }
        SearchState st(std::move(resampled), cfg);
        results[b] = run_search(st).dag.adj;
    });
    BootstrapFrequencies f{Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d), B};
    for (const auto& a : results) {
        f.directed += a.cast<double>();
        f.undirected += skeleton(a).cast<double>();
    }
    f.directed /= B;
    f.undirected /= B;
    return f;
}

void write_decision_log(std::ostream& os, const std::vector<DecisionEntry>& log,
                        const std::vector<std::string>& labels) {
    auto name = [&](int i) { return i < static_cast<int>(labels.size()) ? labels[i] : std::to_string(i); };
    os << "step,move,child,delta_total,delta_bic,lambda_j_dJ,lambda_s_dsheaf\n";
    os.precision(10);
    for (const auto& e : log) {
        os << e.step << ',' << to_string(e.move.kind) << '(' << name(e.move.u) << "->" << name(e.move.v) << "),"
           << name(e.child) << ',' << e.delta.total << ',' << e.delta.d_bic << ',' << e.weighted_j << ','
           << e.weighted_sheaf << '\n';
    }
}

}  // namespace jstable
