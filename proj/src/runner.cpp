#include "jstable/runner.hpp"
#include "jstable/error.hpp"
#include "jstable/io.hpp"
#include "jstable/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace jstable {

namespace fs = std::filesystem;

SyntheticSpec SyntheticSpec::parse(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 4) throw Error(ErrorKind::invalid_config, "synthetic spec must be d:density:R:n_per");
    SyntheticSpec s;
    try {
        s.d = std::stoi(parts[0]);
        s.density = std::stod(parts[1]);
        s.regimes = std::stoi(parts[2]);
        s.n_per = std::stoi(parts[3]);
    } catch (const std::exception&) {
        throw Error(ErrorKind::invalid_config, "synthetic spec '" + text + "' is not numeric");
    }
    return s;
}

Learner parse_learner(const std::string& name) {
    if (name == "ges") return Learner::Ges;
    if (name == "cges") return Learner::Cges;
    if (name == "tces") return Learner::Tces;
    if (name == "ci") return Learner::Ci;
    throw Error(ErrorKind::invalid_config, "unknown learner '" + name + "'");
}

const char* to_string(Learner l) {
    switch (l) {
        case Learner::Ges: return "ges";
        case Learner::Cges: return "cges";
        case Learner::Tces: return "tces";
        case Learner::Ci: return "ci";
    }
    return "?";
}

void RunConfig::validate() const {
    if (workers < 1) throw Error(ErrorKind::invalid_config, "workers must be >= 1");
    if (input.empty() == !synthetic.has_value())
        throw Error(ErrorKind::invalid_config, "give exactly one of an input file or a synthetic spec");
    if (rules.empty()) throw Error(ErrorKind::invalid_config, "at least one aggregation rule is needed");
    if (bootstrap < 0) throw Error(ErrorKind::invalid_config, "bootstrap must be >= 0");
    for (double pi : pi_grid)
        if (!(pi >= 0 && pi <= 1)) throw Error(ErrorKind::invalid_config, "pi grid values must lie in [0,1]");
}

MultiRegimeData load_run_data(const RunConfig& cfg, std::vector<std::string>* warnings) {
    if (cfg.synthetic) {
        const auto& s = *cfg.synthetic;
        return make_benchmark(s.d, s.density, s.regimes, s.n_per, cfg.seed, cfg.mean_shift);
    }
    LoadResult lr = load_csv(cfg.input, cfg.env_col, cfg.min_rows);
    if (warnings) warnings->insert(warnings->end(), lr.warnings.begin(), lr.warnings.end());
    return std::move(lr.data);
}

namespace {

struct FitOutput {
    Adj adj;
    std::optional<SepSets> sepsets;
};

ScoreConfig learner_score_config(Learner learner, const RunConfig& cfg, std::uint64_t seed) {
    ScoreConfig s = cfg.score;
    s.seed = seed;
    if (learner != Learner::Tces) {
        s.lambda_sheaf = 0.0;
        s.lambda_j = 0.0;
    }
    if (learner == Learner::Ges) {
        s.lambda_top = 0.0;
        s.lambda_tri = 0.0;
    }
    return s;
}

FitOutput fit_one(Learner learner, const MultiRegimeData& data, const RunConfig& cfg, std::uint64_t seed) {
    FitOutput out;
    if (learner == Learner::Ci) {
        SkeletonResult sk = skeleton_search(data, cfg.ci);
        out.adj = orient(sk.skeleton, sk.sepsets).as_adjacency();
        out.sepsets = std::move(sk.sepsets);
        return out;
    }
    ScoreConfig s = learner_score_config(learner, cfg, seed);
    if (cfg.bootstrap > 0) {
        BootstrapFrequencies f = bootstrap_ges(data, cfg.bootstrap, s, seed, 1);
        out.adj = (f.directed.array() >= 0.5).cast<int>();
        out.adj.diagonal().setZero();
        return out;
    }
    // report the equivalence class: orientations GES cannot identify would
    // otherwise differ arbitrarily between regimes and vanish under intersection
    out.adj = cpdag(tces_search(data, s).dag).as_adjacency();
    return out;
}

MultiRegimeData single_regime(const MultiRegimeData& data, std::size_t e) {
    MultiRegimeData one;
    one.labels = data.labels;
    one.regimes.push_back(data.regimes[e]);
    return one;
}

MultiRegimeData pooled_regime(const MultiRegimeData& data) {
    MultiRegimeData one;
    one.labels = data.labels;
    RegimeDataset ds;
    ds.regime_id = "pooled";
    ds.spec.regime_id = "pooled";
    ds.data = data.pooled();
    one.regimes.push_back(std::move(ds));
    return one;
}

ScoreMode primary_mode(Learner l) { return l == Learner::Ci ? ScoreMode::Skeleton : ScoreMode::Directed; }

std::map<std::string, MetricBlock> score_graph(const Pdag& pred, const Adj& truth) {
    std::map<std::string, MetricBlock> m;
    Adj a = pred.as_adjacency();
    m["skeleton"] = {confusion(a, truth, ScoreMode::Skeleton), shd(pred, truth, ScoreMode::Skeleton)};
    m["directed"] = {confusion(a, truth, ScoreMode::Directed), shd(pred, truth, ScoreMode::Directed)};
    return m;
}

std::map<std::string, MetricBlock> score_graph(const Adj& pred, const Adj& truth) {
    std::map<std::string, MetricBlock> m;
    m["skeleton"] = {confusion(pred, truth, ScoreMode::Skeleton), shd(pred, truth, ScoreMode::Skeleton)};
    m["directed"] = {confusion(pred, truth, ScoreMode::Directed), shd(pred, truth, ScoreMode::Directed)};
    return m;
}

nlohmann::ordered_json metrics_json(const std::map<std::string, MetricBlock>& m) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [mode, b] : m)
        j[mode] = {{"tp", b.confusion.tp},
                   {"fp", b.confusion.fp},
                   {"fn", b.confusion.fn},
                   {"tn", b.confusion.tn},
                   {"precision", b.confusion.precision},
                   {"recall", b.confusion.recall},
                   {"f1", b.confusion.f1},
                   {"shd", b.shd.shd},
                   {"skeleton_diff", b.shd.skeleton_diff},
                   {"orientation_flips", b.shd.orientation_flips},
                   {"dir_sym", b.shd.dir_sym}};
    return j;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_int_matrix_csv(const std::string& path, const Eigen::MatrixXi& m, const std::vector<std::string>& labels) {
    write_adjacency_csv(path, m, labels);  // same layout, counts instead of 0/1
}

std::string safe_name(std::string s) {
    for (char& c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
    return s;
}

}  // namespace

Adj fit_adjacency(Learner learner, const MultiRegimeData& data, const RunConfig& cfg, std::uint64_t seed, int) {
    return fit_one(learner, data, cfg, seed).adj;
}

RunReport run_pipeline(const RunConfig& cfg) {
    cfg.validate();
    std::vector<std::string> warnings;
    MultiRegimeData data = load_run_data(cfg, &warnings);
    RunReport r = run_pipeline(cfg, data);
    r.warnings.insert(r.warnings.begin(), warnings.begin(), warnings.end());
    return r;
}

RunReport run_pipeline(const RunConfig& cfg, const MultiRegimeData& data) {
    if (cfg.workers < 1) throw Error(ErrorKind::invalid_config, "workers must be >= 1");
    data.validate();
    const auto t_start = std::chrono::steady_clock::now();
    RunReport rep;
    rep.labels = data.labels;
    rep.workers = cfg.workers;
    rep.has_truth = data.truth.has_value();
    const int d = data.d();

    // map: one independent task per regime
    const std::size_t E = data.regimes.size();
    std::vector<FitOutput> fits(E);
    auto t0 = std::chrono::steady_clock::now();
    auto errors = parallel_for_collect(E, cfg.workers, [&](std::size_t e) {
        fits[e] = fit_one(cfg.learner, single_regime(data, e), cfg, derive_seed(cfg.seed, 7000 + e));
    });
    rep.timing["map_seconds"] = seconds_since(t0);

    // reduce in regime-id order
    std::vector<std::size_t> order(E);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return natural_less(data.regimes[a].regime_id, data.regimes[b].regime_id);
    });
    std::vector<std::size_t> ok;
    for (std::size_t e : order) {
        RegimeSummary s{data.regimes[e].regime_id, data.regimes[e].n(), 0, ""};
        if (errors[e]) {
            try {
                std::rethrow_exception(errors[e]);
            } catch (const std::exception& ex) {
                s.error = ex.what();
            } catch (...) {
                s.error = "unknown failure";
            }
            rep.warnings.push_back("regime " + s.regime_id + " failed: " + s.error);
        } else {
            s.edges = skeleton(fits[e].adj).sum() / 2;
            ok.push_back(e);
            rep.regime_adjs.push_back(fits[e].adj);
        }
        rep.regimes.push_back(s);
    }
    if (ok.empty()) throw Error(ErrorKind::insufficient_data, "every regime failed");

    t0 = std::chrono::steady_clock::now();
    FitOutput pooled = cfg.learner == Learner::Ci
                           ? fit_one(cfg.learner, pooled_regime(data), cfg, derive_seed(cfg.seed, 6999))
                           : fit_one(cfg.learner, data, cfg, derive_seed(cfg.seed, 6999));
    rep.pooled = pooled.adj;
    rep.timing["pooled_seconds"] = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    rep.support = support(rep.regime_adjs);
    for (const auto& rule : cfg.rules) {
        RuleResult rr;
        rr.rule = rule;
        StreamStats st;
        rr.adj = aggregate_streaming(rep.regime_adjs, rule, &st);
        rr.reducer_visits = st.visits.sum();
        rep.rules.push_back(std::move(rr));
    }

    OrientationPolicy policy = cfg.policy;
    if (!cfg.guards_file.empty())
        for (auto g : read_guards(cfg.guards_file, data.labels)) policy.guards.insert(g);
    if (!cfg.pi_grid.empty()) {
        if (ok.size() < 2) {
            rep.warnings.push_back("pi selection skipped: needs at least two usable regimes");
        } else {
            // hold out the last ~20% of regimes (at least one) for validation
            const std::size_t h = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.2 * ok.size())));
            const std::size_t n_train = ok.size() - h;
            std::vector<Adj> train_adjs(rep.regime_adjs.begin(), rep.regime_adjs.begin() + n_train);
            std::vector<Eigen::MatrixXd> train, val;
            for (std::size_t k = 0; k < ok.size(); ++k)
                (k < n_train ? train : val).push_back(data.regimes[ok[k]].data);
            SupportTable tr = support(train_adjs);
            rep.pi = select_pi(tr.F, cfg.pi_grid, policy, train, val);
            rep.pi_graph = orient_net_preference(rep.support.F, policy, pi_skeleton(rep.support.F, rep.pi->pi));
        }
    }
    rep.timing["reduce_seconds"] = seconds_since(t0);

    // stability over every pair seen in at least one regime
    std::vector<std::pair<int, int>> seen;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (rep.support.C(i, j) > 0) seen.emplace_back(i, j);
    if (!seen.empty()) {
        Eigen::MatrixXd scores(seen.size(), rep.regime_adjs.size());
        for (std::size_t k = 0; k < seen.size(); ++k)
            for (std::size_t e = 0; e < rep.regime_adjs.size(); ++e)
                scores(k, e) = rep.regime_adjs[e](seen[k].first, seen[k].second);
        rep.stability = stability_index(scores);
    }

    if (data.truth) {
        const Adj& truth = data.truth->adj;
        rep.pooled_metrics = score_graph(rep.pooled, truth);
        for (auto& rr : rep.rules) rr.metrics = score_graph(rr.adj, truth);
        if (rep.pi) rep.pi_metrics = score_graph(rep.pi_graph, truth);
    }

    if (!cfg.out_dir.empty()) {
        t0 = std::chrono::steady_clock::now();
        fs::create_directories(cfg.out_dir);
        auto path = [&](const std::string& name) {
            rep.artifacts.push_back(name);
            return (fs::path(cfg.out_dir) / name).string();
        };
        for (std::size_t k = 0; k < ok.size(); ++k) {
            const auto& id = data.regimes[ok[k]].regime_id;
            write_adjacency_csv(path("A_env_" + safe_name(id) + ".csv"), rep.regime_adjs[k], data.labels);
            if (fits[ok[k]].sepsets) write_sepsets_json(path("sepsets_" + safe_name(id) + ".json"), *fits[ok[k]].sepsets);
        }
        write_adjacency_csv(path("A_pooled.csv"), rep.pooled, data.labels);
        for (const auto& rr : rep.rules)
            write_adjacency_csv(path("A_Jstable_" + rr.rule.name() + ".csv"), rr.adj, data.labels);
        if (rep.pi) write_adjacency_csv(path("A_Jstable_pi.csv"), rep.pi_graph.as_adjacency(), data.labels);
        write_int_matrix_csv(path("support_counts.csv"), rep.support.C, data.labels);
        write_real_matrix_csv(path("stability.csv"), rep.support.F, data.labels);
        MarginReport mr = stability_margin_report(rep.support);
        write_real_matrix_csv(path("margins.csv"), mr.margins, data.labels);
        {
            std::ofstream os(path("support_curve.csv"));
            os << "t,pairs\n";
            for (const auto& [t, c] : mr.curve) os << t << ',' << c << '\n';
        }
        if (data.truth) write_adjacency_csv(path("A_true.csv"), data.truth->adj, data.labels);
        rep.artifacts.push_back("report.json");
        rep.timing["write_seconds"] = seconds_since(t0);
        rep.timing["total_seconds"] = seconds_since(t_start);
        std::ofstream os((fs::path(cfg.out_dir) / "report.json").string());
        if (!os) throw Error(ErrorKind::io_failure, "cannot write report.json");
        os << rep.to_json(cfg).dump(2) << '\n';
    } else {
        rep.timing["total_seconds"] = seconds_since(t_start);
    }
    return rep;
}

nlohmann::ordered_json RunReport::to_json(const RunConfig& cfg, bool include_timing) const {
    using nlohmann::ordered_json;
    ordered_json j;
    j["schema"] = kReportSchema;

    ordered_json c;
    if (cfg.synthetic)
        c["synthetic"] = {{"d", cfg.synthetic->d},
                          {"density", cfg.synthetic->density},
                          {"regimes", cfg.synthetic->regimes},
                          {"n_per", cfg.synthetic->n_per},
                          {"mean_shift", cfg.mean_shift}};
    else
        c["input"] = cfg.input;
    c["learner"] = to_string(cfg.learner);
    if (cfg.learner == Learner::Ci) {
        c["alpha"] = cfg.ci.alpha;
        c["depth"] = cfg.ci.depth;
        c["agg"] = to_string(cfg.ci.kind);
        c["veto"] = cfg.ci.veto == VetoGate::None        ? "none"
                    : cfg.ci.veto == VetoGate::Reference ? "reference"
                                                         : "any";
        if (cfg.ci.veto == VetoGate::Reference) c["veto_ref"] = cfg.ci.veto_ref;
    } else {
        c["lambda_top"] = cfg.score.lambda_top;
        c["lambda_tri"] = cfg.score.lambda_tri;
        c["lambda_sheaf"] = cfg.score.lambda_sheaf;
        c["lambda_j"] = cfg.score.lambda_j;
        c["dmax"] = cfg.score.d_max;
        c["bootstrap"] = cfg.bootstrap;
    }
    ordered_json rule_names = ordered_json::array();
    for (const auto& r : cfg.rules) rule_names.push_back(r.name());
    c["rules"] = rule_names;
    c["pi_grid"] = cfg.pi_grid;
    c["delta"] = cfg.policy.delta_margin;
    c["seed"] = cfg.seed;
    j["config"] = c;

    j["labels"] = labels;
    ordered_json regs = ordered_json::array();
    for (const auto& r : regimes) {
        ordered_json x{{"id", r.regime_id}, {"n", r.n}, {"edges", r.edges}};
        if (!r.error.empty()) x["error"] = r.error;
        regs.push_back(x);
    }
    j["regimes"] = regs;
    j["support"] = {{"E", support.E}, {"files", {"support_counts.csv", "stability.csv"}}};

    ordered_json pooled_j{{"edges", skeleton(pooled).sum() / 2}};
    if (has_truth) pooled_j["metrics"] = metrics_json(pooled_metrics);
    j["pooled"] = pooled_j;

    ordered_json rr = ordered_json::array();
    for (const auto& r : rules) {
        ordered_json x{{"rule", r.rule.name()}, {"edges", skeleton(r.adj).sum() / 2}, {"reducer_visits", r.reducer_visits}};
        if (has_truth) x["metrics"] = metrics_json(r.metrics);
        rr.push_back(x);
    }
    j["aggregation"] = rr;

    if (pi) {
        ordered_json t = ordered_json::array();
        for (const auto& s : pi->table)
            t.push_back({{"pi", s.pi},
                         {"val_loglik", s.val_loglik},
                         {"edges", s.edges},
                         {"directed", s.directed},
                         {"undirected_dropped", s.dropped_undirected}});
        ordered_json p{{"pi", pi->pi}, {"delta", cfg.policy.delta_margin}, {"table", t}};
        if (has_truth) p["metrics"] = metrics_json(pi_metrics);
        j["pi_selection"] = p;
    }
    if (stability) j["stability_index"] = {{"value", *stability}, {"var_max", "per-run"}};
    j["warnings"] = warnings;
    j["artifacts"] = artifacts;
    if (include_timing) {
        ordered_json tj = ordered_json::object();
        tj["workers"] = workers;
        for (const auto& [k, v] : timing) tj[k] = v;
        j["timing"] = tj;
    }
    return j;
}

std::vector<SweepRow> sweep(const RunConfig& base, const SweepGrid& grid) {
    std::vector<double> alphas = grid.alphas.empty() ? std::vector<double>{base.ci.alpha} : grid.alphas;
    std::vector<int> depths = grid.depths.empty() ? std::vector<int>{base.ci.depth} : grid.depths;
    std::vector<double> tops = grid.lambda_tops.empty() ? std::vector<double>{base.score.lambda_top} : grid.lambda_tops;
    std::vector<SweepRow> rows;
    const ScoreMode mode = primary_mode(base.learner);
    const std::string key = mode == ScoreMode::Skeleton ? "skeleton" : "directed";
    int cell = 0;
    for (double a : alphas)
        for (int dep : depths)
            for (double lt : tops) {
                RunConfig cfg = base;
                cfg.ci.alpha = a;
                cfg.ci.depth = dep;
                cfg.score.lambda_top = lt;
                if (!base.out_dir.empty())
                    cfg.out_dir = (fs::path(base.out_dir) / ("cell_" + std::to_string(cell))).string();
                auto base_cells = [&]() {
                    SweepRow r;
                    r.cells["cell"] = std::to_string(cell);
                    r.cells["alpha"] = format_real(a);
                    r.cells["depth"] = std::to_string(dep);
                    r.cells["lambda_top"] = format_real(lt);
                    r.cells["learner"] = to_string(base.learner);
                    return r;
                };
                try {
                    RunReport rep = run_pipeline(cfg);
                    auto emit = [&](const std::string& method, const std::map<std::string, MetricBlock>& m, long edges) {
                        SweepRow r = base_cells();
                        r.cells["method"] = method;
                        r.cells["edges"] = std::to_string(edges);
                        auto it = m.find(key);
                        if (it != m.end()) {
                            const auto& b = it->second;
                            r.cells["tp"] = std::to_string(b.confusion.tp);
                            r.cells["fp"] = std::to_string(b.confusion.fp);
                            r.cells["fn"] = std::to_string(b.confusion.fn);
                            r.cells["precision"] = format_real(b.confusion.precision);
                            r.cells["recall"] = format_real(b.confusion.recall);
                            r.cells["f1"] = format_real(b.confusion.f1);
                            r.cells["shd"] = std::to_string(b.shd.shd);
                        }
                        r.cells["map_seconds"] = format_real(rep.timing["map_seconds"]);
                        r.cells["total_seconds"] = format_real(rep.timing["total_seconds"]);
                        rows.push_back(std::move(r));
                    };
                    emit("pooled", rep.pooled_metrics, skeleton(rep.pooled).sum() / 2);
                    for (const auto& rr : rep.rules) emit(rr.rule.name(), rr.metrics, skeleton(rr.adj).sum() / 2);
                    if (rep.pi) emit("pi", rep.pi_metrics, skeleton(rep.pi_graph).sum() / 2);
                } catch (const std::exception& ex) {
                    SweepRow r = base_cells();
                    r.cells["method"] = "error";
                    r.cells["error"] = ex.what();
                    rows.push_back(std::move(r));
                }
                ++cell;
            }
    // mark best rows per metric
    double best_f1 = -1, best_shd = 1e300;
    for (const auto& r : rows) {
        if (r.cells.count("f1")) best_f1 = std::max(best_f1, std::stod(r.cells.at("f1")));
        if (r.cells.count("shd")) best_shd = std::min(best_shd, std::stod(r.cells.at("shd")));
    }
    for (auto& r : rows) {
        r.cells["best_f1"] = r.cells.count("f1") && std::stod(r.cells["f1"]) == best_f1 ? "1" : "0";
        r.cells["best_shd"] = r.cells.count("shd") && std::stod(r.cells["shd"]) == best_shd ? "1" : "0";
    }
    return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    static const std::vector<std::string> cols{"cell", "alpha", "depth", "lambda_top", "learner", "method",
                                               "edges", "tp", "fp", "fn", "precision", "recall", "f1", "shd",
                                               "best_f1", "best_shd", "map_seconds", "total_seconds", "error"};
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::io_failure, "cannot write " + path);
    for (std::size_t c = 0; c < cols.size(); ++c) os << (c ? "," : "") << cols[c];
    os << '\n';
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            auto it = r.cells.find(cols[c]);
            std::string v = it == r.cells.end() ? "" : it->second;
            std::replace(v.begin(), v.end(), ',', ';');
            os << (c ? "," : "") << v;
        }
        os << '\n';
    }
}

}  // namespace jstable
