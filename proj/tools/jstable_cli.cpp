// Command-line entry point: per-regime discovery, aggregation and reporting.
#include "jstable/error.hpp"
#include "jstable/interference.hpp"
#include "jstable/io.hpp"
#include "jstable/runner.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

template <class T>
std::vector<T> parse_list(const std::string& text) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::istringstream is(item);
        T v;
        if (!(is >> v) || !is.eof()) throw jstable::Error(jstable::ErrorKind::invalid_config, "bad list item '" + item + "'");
        out.push_back(v);
    }
    return out;
}

int run_interference_demo(const std::string& out_dir, std::uint64_t seed, int T, int K) {
    jstable::InterferenceConfig cfg;
    cfg.T = T;
    cfg.K = K;
    auto rep = jstable::run_interference(cfg, seed);
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
    jstable::write_interference_frequencies(std::cout, rep);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream f(std::filesystem::path(out_dir) / "interference_frequencies.csv");
        jstable::write_interference_frequencies(f, rep);
        std::ofstream c(std::filesystem::path(out_dir) / "charts.csv");
        jstable::write_charts(c, rep);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"per-regime causal discovery with j-stable aggregation"};
    jstable::RunConfig cfg;
    std::string synthetic, learner = "ci", agg = "fisher", veto_ref, pi_grid, alphas = "0.01", depths = "0";
    std::string lambda_tops, sheaf_metric = "energy", write_data;
    std::vector<std::string> rules;
    double lambda_top = 0.0;
    bool veto_any = false, interference = false;
    int demo_T = 20000, demo_K = 10;

    auto* in = app.add_option("--input", cfg.input, "CSV with feature columns and an env column");
    auto* syn = app.add_option("--synthetic", synthetic, "generate data: d:density:R:n_per");
    in->excludes(syn);
    app.add_option("--env-col", cfg.env_col, "regime label column")->capture_default_str();
    app.add_option("--min-rows", cfg.min_rows, "regimes with fewer rows are excluded")->capture_default_str();
    app.add_option("--mean-shift", cfg.mean_shift, "mean of intervened nodes in synthetic data")->capture_default_str();
    app.add_option("--learner", learner, "ges | cges | tces | ci")->capture_default_str();
    app.add_option("--alpha", alphas, "CI level; a comma list runs a sweep")->capture_default_str();
    app.add_option("--depth", depths, "max conditioning set size (-1: no limit); comma list sweeps")
        ->capture_default_str();
    app.add_option("--agg", agg, "fisher | stouffer | tippett | mean")->capture_default_str();
    app.add_option("--veto-ref", veto_ref, "reference regime for the j-stability veto");
    app.add_flag("--veto-any", veto_any, "veto whenever any regime rejects independence");
    app.add_option("--rule", rules, "intersection | union | kofe:N | allbutk:N | ratio:X (repeatable)");
    app.add_option("--pi-grid", pi_grid, "comma list of pi candidates; 'default' for 0.1..1.0");
    app.add_option("--delta", cfg.policy.delta_margin, "orientation margin")->capture_default_str();
    app.add_option("--guards", cfg.guards_file, "file of forbidden from,to edges");
    app.add_option("--lambda-top", lambda_top, "edge-count penalty")->capture_default_str();
    app.add_option("--lambda-top-grid", lambda_tops, "comma list of lambda_top values to sweep");
    app.add_option("--lambda-tri", cfg.score.lambda_tri, "triangle penalty")->capture_default_str();
    app.add_option("--lambda-sheaf", cfg.score.lambda_sheaf, "overlap-consistency penalty")->capture_default_str();
    app.add_option("--lambda-j", cfg.score.lambda_j, "coefficient drift penalty")->capture_default_str();
    app.add_option("--sheaf-metric", sheaf_metric, "energy | mmd | gauss_kl")->capture_default_str();
    app.add_option("--dmax", cfg.score.d_max, "max indegree")->capture_default_str();
    app.add_option("--bootstrap", cfg.bootstrap, "bootstrap replicates per regime (0: off)")->capture_default_str();
    app.add_option("--workers", cfg.workers, "concurrent regime tasks")->capture_default_str();
    app.add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    app.add_option("--out", cfg.out_dir, "output directory");
    app.add_option("--write-data", write_data, "also write the dataset CSV to this path");
    app.add_flag("--interference", interference, "run the wind-sector interference demo instead");
    app.add_option("--demo-T", demo_T, "interference demo length")->capture_default_str();
    app.add_option("--demo-K", demo_K, "interference charts per cover")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (interference) return run_interference_demo(cfg.out_dir, cfg.seed, demo_T, demo_K);

        if (!synthetic.empty()) cfg.synthetic = jstable::SyntheticSpec::parse(synthetic);
        cfg.learner = jstable::parse_learner(learner);
        cfg.ci.kind = jstable::parse_aggregator(agg);
        if (!veto_ref.empty()) {
            cfg.ci.veto = jstable::VetoGate::Reference;
            cfg.ci.veto_ref = veto_ref;
        }
        if (veto_any) cfg.ci.veto = jstable::VetoGate::AnyRegime;
        cfg.score.lambda_top = lambda_top;
        cfg.score.sheaf_metric = jstable::parse_sheaf_metric(sheaf_metric);
        if (!rules.empty()) {
            cfg.rules.clear();
            for (const auto& r : rules) cfg.rules.push_back(jstable::ThresholdRule::parse(r));
        }
        if (pi_grid == "default")
            cfg.pi_grid = jstable::default_pi_grid();
        else if (!pi_grid.empty())
            cfg.pi_grid = parse_list<double>(pi_grid);

        jstable::SweepGrid grid;
        grid.alphas = parse_list<double>(alphas);
        grid.depths = parse_list<int>(depths);
        grid.lambda_tops = parse_list<double>(lambda_tops);
        if (grid.alphas.empty() || grid.depths.empty())
            throw jstable::Error(jstable::ErrorKind::invalid_config, "alpha and depth need a value");
        cfg.ci.alpha = grid.alphas.front();
        cfg.ci.depth = grid.depths.front();
        cfg.validate();

        if (!write_data.empty()) {
            auto data = jstable::load_run_data(cfg);
            jstable::write_dataset_csv(write_data, data, cfg.env_col);
        }

        const bool is_sweep = grid.alphas.size() > 1 || grid.depths.size() > 1 || grid.lambda_tops.size() > 1;
        if (is_sweep) {
            auto rows = jstable::sweep(cfg, grid);
            std::string path = cfg.out_dir.empty() ? "sweep.csv" : (std::filesystem::path(cfg.out_dir) / "sweep.csv").string();
            if (!cfg.out_dir.empty()) std::filesystem::create_directories(cfg.out_dir);
            jstable::write_sweep_csv(path, rows);
            std::cout << "wrote " << rows.size() << " rows to " << path << '\n';
            return 0;
        }

        auto rep = jstable::run_pipeline(cfg);
        for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
        std::cout << rep.to_json(cfg).dump(2) << '\n';
    } catch (const jstable::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
