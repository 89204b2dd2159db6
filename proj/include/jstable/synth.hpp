#pragma once

#include "jstable/graph.hpp"
#include "jstable/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace jstable {

struct LinearSem {
    Dag dag;
    Eigen::MatrixXd weights;    // W(i,j) is the coefficient of i in j's equation
    Eigen::VectorXd noise_std;

    int d() const { return dag.d(); }
};

struct RegimeSpec {
    std::string regime_id;
    std::optional<int> target;
    double mean_shift = 0.0;
};

struct RegimeDataset {
    std::string regime_id;
    Eigen::MatrixXd data;  // n x d
    RegimeSpec spec;

    int n() const { return static_cast<int>(data.rows()); }
};

struct MultiRegimeData {
    std::vector<RegimeDataset> regimes;
    std::vector<std::string> labels;
    std::optional<Dag> truth;

    int d() const { return static_cast<int>(labels.size()); }
    int total_rows() const;
    Eigen::MatrixXd pooled() const;
    std::vector<Eigen::MatrixXd> matrices() const;
    void validate() const;
};

Dag sample_dag(int d, double density, Rng& rng);
LinearSem sample_weights(const Dag& dag, Rng& rng);
RegimeDataset simulate_regime(const LinearSem& sem, const RegimeSpec& spec, int n, Rng& rng);

// regime e0 observational, e1..e{R-1} each intervene on a distinct node
MultiRegimeData make_benchmark(int d, double density, int n_regimes, int n_per, std::uint64_t seed,
                               double mean_shift = 0.0);

// column-wise z-scoring; zero-variance columns are only centred
Eigen::MatrixXd zscore(const Eigen::MatrixXd& x);

}  // namespace jstable
