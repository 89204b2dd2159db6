#include "jstable/synth.hpp"
#include "jstable/error.hpp"

#include <cmath>
#include <set>

namespace jstable {

int MultiRegimeData::total_rows() const {
    int n = 0;
    for (const auto& r : regimes) n += r.n();
    return n;
}

Eigen::MatrixXd MultiRegimeData::pooled() const {
    Eigen::MatrixXd out(total_rows(), d());
    int row = 0;
    for (const auto& r : regimes) {
        out.middleRows(row, r.n()) = r.data;
        row += r.n();
    }
    return out;
}

std::vector<Eigen::MatrixXd> MultiRegimeData::matrices() const {
    std::vector<Eigen::MatrixXd> out;
    out.reserve(regimes.size());
    for (const auto& r : regimes) out.push_back(r.data);
    return out;
}

void MultiRegimeData::validate() const {
    std::set<std::string> ids;
    for (const auto& r : regimes) {
        if (r.data.cols() != d())
            throw Error(ErrorKind::dimension_mismatch, "regime " + r.regime_id + " column count");
        if (r.n() < 1) throw Error(ErrorKind::insufficient_data, "regime " + r.regime_id + " is empty");
        if (!ids.insert(r.regime_id).second)
            throw Error(ErrorKind::invalid_config, "duplicate regime id " + r.regime_id);
    }
    if (truth && truth->d() != d()) throw Error(ErrorKind::dimension_mismatch, "truth graph size");
}

Dag sample_dag(int d, double density, Rng& rng) {
    if (d < 2) throw Error(ErrorKind::invalid_argument, "sample_dag needs d >= 2");
    if (density < 0) throw Error(ErrorKind::invalid_density, "density must be nonnegative");
    const long pairs = static_cast<long>(d) * (d - 1) / 2;
    const long m = static_cast<long>(std::floor(density * d + 1e-9));
    if (m > pairs) throw Error(ErrorKind::invalid_density, "more edges requested than pairs available");

    auto perm = rng.permutation(d);
    // pair (a,b) with a > b in permutation positions; edge runs perm[a] -> perm[b]
    std::vector<std::pair<int, int>> cand;
    cand.reserve(pairs);
    for (int a = 1; a < d; ++a)
        for (int b = 0; b < a; ++b) cand.emplace_back(a, b);
    Adj adj = Adj::Zero(d, d);
    for (long k = 0; k < m; ++k) {
        std::size_t pick = k + rng.below(cand.size() - k);
        std::swap(cand[k], cand[pick]);
        adj(perm[cand[k].first], perm[cand[k].second]) = 1;
    }
    return Dag(std::move(adj));
}

LinearSem sample_weights(const Dag& dag, Rng& rng) {
    const int d = dag.d();
    LinearSem sem{dag, Eigen::MatrixXd::Zero(d, d), Eigen::VectorXd::Ones(d)};
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            if (!dag.adj(i, j)) continue;
            double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
            sem.weights(i, j) = sign * rng.uniform(0.5, 2.0);
        }
    return sem;
}

RegimeDataset simulate_regime(const LinearSem& sem, const RegimeSpec& spec, int n, Rng& rng) {
    if (n < 1) throw Error(ErrorKind::invalid_argument, "simulate_regime needs n >= 1");
    const int d = sem.d();
    if (spec.target && (*spec.target < 0 || *spec.target >= d))
        throw Error(ErrorKind::invalid_argument, "intervention target out of range");
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, d);
    for (int v : sem.dag.order()) {
        double sd = sem.noise_std(v);
        bool cut = spec.target && *spec.target == v;
        for (int r = 0; r < n; ++r) x(r, v) = sd * rng.normal();
        if (cut) {
            x.col(v).array() += spec.mean_shift;
            continue;
        }
        for (int u = 0; u < d; ++u)
            if (sem.dag.adj(u, v)) x.col(v) += sem.weights(u, v) * x.col(u);
    }
    return RegimeDataset{spec.regime_id, std::move(x), spec};
}

MultiRegimeData make_benchmark(int d, double density, int n_regimes, int n_per, std::uint64_t seed,
                               double mean_shift) {
    if (n_regimes < 1) throw Error(ErrorKind::invalid_config, "need at least one regime");
    if (n_regimes - 1 > d)
        throw Error(ErrorKind::invalid_config, "more interventional regimes than nodes");
    Rng rng(seed);
    Dag dag = sample_dag(d, density, rng);
    LinearSem sem = sample_weights(dag, rng);
    auto targets = rng.permutation(d);

    MultiRegimeData out;
    out.labels = dag.labels;
    out.truth = dag;
    for (int r = 0; r < n_regimes; ++r) {
        RegimeSpec spec{"e" + std::to_string(r), std::nullopt, 0.0};
        if (r > 0) {
            spec.target = static_cast<int>(targets[r - 1]);
            spec.mean_shift = mean_shift;
        }
        Rng stream(derive_seed(seed, 1000 + r));
        out.regimes.push_back(simulate_regime(sem, spec, n_per, stream));
    }
    return out;
}

Eigen::MatrixXd zscore(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd z = x;
    const double n = static_cast<double>(x.rows());
    for (int c = 0; c < x.cols(); ++c) {
        double mu = x.col(c).mean();
        z.col(c).array() -= mu;
        double sd = std::sqrt(z.col(c).squaredNorm() / n);
        if (sd > 0) z.col(c) /= sd;
    }
    return z;
}

}  // namespace jstable
