#include "jstable/aggregate.hpp"
#include "jstable/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace jstable {

ThresholdRule ThresholdRule::parse(const std::string& text) {
    auto colon = text.find(':');
    std::string head = text.substr(0, colon);
    std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    auto number = [&]() {
        if (arg.empty()) throw Error(ErrorKind::invalid_threshold, "rule '" + text + "' needs a value");
        try {
            std::size_t used = 0;
            double v = std::stod(arg, &used);
            if (used != arg.size()) throw std::invalid_argument(arg);
            return v;
        } catch (const std::exception&) {
            throw Error(ErrorKind::invalid_threshold, "bad value in rule '" + text + "'");
        }
    };
    ThresholdRule r;
    if (head == "intersection" && arg.empty()) {
        r.kind = Intersection;
    } else if (head == "union" && arg.empty()) {
        r.kind = Union;
    } else if (head == "kofe") {
        r.kind = KOfE;
        r.value = number();
    } else if (head == "allbutk") {
        r.kind = AllButK;
        r.value = number();
    } else if (head == "ratio") {
        r.kind = Ratio;
        r.value = number();
        if (!(r.value > 0.0 && r.value <= 1.0)) throw Error(ErrorKind::invalid_threshold, "ratio must lie in (0,1]");
    } else {
        throw Error(ErrorKind::invalid_threshold, "unknown rule '" + text + "'");
    }
    if ((r.kind == KOfE || r.kind == AllButK) && r.value != std::floor(r.value))
        throw Error(ErrorKind::invalid_threshold, "count rules need an integer");
    return r;
}

std::string ThresholdRule::name() const {
    std::ostringstream os;
    switch (kind) {
        case Intersection: return "intersection";
        case Union: return "union";
        case KOfE: os << "kofe" << static_cast<int>(value); break;
        case AllButK: os << "allbutk" << static_cast<int>(value); break;
        case Ratio: os << "ratio" << value; break;
    }
    return os.str();
}

int ThresholdRule::min_count(int E) const {
    if (E < 1) throw Error(ErrorKind::invalid_threshold, "no charts");
    int tau = 0;
    switch (kind) {
        case Intersection: tau = E; break;
        case Union: tau = 1; break;
        case KOfE: tau = static_cast<int>(value); break;
        case AllButK: tau = E - static_cast<int>(value); break;
        case Ratio:
            if (!(value > 0.0 && value <= 1.0)) throw Error(ErrorKind::invalid_threshold, "ratio outside (0,1]");
            // same predicate as F >= tau with F = C/E
            tau = 0;
            while (tau <= E && static_cast<double>(tau) / E < value) ++tau;
            return tau;
    }
    if (tau < 1 || tau > E) throw Error(ErrorKind::invalid_threshold, "threshold outside [1,E] for " + name());
    return tau;
}

SupportTable support(const std::vector<Adj>& adjs) {
    if (adjs.empty()) throw Error(ErrorKind::invalid_argument, "support needs at least one matrix");
    const auto d = adjs.front().rows();
    SupportTable t;
    t.E = static_cast<int>(adjs.size());
    t.C = Eigen::MatrixXi::Zero(d, d);
    for (const auto& a : adjs) {
        if (a.rows() != d || a.cols() != d) throw Error(ErrorKind::dimension_mismatch, "support matrices differ");
        t.C += (a.array() != 0).cast<int>().matrix();
    }
    t.C.diagonal().setZero();
    t.F = t.C.cast<double>() / static_cast<double>(t.E);
    return t;
}

Adj aggregate(const SupportTable& table, const ThresholdRule& rule) {
    const int d = table.d();
    Adj out = Adj::Zero(d, d);
    if (rule.kind == ThresholdRule::Ratio) {
        rule.min_count(table.E);  // validates
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) out(i, j) = (i != j && table.F(i, j) >= rule.value) ? 1 : 0;
        return out;
    }
    const int tau = rule.min_count(table.E);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out(i, j) = (i != j && table.C(i, j) >= tau) ? 1 : 0;
    return out;
}

Adj aggregate_streaming(const std::vector<Adj>& charts, const ThresholdRule& rule, StreamStats* stats) {
    if (charts.empty()) throw Error(ErrorKind::invalid_argument, "no charts to aggregate");
    const int E = static_cast<int>(charts.size());
    const auto d = charts.front().rows();
    for (const auto& a : charts)
        if (a.rows() != d || a.cols() != d) throw Error(ErrorKind::dimension_mismatch, "chart sizes differ");
    const int tau = rule.min_count(E);
    Adj out = Adj::Zero(d, d);
    if (stats) stats->visits = Eigen::MatrixXi::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            int s = 0, seen = 0;
            bool keep = false;
            if (tau <= 0) {
                keep = true;
            } else {
                while (seen < E) {
                    s += charts[seen](i, j) ? 1 : 0;
                    ++seen;
                    if (s >= tau) {
                        keep = true;
                        break;
                    }
                    if (s + (E - seen) < tau) break;
                }
            }
            out(i, j) = keep ? 1 : 0;
            if (stats) stats->visits(i, j) = seen;
        }
    return out;
}

Adj pi_skeleton(const Eigen::MatrixXd& F, double pi) {
    if (!(pi >= 0.0 && pi <= 1.0)) throw Error(ErrorKind::invalid_threshold, "pi must lie in [0,1]");
    const auto d = F.rows();
    Adj s = Adj::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (std::max(F(i, j), F(j, i)) >= pi) s(i, j) = s(j, i) = 1;
    return s;
}

Pdag orient_net_preference(const Eigen::MatrixXd& F, const OrientationPolicy& policy, const Adj& base) {
    const int d = static_cast<int>(base.rows());
    if (F.rows() != d || F.cols() != d) throw Error(ErrorKind::dimension_mismatch, "F and skeleton differ");
    Pdag g(d);
    const double delta = policy.delta_margin;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            if (!base(i, j) && !base(j, i)) continue;
            double m = F(i, j) - F(j, i);
            bool ij_ok = !policy.guards.count({i, j});
            bool ji_ok = !policy.guards.count({j, i});
            if (m > 0 && m >= delta && ij_ok)
                g.directed(i, j) = 1;
            else if (m < 0 && -m >= delta && ji_ok)
                g.directed(j, i) = 1;
            else
                g.undirected(i, j) = g.undirected(j, i) = 1;
        }
    return g;
}

std::vector<double> default_pi_grid() {
    std::vector<double> g;
    for (int k = 1; k <= 10; ++k) g.push_back(k / 10.0);
    return g;
}

namespace {

Eigen::MatrixXd stack_rows(const std::vector<Eigen::MatrixXd>& parts) {
    if (parts.empty()) return {};
    Eigen::Index rows = 0;
    for (const auto& p : parts) rows += p.rows();
    Eigen::MatrixXd out(rows, parts.front().cols());
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.middleRows(at, p.rows()) = p;
        at += p.rows();
    }
    return out;
}

}  // namespace

double validation_loglik(const Pdag& g, const Eigen::MatrixXd& train, const Eigen::MatrixXd& val) {
    const int d = g.d();
    if (train.cols() != d || val.cols() != d) throw Error(ErrorKind::dimension_mismatch, "validation data width");
    if (val.rows() == 0) throw Error(ErrorKind::insufficient_data, "empty validation set");
    double total = 0.0;
    for (int v = 0; v < d; ++v) {
        std::vector<int> pa;
        for (int u = 0; u < d; ++u)
            if (g.directed(u, v)) pa.push_back(u);
        FitResult fit = ols_fit_robust(select_columns(train, pa), train.col(v));
        double var = std::max(fit.residual_variance, 1e-12);
        Eigen::VectorXd pred = Eigen::VectorXd::Constant(val.rows(), fit.intercept);
        if (!pa.empty()) pred += select_columns(val, pa) * fit.coefficients;
        double rss = (val.col(v) - pred).squaredNorm();
        total += -0.5 * val.rows() * std::log(2 * std::numbers::pi * var) - rss / (2 * var);
    }
    return total / static_cast<double>(val.rows());
}

Adj acyclic_directed_part(const Pdag& g, const Eigen::MatrixXd& F, int* dropped) {
    const int d = g.d();
    struct Cand {
        double margin;
        int u, v;
    };
    std::vector<Cand> cands;
    for (int u = 0; u < d; ++u)
        for (int v = 0; v < d; ++v)
            if (g.directed(u, v)) cands.push_back({F(u, v) - F(v, u), u, v});
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.margin > b.margin; });
    Adj out = Adj::Zero(d, d);
    int skipped = 0;
    for (const auto& c : cands) {
        if (has_directed_path(out, c.v, c.u)) {
            ++skipped;
            continue;
        }
        out(c.u, c.v) = 1;
    }
    if (dropped) *dropped = skipped;
    return out;
}

PiSelection select_pi(const Eigen::MatrixXd& F, const std::vector<double>& candidates, const OrientationPolicy& policy,
                      const std::vector<Eigen::MatrixXd>& train, const std::vector<Eigen::MatrixXd>& val) {
    if (candidates.empty()) throw Error(ErrorKind::invalid_config, "empty pi grid");
    if (val.empty()) throw Error(ErrorKind::insufficient_data, "select_pi needs a validation regime");
    PiSelection sel;
    if (candidates.size() == 1) {
        sel.pi = candidates.front();
    }
    Eigen::MatrixXd tr = stack_rows(train), va = stack_rows(val);
    double best = -std::numeric_limits<double>::infinity();
    for (double pi : candidates) {
        Pdag g = orient_net_preference(F, policy, pi_skeleton(F, pi));
        PiScore row;
        row.pi = pi;
        // a product of per-node conditionals is only a density on a DAG
        Pdag dag(acyclic_directed_part(g, F, &row.dropped_cyclic), Adj::Zero(g.d(), g.d()));
        row.val_loglik = validation_loglik(dag, tr, va);
        row.directed = g.directed.sum();
        row.dropped_undirected = g.undirected.sum() / 2;
        row.edges = row.directed + row.dropped_undirected;
        sel.table.push_back(row);
        if (candidates.size() == 1) continue;
        // ties go to the sparser graph
        if (row.val_loglik > best + 1e-12 || (std::fabs(row.val_loglik - best) <= 1e-12 && pi > sel.pi)) {
            if (row.val_loglik > best) best = row.val_loglik;
            sel.pi = pi;
        }
    }
    return sel;
}

std::vector<DiscreteTable> quantile_bin(const std::vector<std::string>& ids, const std::vector<Eigen::MatrixXd>& data,
                                        int bins) {
    if (ids.size() != data.size()) throw Error(ErrorKind::dimension_mismatch, "ids vs tables");
    if (bins < 1) throw Error(ErrorKind::invalid_config, "bins must be >= 1");
    Eigen::MatrixXd pooled = stack_rows(data);
    const int d = static_cast<int>(pooled.cols());
    std::vector<std::vector<double>> cuts(d);
    for (int v = 0; v < d; ++v) {
        std::vector<double> col(pooled.col(v).data(), pooled.col(v).data() + pooled.rows());
        std::sort(col.begin(), col.end());
        for (int k = 1; k < bins && !col.empty(); ++k) {
            std::size_t at = std::min(col.size() - 1, col.size() * k / bins);
            cuts[v].push_back(col[at]);
        }
    }
    std::vector<DiscreteTable> out;
    for (std::size_t e = 0; e < data.size(); ++e) {
        DiscreteTable t{ids[e], Eigen::MatrixXi(data[e].rows(), d), std::vector<int>(d, bins)};
        for (int r = 0; r < data[e].rows(); ++r)
            for (int v = 0; v < d; ++v) {
                auto it = std::upper_bound(cuts[v].begin(), cuts[v].end(), data[e](r, v));
                t.codes(r, v) = std::min<int>(bins - 1, static_cast<int>(it - cuts[v].begin()));
            }
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<double> adjustment_estimate(const DiscreteTable& t, int x_var, int x_val, int y_var,
                                        const std::vector<int>& z_vars, double smoothing) {
    const int d = static_cast<int>(t.levels.size());
    auto check = [d](int v) {
        if (v < 0 || v >= d) throw Error(ErrorKind::invalid_argument, "variable index out of range");
    };
    check(x_var);
    check(y_var);
    for (int z : z_vars) check(z);
    const int ny = t.levels[y_var];
    if (ny < 1) throw Error(ErrorKind::invalid_argument, "outcome has no levels");
    long nz = 1;
    for (int z : z_vars) nz *= t.levels[z];
    std::vector<double> cnt_z(nz, 0.0), cnt_xz(nz, 0.0), cnt_xzy(nz * ny, 0.0);
    const long n = t.codes.rows();
    for (long r = 0; r < n; ++r) {
        long zi = 0;
        for (int z : z_vars) zi = zi * t.levels[z] + t.codes(r, z);
        cnt_z[zi] += 1;
        if (t.codes(r, x_var) != x_val) continue;
        cnt_xz[zi] += 1;
        cnt_xzy[zi * ny + t.codes(r, y_var)] += 1;
    }
    std::vector<double> out(ny, 0.0);
    for (long zi = 0; zi < nz; ++zi) {
        double pz = (cnt_z[zi] + smoothing) / (n + smoothing * nz);
        for (int y = 0; y < ny; ++y)
            out[y] += pz * (cnt_xzy[zi * ny + y] + smoothing) / (cnt_xz[zi] + smoothing * ny);
    }
    double s = 0.0;
    for (double p : out) s += p;
    for (double& p : out) p /= s;
    return out;
}

std::vector<double> jdo_backdoor(const std::vector<DiscreteTable>& tables, int x_var, int x_val, int y_var,
                                 const std::vector<int>& z_vars, const std::vector<std::string>& cover,
                                 CoverCombiner combiner, double smoothing) {
    if (cover.empty()) throw Error(ErrorKind::invalid_argument, "empty cover");
    std::vector<std::vector<double>> per;
    long rows = 0;
    for (const auto& id : cover) {
        auto it = std::find_if(tables.begin(), tables.end(), [&](const DiscreteTable& t) { return t.regime_id == id; });
        if (it == tables.end()) throw Error(ErrorKind::invalid_argument, "cover names unknown regime " + id);
        rows += it->codes.rows();
        per.push_back(adjustment_estimate(*it, x_var, x_val, y_var, z_vars, smoothing));
    }
    if (rows == 0) throw Error(ErrorKind::insufficient_data, "outcome never observed in the cover");
    const std::size_t ny = per.front().size();
    std::vector<double> out(ny, 0.0);
    for (std::size_t y = 0; y < ny; ++y) {
        std::vector<double> vals;
        for (const auto& p : per) vals.push_back(p[y]);
        std::sort(vals.begin(), vals.end());
        std::size_t lo = 0, hi = vals.size();
        if (combiner == CoverCombiner::TrimmedMean && vals.size() >= 3) {
            ++lo;
            --hi;
        }
        double s = 0.0;
        for (std::size_t k = lo; k < hi; ++k) s += vals[k];
        out[y] = s / static_cast<double>(hi - lo);
    }
    double tot = 0.0;
    for (double p : out) tot += p;
    for (double& p : out) p /= tot;
    return out;
}

std::vector<double> mixture_conditional(const std::vector<std::vector<std::vector<double>>>& kernel,
                                        const std::vector<std::vector<double>>& mix, int x_val) {
    constexpr double kTol = 1e-9;
    if (x_val < 0 || x_val >= static_cast<int>(kernel.size()) || x_val >= static_cast<int>(mix.size()))
        throw Error(ErrorKind::malformed_input, "x value outside the tables");
    const auto& slices = kernel[x_val];
    const auto& w = mix[x_val];
    if (slices.size() != w.size() || slices.empty())
        throw Error(ErrorKind::malformed_input, "kernel and mix disagree on z levels");
    double ws = 0.0;
    for (double p : w) {
        if (p < 0) throw Error(ErrorKind::malformed_input, "negative mixing weight");
        ws += p;
    }
    if (std::fabs(ws - 1.0) > kTol) throw Error(ErrorKind::malformed_input, "mix is not normalized");
    const std::size_t ny = slices.front().size();
    std::vector<double> out(ny, 0.0);
    for (std::size_t z = 0; z < slices.size(); ++z) {
        if (slices[z].size() != ny) throw Error(ErrorKind::malformed_input, "ragged kernel");
        double ks = 0.0;
        for (double p : slices[z]) ks += p;
        if (std::fabs(ks - 1.0) > kTol) throw Error(ErrorKind::malformed_input, "kernel slice not normalized");
        for (std::size_t y = 0; y < ny; ++y) out[y] += slices[z][y] * w[z];
    }
    return out;
}

MarginReport stability_margin_report(const SupportTable& table) {
    MarginReport r;
    r.margins = table.F - table.F.transpose();
    const int d = table.d();
    for (int t = 0; t <= table.E; ++t) {
        long c = 0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                if (i != j && table.C(i, j) >= t) ++c;
        r.curve.emplace_back(t, c);
    }
    return r;
}

}  // namespace jstable
