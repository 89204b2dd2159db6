#include "jstable/metrics.hpp"
#include "jstable/error.hpp"

#include <algorithm>

namespace jstable {

namespace {

void same_size(const Adj& a, const Adj& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
        throw Error(ErrorKind::dimension_mismatch, "graphs differ in size");
}

}  // namespace

Confusion confusion_from_counts(long tp, long fp, long fn, long tn) {
    Confusion c{tp, fp, fn, tn};
    c.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    c.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    c.f1 = c.precision + c.recall > 0 ? 2 * c.precision * c.recall / (c.precision + c.recall) : 0.0;
    return c;
}

Confusion confusion(const Adj& pred, const Adj& truth, ScoreMode mode) {
    same_size(pred, truth);
    const int d = static_cast<int>(pred.rows());
    long tp = 0, fp = 0, fn = 0, tn = 0;
    auto count = [&](bool p, bool t) {
        if (p && t) ++tp;
        else if (p) ++fp;
        else if (t) ++fn;
        else ++tn;
    };
    if (mode == ScoreMode::Directed) {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                if (i != j) count(pred(i, j) != 0, truth(i, j) != 0);
    } else {
        Adj sp = skeleton(pred), st = skeleton(truth);
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) count(sp(i, j) != 0, st(i, j) != 0);
    }
    return confusion_from_counts(tp, fp, fn, tn);
}

ShdBreakdown shd(const Pdag& pred, const Adj& truth, ScoreMode mode) {
    same_size(pred.directed, truth);
    const int d = pred.d();
    ShdBreakdown s;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            bool pa = pred.adjacent(i, j);
            bool ta = truth(i, j) || truth(j, i);
            if (pa != ta) {
                ++s.skeleton_diff;
                continue;
            }
            if (!pa || mode == ScoreMode::Skeleton) continue;
            bool same = (truth(i, j) && !truth(j, i) && pred.is_directed(i, j) && !pred.is_directed(j, i)) ||
                        (truth(j, i) && !truth(i, j) && pred.is_directed(j, i) && !pred.is_directed(i, j)) ||
                        (truth(i, j) && truth(j, i) && pred.directed(i, j) && pred.directed(j, i));
            // an undirected prediction over a directed truth edge is one flip
            if (!same) ++s.orientation_flips;
        }
    s.shd = s.skeleton_diff + s.orientation_flips;
    s.dir_sym = s.skeleton_diff + 2 * s.orientation_flips;
    return s;
}

ShdBreakdown shd(const Adj& pred, const Adj& truth, ScoreMode mode) {
    same_size(pred, truth);
    const int d = static_cast<int>(pred.rows());
    Pdag p(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j && pred(i, j)) p.directed(i, j) = 1;
    return shd(p, truth, mode);
}

double jaccard(const Adj& a, const Adj& b) {
    same_size(a, b);
    long inter = 0, uni = 0;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) {
            if (i == j) continue;
            bool x = a(i, j) != 0, y = b(i, j) != 0;
            inter += x && y;
            uni += x || y;
        }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / uni;
}

double stability_index(const Eigen::MatrixXd& scores, double eps) {
    if (scores.rows() < 1 || scores.cols() < 1)
        throw Error(ErrorKind::invalid_argument, "stability_index needs an edge and a regime");
    const Eigen::Index E = scores.rows();
    Eigen::VectorXd var(E);
    for (Eigen::Index e = 0; e < E; ++e) {
        double mu = scores.row(e).mean();
        var(e) = (scores.row(e).array() - mu).square().mean();
    }
    // Var^max is the largest per-edge variance in this run
    double vmax = var.maxCoeff();
    double stab = 1.0 - var.sum() / static_cast<double>(E) / (vmax + eps);
    return std::clamp(stab, 0.0, 1.0);
}

CiStatement make_ci(int x, int j, std::vector<int> z) {
    std::sort(z.begin(), z.end());
    return {x, j, std::move(z)};
}

std::set<CiStatement> local_markov(const Dag& g) {
    std::set<CiStatement> out;
    const int d = g.d();
    for (int j = 0; j < d; ++j) {
        auto pa = g.parents(j);
        for (int x = 0; x < d; ++x) {
            if (x == j || g.adj(x, j) || has_directed_path(g.adj, j, x)) continue;
            out.insert(make_ci(x, j, pa));
        }
    }
    return out;
}

SoundComplete soundness_completeness(const Dag& g, const std::set<CiStatement>& ci_j) {
    const int d = g.d();
    for (const auto& [x, j, z] : ci_j) {
        if (x < 0 || j < 0 || x >= d || j >= d || x == j)
            throw Error(ErrorKind::malformed_input, "CI statement names invalid variables");
        for (int k : z)
            if (k < 0 || k >= d || k == x || k == j)
                throw Error(ErrorKind::malformed_input, "CI conditioning set invalid");
    }
    auto implied = local_markov(g);
    SoundComplete r;
    long missing = 0, extra = 0;
    for (const auto& c : implied)
        if (!ci_j.count(c)) ++missing;
    for (const auto& c : ci_j)
        if (!implied.count(c)) ++extra;
    r.delta_sound = implied.empty() ? 0.0 : static_cast<double>(missing) / implied.size();
    r.delta_complete = ci_j.empty() ? 0.0 : static_cast<double>(extra) / ci_j.size();
    return r;
}

}  // namespace jstable
