#pragma once

#include "jstable/graph.hpp"

#include <Eigen/Dense>

#include <set>
#include <tuple>
#include <vector>

namespace jstable {

enum class ScoreMode { Directed, Skeleton };

struct Confusion {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long tn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct ShdBreakdown {
    long skeleton_diff = 0;
    long orientation_flips = 0;
    long shd = 0;
    long dir_sym = 0;
};

Confusion confusion_from_counts(long tp, long fp, long fn, long tn = 0);
Confusion confusion(const Adj& pred, const Adj& truth, ScoreMode mode);

ShdBreakdown shd(const Pdag& pred, const Adj& truth, ScoreMode mode = ScoreMode::Directed);
ShdBreakdown shd(const Adj& pred, const Adj& truth, ScoreMode mode = ScoreMode::Directed);

double jaccard(const Adj& a, const Adj& b);

// scores(e, r): edge e in regime r
double stability_index(const Eigen::MatrixXd& scores, double eps = 1e-9);

// (X, j, Z) means X independent of j given Z; Z kept sorted
using CiStatement = std::tuple<int, int, std::vector<int>>;
CiStatement make_ci(int x, int j, std::vector<int> z);
std::set<CiStatement> local_markov(const Dag& g);

struct SoundComplete {
    double delta_sound = 0.0;
    double delta_complete = 0.0;
};

SoundComplete soundness_completeness(const Dag& g, const std::set<CiStatement>& ci_j);

}  // namespace jstable
