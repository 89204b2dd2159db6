#pragma once

#include "jstable/graph.hpp"
#include "jstable/synth.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace jstable {

// numeric-aware ordering so e2 sorts before e10
bool natural_less(const std::string& a, const std::string& b);

std::string format_real(double x);

void write_adjacency_csv(const std::string& path, const Adj& adj, const std::vector<std::string>& labels);
DirectedGraph read_adjacency_csv(const std::string& path);
void write_real_matrix_csv(const std::string& path, const Eigen::MatrixXd& m, const std::vector<std::string>& labels);

void write_dataset_csv(const std::string& path, const MultiRegimeData& data, const std::string& env_col = "env");

struct LoadResult {
    MultiRegimeData data;
    std::vector<std::string> warnings;
};

LoadResult load_csv(const std::string& path, const std::string& env_col = "env", int min_rows = 25);

void write_sepsets_json(const std::string& path, const SepSets& sepsets);

// guards file: one "from,to" label pair per line; '#' starts a comment
std::vector<std::pair<int, int>> read_guards(const std::string& path, const std::vector<std::string>& labels);

}  // namespace jstable
