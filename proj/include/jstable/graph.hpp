#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace jstable {

// 0/1 integer matrices; adj(i,j)=1 is i->j
using Adj = Eigen::MatrixXi;

std::vector<std::string> default_labels(int d);

struct DirectedGraph {
    Adj adj;
    std::vector<std::string> labels;

    DirectedGraph() = default;
    explicit DirectedGraph(int d);
    DirectedGraph(Adj a, std::vector<std::string> names = {});

    int d() const { return static_cast<int>(adj.rows()); }
    bool has_edge(int i, int j) const { return adj(i, j) != 0; }
    std::vector<int> parents(int v) const;
    std::vector<int> children(int v) const;
    int edge_count() const { return adj.sum(); }
};

// acyclicity is checked on construction
class Dag : public DirectedGraph {
public:
    Dag() = default;
    explicit Dag(int d) : Dag(DirectedGraph(d)) {}
    explicit Dag(DirectedGraph g);
    Dag(Adj a, std::vector<std::string> names = {}) : Dag(DirectedGraph(std::move(a), std::move(names))) {}

    const std::vector<int>& order() const { return order_; }

private:
    std::vector<int> order_;
};

struct Pdag {
    Adj directed;    // directed(i,j)=1 is i->j
    Adj undirected;  // symmetric

    Pdag() = default;
    explicit Pdag(int d);
    Pdag(Adj dir, Adj und);

    int d() const { return static_cast<int>(directed.rows()); }
    bool adjacent(int i, int j) const {
        return directed(i, j) || directed(j, i) || undirected(i, j);
    }
    bool is_directed(int i, int j) const { return directed(i, j) != 0; }
    bool is_undirected(int i, int j) const { return undirected(i, j) != 0; }
    void orient(int i, int j);  // turn i-j into i->j
    // each undirected edge becomes a 1 in both directions
    Adj as_adjacency() const;
    bool operator==(const Pdag& o) const {
        return directed == o.directed && undirected == o.undirected;
    }
};

struct FVector {
    long f0 = 0;
    long f1 = 0;
    long f2 = 0;
    long chi = 0;
    long b1 = 0;
    long c = 0;
};

// key is (min,max)
using SepSets = std::map<std::pair<int, int>, std::vector<int>>;
std::pair<int, int> pair_key(int i, int j);

std::optional<std::vector<int>> topological_order(const Adj& adj);
bool is_acyclic(const Adj& adj);
inline bool is_acyclic(const DirectedGraph& g) { return is_acyclic(g.adj); }
bool has_directed_path(const Adj& adj, int from, int to);

Adj skeleton(const Adj& adj);
Adj skeleton(const Pdag& g);
inline Adj skeleton(const DirectedGraph& g) { return skeleton(g.adj); }

int common_neighbors(const Adj& skel, int u, int v);
FVector f_vector(const Adj& skel);
int connected_components(const Adj& skel);

bool d_separated(const Dag& dag, int i, int j, const std::vector<int>& S);

Pdag orient_v_structures(const Adj& skel, const SepSets& sepsets);
Pdag meek_closure(Pdag g);
// v-structures of the DAG plus Meek closure
Pdag cpdag(const Dag& dag);

}  // namespace jstable
