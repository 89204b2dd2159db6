#include "jstable/graph.hpp"
#include "jstable/error.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

namespace jstable {

std::vector<std::string> default_labels(int d) {
    std::vector<std::string> out;
    out.reserve(d);
    for (int i = 0; i < d; ++i) out.push_back("X" + std::to_string(i));
    return out;
}

DirectedGraph::DirectedGraph(int d) : adj(Adj::Zero(d, d)), labels(default_labels(d)) {}

DirectedGraph::DirectedGraph(Adj a, std::vector<std::string> names)
    : adj(std::move(a)), labels(std::move(names)) {
    if (adj.rows() != adj.cols())
        throw Error(ErrorKind::dimension_mismatch, "adjacency must be square");
    if (labels.empty()) labels = default_labels(d());
    if (static_cast<int>(labels.size()) != d())
        throw Error(ErrorKind::dimension_mismatch, "label count differs from d");
    for (int i = 0; i < d(); ++i) {
        if (adj(i, i) != 0) throw Error(ErrorKind::invalid_argument, "self-loop at " + labels[i]);
        for (int j = 0; j < d(); ++j) adj(i, j) = adj(i, j) ? 1 : 0;
    }
}

std::vector<int> DirectedGraph::parents(int v) const {
    std::vector<int> out;
    for (int u = 0; u < d(); ++u)
        if (adj(u, v)) out.push_back(u);
    return out;
}

std::vector<int> DirectedGraph::children(int v) const {
    std::vector<int> out;
    for (int w = 0; w < d(); ++w)
        if (adj(v, w)) out.push_back(w);
    return out;
}

Dag::Dag(DirectedGraph g) : DirectedGraph(std::move(g)) {
    auto ord = topological_order(adj);
    if (!ord) throw Error(ErrorKind::invalid_argument, "graph has a directed cycle");
    order_ = std::move(*ord);
}

Pdag::Pdag(int d) : directed(Adj::Zero(d, d)), undirected(Adj::Zero(d, d)) {}

Pdag::Pdag(Adj dir, Adj und) : directed(std::move(dir)), undirected(std::move(und)) {
    const int n = d();
    if (directed.cols() != n || undirected.rows() != n || undirected.cols() != n)
        throw Error(ErrorKind::dimension_mismatch, "pdag parts differ in size");
    for (int i = 0; i < n; ++i) {
        if (directed(i, i) || undirected(i, i))
            throw Error(ErrorKind::invalid_argument, "self-loop in pdag");
        for (int j = 0; j < n; ++j) {
            if (undirected(i, j) != undirected(j, i))
                throw Error(ErrorKind::invalid_argument, "undirected part not symmetric");
            if (undirected(i, j) && (directed(i, j) || directed(j, i)))
                throw Error(ErrorKind::invalid_argument, "pair both directed and undirected");
        }
    }
}

void Pdag::orient(int i, int j) {
    undirected(i, j) = 0;
    undirected(j, i) = 0;
    directed(j, i) = 0;
    directed(i, j) = 1;
}

Adj Pdag::as_adjacency() const { return ((directed + undirected).array() > 0).cast<int>(); }

std::pair<int, int> pair_key(int i, int j) { return i < j ? std::make_pair(i, j) : std::make_pair(j, i); }

std::optional<std::vector<int>> topological_order(const Adj& adj) {
    const int d = static_cast<int>(adj.rows());
    std::vector<int> indeg(d, 0);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) indeg[j] += adj(i, j) ? 1 : 0;
    // lowest index first among ready nodes keeps the order deterministic
    std::vector<int> ready;
    for (int v = d - 1; v >= 0; --v)
        if (indeg[v] == 0) ready.push_back(v);
    std::vector<int> order;
    order.reserve(d);
    while (!ready.empty()) {
        std::sort(ready.begin(), ready.end(), std::greater<int>());
        int v = ready.back();
        ready.pop_back();
        order.push_back(v);
        for (int w = 0; w < d; ++w)
            if (adj(v, w) && --indeg[w] == 0) ready.push_back(w);
    }
    if (static_cast<int>(order.size()) != d) return std::nullopt;
    return order;
}

bool is_acyclic(const Adj& adj) { return topological_order(adj).has_value(); }

bool has_directed_path(const Adj& adj, int from, int to) {
    const int d = static_cast<int>(adj.rows());
    std::vector<char> seen(d, 0);
    std::vector<int> stack{from};
    seen[from] = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        if (v == to) return true;
        for (int w = 0; w < d; ++w)
            if (adj(v, w) && !seen[w]) {
                seen[w] = 1;
                stack.push_back(w);
            }
    }
    return false;
}

Adj skeleton(const Adj& adj) {
    Adj s = ((adj + adj.transpose()).array() > 0).cast<int>();
    s.diagonal().setZero();
    return s;
}

Adj skeleton(const Pdag& g) { return skeleton(g.as_adjacency()); }

int common_neighbors(const Adj& skel, int u, int v) {
    if (u == v) throw Error(ErrorKind::invalid_move, "common_neighbors needs u != v");
    const int d = static_cast<int>(skel.rows());
    std::vector<int> nu, nv;
    for (int w = 0; w < d; ++w) {
        if (skel(u, w)) nu.push_back(w);
        if (skel(v, w)) nv.push_back(w);
    }
    const auto& small = nu.size() <= nv.size() ? nu : nv;
    int other = nu.size() <= nv.size() ? v : u;
    int count = 0;
    for (int w : small)
        if (w != other && skel(other, w)) ++count;
    return count;
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

int connected_components(const Adj& skel) {
    const int d = static_cast<int>(skel.rows());
    UnionFind uf(d);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (skel(i, j)) uf.unite(i, j);
    int c = 0;
    for (int i = 0; i < d; ++i)
        if (uf.find(i) == i) ++c;
    return c;
}

FVector f_vector(const Adj& skel) {
    const int d = static_cast<int>(skel.rows());
    FVector f;
    f.f0 = d;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            if (!skel(i, j)) continue;
            ++f.f1;
            for (int k = j + 1; k < d; ++k)
                if (skel(i, k) && skel(j, k)) ++f.f2;
        }
    f.c = connected_components(skel);
    f.chi = f.f0 - f.f1 + f.f2;
    f.b1 = f.f1 - f.f0 + f.c;
    return f;
}

bool d_separated(const Dag& dag, int i, int j, const std::vector<int>& S) {
    const int d = dag.d();
    auto check = [d](int v) {
        if (v < 0 || v >= d) throw Error(ErrorKind::invalid_argument, "node index out of range");
    };
    check(i);
    check(j);
    std::vector<char> in_s(d, 0);
    for (int s : S) {
        check(s);
        in_s[s] = 1;
    }
    if (i == j || in_s[i] || in_s[j])
        throw Error(ErrorKind::invalid_argument, "d_separated needs distinct i, j outside S");

    // ancestors of S, S included
    std::vector<char> anc(d, 0);
    std::vector<int> stack(S.begin(), S.end());
    for (int s : S) anc[s] = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int u = 0; u < d; ++u)
            if (dag.adj(u, v) && !anc[u]) {
                anc[u] = 1;
                stack.push_back(u);
            }
    }

    // states: (node, arrived from a child = up / from a parent = down)
    std::vector<char> seen_up(d, 0), seen_down(d, 0);
    std::deque<std::pair<int, bool>> queue{{i, true}};
    while (!queue.empty()) {
        auto [v, up] = queue.front();
        queue.pop_front();
        if (up ? seen_up[v] : seen_down[v]) continue;
        (up ? seen_up[v] : seen_down[v]) = 1;
        if (v == j) return false;
        if (up) {
            if (in_s[v]) continue;
            for (int u = 0; u < d; ++u) {
                if (dag.adj(u, v)) queue.emplace_back(u, true);
                if (dag.adj(v, u)) queue.emplace_back(u, false);
            }
        } else {
            if (!in_s[v])
                for (int w = 0; w < d; ++w)
                    if (dag.adj(v, w)) queue.emplace_back(w, false);
            if (anc[v])
                for (int u = 0; u < d; ++u)
                    if (dag.adj(u, v)) queue.emplace_back(u, true);
        }
    }
    return true;
}

Pdag orient_v_structures(const Adj& skel, const SepSets& sepsets) {
    const int d = static_cast<int>(skel.rows());
    Adj mark = Adj::Zero(d, d);  // mark(a,b): arrowhead at b
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            if (skel(i, j)) continue;
            auto it = sepsets.find({i, j});
            if (it == sepsets.end()) continue;
            const auto& sep = it->second;
            for (int k = 0; k < d; ++k) {
                if (k == i || k == j || !skel(i, k) || !skel(j, k)) continue;
                if (std::find(sep.begin(), sep.end(), k) != sep.end()) continue;
                mark(i, k) = 1;
                mark(j, k) = 1;
            }
        }
    Pdag g(d);
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b) {
            if (!skel(a, b)) continue;
            // conflicting colliders leave the edge undirected
            if (mark(a, b) && !mark(b, a))
                g.directed(a, b) = 1;
            else if (mark(b, a) && !mark(a, b))
                g.directed(b, a) = 1;
            else
                g.undirected(a, b) = g.undirected(b, a) = 1;
        }
    return g;
}

namespace {

// Orienting a->b must not add a directed cycle or a collider at b with a
// parent nonadjacent to a.
bool safe_orientation(const Pdag& g, int a, int b) {
    if (has_directed_path(g.directed, b, a)) return false;
    for (int x = 0; x < g.d(); ++x)
        if (x != a && g.directed(x, b) && !g.adjacent(x, a)) return false;
    return true;
}

bool apply_meek_once(Pdag& g) {
    const int d = g.d();
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
            if (!g.is_undirected(a, b)) continue;
            bool fire = false;
            // R1: c->a, a-b, c,b nonadjacent
            for (int c = 0; c < d && !fire; ++c)
                if (g.is_directed(c, a) && c != b && !g.adjacent(c, b)) fire = true;
            // R2: a->c->b
            for (int c = 0; c < d && !fire; ++c)
                if (g.is_directed(a, c) && g.is_directed(c, b)) fire = true;
            // R3: a-c->b, a-e->b, c,e nonadjacent
            for (int c = 0; c < d && !fire; ++c) {
                if (!g.is_undirected(a, c) || !g.is_directed(c, b)) continue;
                for (int e = c + 1; e < d && !fire; ++e)
                    if (g.is_undirected(a, e) && g.is_directed(e, b) && !g.adjacent(c, e)) fire = true;
            }
            // R4: a-e, e->c->b, a adjacent c, e,b nonadjacent
            for (int c = 0; c < d && !fire; ++c) {
                if (!g.is_directed(c, b) || !g.adjacent(a, c)) continue;
                for (int e = 0; e < d && !fire; ++e)
                    if (e != b && g.is_undirected(a, e) && g.is_directed(e, c) && !g.adjacent(e, b))
                        fire = true;
            }
            if (fire && safe_orientation(g, a, b)) {
                g.orient(a, b);
                return true;
            }
        }
    return false;
}

}  // namespace

Pdag meek_closure(Pdag g) {
    while (apply_meek_once(g)) {
    }
    return g;
}

Pdag cpdag(const Dag& dag) {
    const int d = dag.d();
    Pdag g(d);
    Adj skel = skeleton(dag.adj);
    for (int a = 0; a < d; ++a)
        for (int b = a + 1; b < d; ++b)
            if (skel(a, b)) g.undirected(a, b) = g.undirected(b, a) = 1;
    for (int k = 0; k < d; ++k)
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                if (dag.adj(i, k) && dag.adj(j, k) && !skel(i, j)) {
                    g.orient(i, k);
                    g.orient(j, k);
                }
    return meek_closure(std::move(g));
}

}  // namespace jstable
