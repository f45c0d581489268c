#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "semrob/errors.hpp"
#include "semrob/genmodel.hpp"
#include "semrob/matrix.hpp"

namespace semrob {

// Undirected attributed graph. Edges are kept as sorted adjacency lists, so
// edge iteration and neighbor sums have a fixed deterministic order. Graphs
// are value types; attacks mutate their own copy.
struct Graph {
    int n = 0;
    int d = 0;
    int num_classes = 2;
    Matrix features;                      // n x d
    std::vector<std::vector<int>> adj;    // sorted neighbor lists, no self-loops
    std::vector<int> labels;              // values in {0, ..., C-1}
    std::vector<char> known;              // label visible to classifiers
    std::optional<GenModel> gen;          // present iff synthetic

    bool has_edge(int i, int j) const {
        if (i == j) return false;
        const auto& a = adj[static_cast<std::size_t>(i)];
        return std::binary_search(a.begin(), a.end(), j);
    }

    void insert_edge(int i, int j) {
        check_pair(i, j);
        auto& ai = adj[static_cast<std::size_t>(i)];
        auto it = std::lower_bound(ai.begin(), ai.end(), j);
        if (it != ai.end() && *it == j) throw param_error("insert_edge: edge already present");
        ai.insert(it, j);
        auto& aj = adj[static_cast<std::size_t>(j)];
        aj.insert(std::lower_bound(aj.begin(), aj.end(), i), i);
    }

    void erase_edge(int i, int j) {
        check_pair(i, j);
        auto& ai = adj[static_cast<std::size_t>(i)];
        auto it = std::lower_bound(ai.begin(), ai.end(), j);
        if (it == ai.end() || *it != j) throw param_error("erase_edge: edge not present");
        ai.erase(it);
        auto& aj = adj[static_cast<std::size_t>(j)];
        aj.erase(std::lower_bound(aj.begin(), aj.end(), i));
    }

    int degree(int v) const { return static_cast<int>(adj[static_cast<std::size_t>(v)].size()); }

    const std::vector<int>& neighbors(int v) const { return adj[static_cast<std::size_t>(v)]; }

    std::size_t edge_count() const {
        std::size_t s = 0;
        for (const auto& a : adj) s += a.size();
        return s / 2;
    }

    // Unordered pairs (i, j) with i < j, lexicographically sorted.
    std::vector<std::pair<int, int>> edge_list() const {
        std::vector<std::pair<int, int>> out;
        out.reserve(edge_count());
        for (int i = 0; i < n; ++i)
            for (int j : adj[static_cast<std::size_t>(i)])
                if (j > i) out.emplace_back(i, j);
        return out;
    }

    void check_node(int v) const {
        if (v < 0 || v >= n) throw param_error("node index out of range");
    }

private:
    void check_pair(int i, int j) const {
        check_node(i);
        check_node(j);
        if (i == j) throw param_error("self-loops are not allowed");
    }
};

inline Graph make_graph(int n, int d, int num_classes) {
    Graph g;
    g.n = n;
    g.d = d;
    g.num_classes = num_classes;
    g.features = Matrix(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
    g.adj.assign(static_cast<std::size_t>(n), {});
    g.labels.assign(static_cast<std::size_t>(n), 0);
    g.known.assign(static_cast<std::size_t>(n), 1);
    return g;
}

// Subgraph induced on `nodes` (must be sorted, unique, in range). Edges with
// an endpoint outside the set are dropped; the generative model does not
// carry over.
inline Graph induced_subgraph(const Graph& g, const std::vector<int>& nodes) {
    std::vector<int> remap(static_cast<std::size_t>(g.n), -1);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        g.check_node(nodes[i]);
        if (i > 0 && nodes[i] <= nodes[i - 1]) throw param_error("induced_subgraph: nodes must be sorted unique");
        remap[static_cast<std::size_t>(nodes[i])] = static_cast<int>(i);
    }
    Graph s = make_graph(static_cast<int>(nodes.size()), g.d, g.num_classes);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        int v = nodes[i];
        for (int j = 0; j < g.d; ++j)
            s.features(i, static_cast<std::size_t>(j)) = g.features(static_cast<std::size_t>(v), static_cast<std::size_t>(j));
        s.labels[i] = g.labels[static_cast<std::size_t>(v)];
        s.known[i] = g.known[static_cast<std::size_t>(v)];
        for (int u : g.neighbors(v)) {
            int ru = remap[static_cast<std::size_t>(u)];
            if (ru > static_cast<int>(i)) s.insert_edge(static_cast<int>(i), ru);
        }
    }
    return s;
}

}  // namespace semrob
