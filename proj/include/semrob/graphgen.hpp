#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "semrob/errors.hpp"
#include "semrob/graph.hpp"
#include "semrob/rng.hpp"

namespace semrob {

namespace detail {

inline void sample_node_attributes(Graph& g, const GenModel& m, int v, std::uint64_t seed) {
    RngStream label_rng(seed, Stream::NodeLabel, static_cast<std::uint64_t>(v));
    int y = label_rng.bernoulli(0.5) ? 1 : 0;
    g.labels[static_cast<std::size_t>(v)] = y;
    Matrix means = m.means();
    RngStream feat_rng(seed, Stream::NodeFeatures, static_cast<std::uint64_t>(v));
    for (int j = 0; j < m.d; ++j)
        g.features(static_cast<std::size_t>(v), static_cast<std::size_t>(j)) =
            means(static_cast<std::size_t>(y), static_cast<std::size_t>(j)) + m.sigma * feat_rng.normal();
}

inline void sample_csbm_edges(Graph& g, const GenModel& m, int v, std::uint64_t seed) {
    RngStream rng(seed, Stream::EdgeRow, static_cast<std::uint64_t>(v));
    int yv = g.labels[static_cast<std::size_t>(v)];
    for (int j = 0; j < v; ++j) {
        double pe = (g.labels[static_cast<std::size_t>(j)] == yv) ? m.p : m.q;
        if (rng.bernoulli(pe)) g.insert_edge(v, j);
    }
}

// Draw m neighbors from a multinomial over the predecessors, weighted by
// (1 + degree) times the class affinity. The implicit self-loop enters the
// weights only; it is never recorded as an edge. Duplicate draws collapse.
inline void sample_cba_edges(Graph& g, const GenModel& m, int v, std::uint64_t seed) {
    if (v == 0) return;
    RngStream rng(seed, Stream::EdgeRow, static_cast<std::uint64_t>(v));
    int yv = g.labels[static_cast<std::size_t>(v)];
    std::vector<double> cum(static_cast<std::size_t>(v));
    double total = 0.0;
    for (int j = 0; j < v; ++j) {
        double w = (1.0 + static_cast<double>(g.degree(j))) *
                   m.omega(static_cast<std::size_t>(yv), static_cast<std::size_t>(g.labels[static_cast<std::size_t>(j)]));
        total += w;
        cum[static_cast<std::size_t>(j)] = total;
    }
    if (!(total > 0.0)) throw param_error("cba: all attachment weights are zero");
    std::set<int> picked;
    for (int t = 0; t < m.m; ++t) {
        double u = rng.next_double() * total;
        auto it = std::upper_bound(cum.begin(), cum.end(), u);
        int j = static_cast<int>(it - cum.begin());
        if (j >= v) j = v - 1;
        picked.insert(j);
    }
    for (int j : picked) g.insert_edge(v, j);
}

}  // namespace detail

// Samples a full graph from the model. Deterministic for a fixed seed; every
// node's label, feature row and edge row use streams keyed by (seed, purpose,
// node index), so extension and parallel evaluation cannot perturb each other.
inline Graph sample_graph(const GenModel& model, std::uint64_t seed) {
    model.validate();
    if (model.num_classes != 2)
        throw param_error("sample_graph: synthetic generators are binary");
    Graph g = make_graph(model.n, model.d, model.num_classes);
    g.gen = model;
    for (int v = 0; v < model.n; ++v) {
        detail::sample_node_attributes(g, model, v, seed);
        if (model.variant == ModelVariant::Csbm)
            detail::sample_csbm_edges(g, model, v, seed);
        else
            detail::sample_cba_edges(g, model, v, seed);
    }
    return g;
}

// Appends `count` nodes, each sampled conditionally on the graph so far per
// the model's iterative rule. Existing features, labels and edges are left
// untouched; new nodes are marked unknown.
inline Graph extend_graph(const Graph& g, int count, std::uint64_t seed) {
    if (!g.gen) throw unsupported_error("extend_graph: graph has no generative model");
    if (count < 1) throw param_error("extend_graph: count must be positive");
    const GenModel& m = *g.gen;
    Graph out = g;
    int old_n = g.n;
    out.n = old_n + count;
    Matrix feats(static_cast<std::size_t>(out.n), static_cast<std::size_t>(g.d));
    feats.data().assign(g.features.data().begin(), g.features.data().end());
    feats.data().resize(static_cast<std::size_t>(out.n) * static_cast<std::size_t>(g.d), 0.0);
    out.features = std::move(feats);
    out.adj.resize(static_cast<std::size_t>(out.n));
    out.labels.resize(static_cast<std::size_t>(out.n), 0);
    out.known.resize(static_cast<std::size_t>(out.n), 0);
    for (int v = old_n; v < out.n; ++v) {
        detail::sample_node_attributes(out, m, v, seed);
        out.known[static_cast<std::size_t>(v)] = 0;
        if (m.variant == ModelVariant::Csbm)
            detail::sample_csbm_edges(out, m, v, seed);
        else
            detail::sample_cba_edges(out, m, v, seed);
    }
    return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

inline double parse_double_cell(const std::string& cell, const std::string& file, int line_no) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &pos);
    } catch (const std::exception&) {
        throw format_error(file + ":" + std::to_string(line_no) + ": non-numeric cell '" + cell + "'");
    }
    while (pos < cell.size() && (cell[pos] == ' ' || cell[pos] == '\t')) ++pos;
    if (pos != cell.size())
        throw format_error(file + ":" + std::to_string(line_no) + ": non-numeric cell '" + cell + "'");
    return v;
}

inline long parse_int_cell(const std::string& cell, const std::string& file, int line_no) {
    double v = parse_double_cell(cell, file, line_no);
    long iv = static_cast<long>(v);
    if (static_cast<double>(iv) != v)
        throw format_error(file + ":" + std::to_string(line_no) + ": expected integer, got '" + cell + "'");
    return iv;
}

inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line)) lines.push_back(line);
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

}  // namespace detail

// Loads a real graph from CSV files: edges as "src,dst" pairs of 0-based
// indices, one feature row per node, one integer label per node, optional
// 0/1 known mask. Duplicate and reversed edge lines collapse to one pair.
inline Graph ingest_real_graph(const std::string& edge_file, const std::string& feature_file,
                               const std::string& label_file,
                               const std::optional<std::string>& mask_file = std::nullopt) {
    auto feat_lines = detail::read_lines(feature_file);
    if (feat_lines.empty()) throw format_error(feature_file + ":1: no feature rows");
    int n = static_cast<int>(feat_lines.size());
    int d = static_cast<int>(detail::split_csv_line(feat_lines[0]).size());
    Matrix feats(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
    for (int i = 0; i < n; ++i) {
        auto cells = detail::split_csv_line(feat_lines[static_cast<std::size_t>(i)]);
        if (static_cast<int>(cells.size()) != d)
            throw format_error(feature_file + ":" + std::to_string(i + 1) + ": expected " +
                               std::to_string(d) + " columns, got " + std::to_string(cells.size()));
        for (int j = 0; j < d; ++j)
            feats(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                detail::parse_double_cell(cells[static_cast<std::size_t>(j)], feature_file, i + 1);
    }

    auto label_lines = detail::read_lines(label_file);
    if (static_cast<int>(label_lines.size()) != n)
        throw format_error(label_file + ":" + std::to_string(label_lines.size()) +
                           ": row count does not match feature rows (" + std::to_string(n) + ")");
    std::vector<int> labels(static_cast<std::size_t>(n));
    int max_label = 0;
    for (int i = 0; i < n; ++i) {
        long y = detail::parse_int_cell(label_lines[static_cast<std::size_t>(i)], label_file, i + 1);
        if (y < 0) throw format_error(label_file + ":" + std::to_string(i + 1) + ": negative label");
        labels[static_cast<std::size_t>(i)] = static_cast<int>(y);
        max_label = std::max(max_label, static_cast<int>(y));
    }

    Graph g = make_graph(n, d, std::max(2, max_label + 1));
    g.features = std::move(feats);
    g.labels = std::move(labels);

    if (mask_file) {
        auto mask_lines = detail::read_lines(*mask_file);
        if (static_cast<int>(mask_lines.size()) != n)
            throw format_error(*mask_file + ":" + std::to_string(mask_lines.size()) +
                               ": row count does not match feature rows (" + std::to_string(n) + ")");
        for (int i = 0; i < n; ++i) {
            long b = detail::parse_int_cell(mask_lines[static_cast<std::size_t>(i)], *mask_file, i + 1);
            if (b != 0 && b != 1)
                throw format_error(*mask_file + ":" + std::to_string(i + 1) + ": mask must be 0 or 1");
            g.known[static_cast<std::size_t>(i)] = static_cast<char>(b);
        }
    }

    auto edge_lines = detail::read_lines(edge_file);
    for (std::size_t li = 0; li < edge_lines.size(); ++li) {
        if (edge_lines[li].empty()) continue;
        auto cells = detail::split_csv_line(edge_lines[li]);
        if (cells.size() != 2)
            throw format_error(edge_file + ":" + std::to_string(li + 1) + ": expected 'src,dst'");
        long a = detail::parse_int_cell(cells[0], edge_file, static_cast<int>(li + 1));
        long b = detail::parse_int_cell(cells[1], edge_file, static_cast<int>(li + 1));
        if (a < 0 || a >= n || b < 0 || b >= n)
            throw format_error(edge_file + ":" + std::to_string(li + 1) + ": node index out of range");
        if (a == b)
            throw format_error(edge_file + ":" + std::to_string(li + 1) + ": self-loop");
        if (!g.has_edge(static_cast<int>(a), static_cast<int>(b)))
            g.insert_edge(static_cast<int>(a), static_cast<int>(b));
    }
    return g;
}

}  // namespace semrob
