#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "semrob/errors.hpp"
#include "semrob/graph.hpp"

namespace semrob {

enum class BayesMode { Full, FeaturesOnly, StructureOnly };

// Per-class log-likelihoods of node v's observed row (features and/or
// incident edges) under the generative model, up to the shared evidence
// constant. Class priors are uniform and omitted.
struct ClassScore {
    std::vector<double> total;
    std::vector<double> feature_term;
    std::vector<double> structure_term;
};

namespace detail {

inline void check_bayes_preconditions(const Graph& g, int v) {
    if (!g.gen) throw unsupported_error("bayes: graph has no generative model");
    g.check_node(v);
    for (int u = 0; u < g.n; ++u)
        if (u != v && !g.known[static_cast<std::size_t>(u)])
            throw param_error("bayes: labels of all nodes other than v must be known");
    if (g.gen->variant == ModelVariant::Cba && v != g.n - 1)
        throw unsupported_error("bayes: CBA evaluation is defined for the last (inductive) node only");
}

inline std::vector<double> feature_log_likelihoods(const Graph& g, int v) {
    const GenModel& m = *g.gen;
    Matrix means = m.means();
    int c_count = m.num_classes;
    double var = m.sigma * m.sigma;
    double log_norm = -0.5 * static_cast<double>(g.d) * std::log(2.0 * M_PI * var);
    std::vector<double> ll(static_cast<std::size_t>(c_count), 0.0);
    for (int c = 0; c < c_count; ++c) {
        double sq = 0.0;
        for (int j = 0; j < g.d; ++j) {
            double diff = g.features(static_cast<std::size_t>(v), static_cast<std::size_t>(j)) -
                          means(static_cast<std::size_t>(c), static_cast<std::size_t>(j));
            sq += diff * diff;
        }
        ll[static_cast<std::size_t>(c)] = log_norm - sq / (2.0 * var);
    }
    return ll;
}

inline std::vector<double> csbm_structure_log_likelihoods(const Graph& g, int v) {
    const GenModel& m = *g.gen;
    int c_count = m.num_classes;
    // Count nodes and neighbors per class; the pairwise Bernoulli likelihood
    // only depends on these tallies.
    std::vector<long> class_count(static_cast<std::size_t>(c_count), 0);
    std::vector<long> nbr_count(static_cast<std::size_t>(c_count), 0);
    for (int u = 0; u < g.n; ++u)
        if (u != v) ++class_count[static_cast<std::size_t>(g.labels[static_cast<std::size_t>(u)])];
    for (int u : g.neighbors(v)) ++nbr_count[static_cast<std::size_t>(g.labels[static_cast<std::size_t>(u)])];
    double log_p = std::log(m.p);
    double log_q = std::log(m.q);
    double log_1p = std::log1p(-m.p);
    double log_1q = std::log1p(-m.q);
    std::vector<double> ll(static_cast<std::size_t>(c_count), 0.0);
    for (int c = 0; c < c_count; ++c) {
        double s = 0.0;
        for (int yu = 0; yu < c_count; ++yu) {
            long nb = nbr_count[static_cast<std::size_t>(yu)];
            long non = class_count[static_cast<std::size_t>(yu)] - nb;
            if (c == yu)
                s += static_cast<double>(nb) * log_p + static_cast<double>(non) * log_1p;
            else
                s += static_cast<double>(nb) * log_q + static_cast<double>(non) * log_1q;
        }
        ll[static_cast<std::size_t>(c)] = s;
    }
    return ll;
}

// CBA edge likelihood of the last node v: per predecessor u, an edge is
// present with probability 1 - Bin(0 | m, p_u(c)). The attachment
// probability p_u(c) uses the predecessors' degrees excluding edges to v
// (their degrees at v's sampling time) and affinities under hypothesis c.
inline std::vector<double> cba_structure_log_likelihoods(const Graph& g, int v) {
    const GenModel& m = *g.gen;
    int c_count = m.num_classes;
    std::vector<double> ll(static_cast<std::size_t>(c_count), 0.0);
    std::vector<double> weight(static_cast<std::size_t>(g.n), 0.0);
    for (int c = 0; c < c_count; ++c) {
        double denom = 0.0;
        for (int u = 0; u < g.n; ++u) {
            if (u == v) continue;
            int k = g.degree(u) - (g.has_edge(v, u) ? 1 : 0);
            double w = (1.0 + static_cast<double>(k)) *
                       m.omega(static_cast<std::size_t>(c), static_cast<std::size_t>(g.labels[static_cast<std::size_t>(u)]));
            weight[static_cast<std::size_t>(u)] = w;
            denom += w;
        }
        double s = 0.0;
        for (int u = 0; u < g.n; ++u) {
            if (u == v) continue;
            double pu = denom > 0.0 ? weight[static_cast<std::size_t>(u)] / denom : 0.0;
            double log_miss = static_cast<double>(m.m) * std::log1p(-pu);  // log Bin(0 | m, pu)
            if (g.has_edge(v, u))
                s += pu > 0.0 ? std::log(-std::expm1(log_miss)) : -std::numeric_limits<double>::infinity();
            else
                s += log_miss;
        }
        ll[static_cast<std::size_t>(c)] = s;
    }
    return ll;
}

// Change in the binary log-ratio (score of y_star minus score of the other
// class) caused by toggling edge (v, u), given the clean decision y_star.
inline double change_potential_given(const Graph& g, int v, int u, int y_star) {
    const GenModel& m = *g.gen;
    int yu = g.labels[static_cast<std::size_t>(u)];
    int other = 1 - y_star;
    double insert_pot;
    if (m.variant == ModelVariant::Csbm) {
        double p_star = (yu == y_star) ? m.p : m.q;
        double p_other = (yu == other) ? m.p : m.q;
        insert_pot = std::log(p_star) - std::log1p(-p_star) - std::log(p_other) + std::log1p(-p_other);
    } else {
        insert_pot = std::log(m.omega(static_cast<std::size_t>(y_star), static_cast<std::size_t>(yu))) -
                     std::log(m.omega(static_cast<std::size_t>(other), static_cast<std::size_t>(yu)));
    }
    return g.has_edge(v, u) ? -insert_pot : insert_pot;
}

}  // namespace detail

inline ClassScore class_scores(const Graph& g, int v, BayesMode mode) {
    detail::check_bayes_preconditions(g, v);
    int c_count = g.gen->num_classes;
    ClassScore s;
    s.feature_term.assign(static_cast<std::size_t>(c_count), 0.0);
    s.structure_term.assign(static_cast<std::size_t>(c_count), 0.0);
    if (mode != BayesMode::StructureOnly) s.feature_term = detail::feature_log_likelihoods(g, v);
    if (mode != BayesMode::FeaturesOnly) {
        s.structure_term = g.gen->variant == ModelVariant::Csbm
                               ? detail::csbm_structure_log_likelihoods(g, v)
                               : detail::cba_structure_log_likelihoods(g, v);
    }
    s.total.resize(static_cast<std::size_t>(c_count));
    for (int c = 0; c < c_count; ++c)
        s.total[static_cast<std::size_t>(c)] =
            s.feature_term[static_cast<std::size_t>(c)] + s.structure_term[static_cast<std::size_t>(c)];
    return s;
}

// Most likely class for node v under the generative model; ties break toward
// the smallest class index.
inline int classify_bayes(const Graph& g, int v, BayesMode mode = BayesMode::Full) {
    ClassScore s = class_scores(g, v, mode);
    int best = 0;
    for (int c = 1; c < static_cast<int>(s.total.size()); ++c)
        if (s.total[static_cast<std::size_t>(c)] > s.total[static_cast<std::size_t>(best)]) best = c;
    return best;
}

// Signed log-margin of the clean decision: score of the predicted class
// minus score of the runner-up (binary: the other class). Nonnegative.
inline double bayes_log_margin(const Graph& g, int v, BayesMode mode = BayesMode::Full) {
    ClassScore s = class_scores(g, v, mode);
    int pred = 0;
    for (int c = 1; c < static_cast<int>(s.total.size()); ++c)
        if (s.total[static_cast<std::size_t>(c)] > s.total[static_cast<std::size_t>(pred)]) pred = c;
    double runner_up = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < static_cast<int>(s.total.size()); ++c)
        if (c != pred) runner_up = std::max(runner_up, s.total[static_cast<std::size_t>(c)]);
    return s.total[static_cast<std::size_t>(pred)] - runner_up;
}

// Exact change in the binary log-ratio caused by toggling edge (v, u).
// Toggles toward heterophily (insert different-class, delete same-class,
// relative to v's clean decision) are negative.
inline double change_potential(const Graph& g, int v, int u) {
    detail::check_bayes_preconditions(g, v);
    g.check_node(u);
    if (u == v) throw param_error("change_potential: u must differ from v");
    if (g.gen->num_classes != 2)
        throw unsupported_error("change_potential: defined for binary models");
    int y_star = classify_bayes(g, v, BayesMode::Full);
    return detail::change_potential_given(g, v, u, y_star);
}

// One optimal toggle: negative-potential edge flips, strongest first; equal
// potentials order inserts before deletes, then by node index.
struct OptimalToggle {
    bool insert;
    int u;
    double potential;
};

inline std::vector<OptimalToggle> optimal_toggles(const Graph& g, int v, int y_star) {
    std::vector<OptimalToggle> toggles;
    for (int u = 0; u < g.n; ++u) {
        if (u == v) continue;
        double pot = detail::change_potential_given(g, v, u, y_star);
        if (pot < 0.0) toggles.push_back({!g.has_edge(v, u), u, pot});
    }
    std::stable_sort(toggles.begin(), toggles.end(), [](const OptimalToggle& a, const OptimalToggle& b) {
        double ma = -a.potential, mb = -b.potential;
        if (ma != mb) return ma > mb;
        if (a.insert != b.insert) return a.insert;
        return a.u < b.u;
    });
    return toggles;
}

// Minimal number of optimal toggles until the full Bayes decision at v
// changes, applying them greedily in decreasing magnitude. Returns nullopt
// when no flip happens within the budget (or the toggle pool runs out).
inline std::optional<int> semantic_flip_count(const Graph& g, int v,
                                              std::optional<int> budget = std::nullopt) {
    detail::check_bayes_preconditions(g, v);
    if (g.gen->num_classes != 2)
        throw unsupported_error("semantic_flip_count: defined for binary models");
    if (budget && *budget < 1) throw param_error("semantic_flip_count: budget must be positive");
    int y0 = classify_bayes(g, v, BayesMode::Full);
    if (bayes_log_margin(g, v) <= 0.0) return 0;
    auto toggles = optimal_toggles(g, v, y0);
    Graph work = g;
    int steps = 0;
    for (const auto& t : toggles) {
        if (budget && steps >= *budget) break;
        if (t.insert)
            work.insert_edge(v, t.u);
        else
            work.erase_edge(v, t.u);
        ++steps;
        if (classify_bayes(work, v, BayesMode::Full) != y0) return steps;
    }
    return std::nullopt;
}

}  // namespace semrob
