#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "semrob/attacks.hpp"
#include "semrob/bayes.hpp"
#include "semrob/errors.hpp"
#include "semrob/graph.hpp"
#include "semrob/graphgen.hpp"

namespace semrob {

// Hard label prediction at a node of an arbitrary (possibly perturbed) graph.
using NodePredictor = std::function<int(const Graph&, int)>;

// Per-node robustness trace: the first plan step at which the classifier f
// and the reference flip away from their clean predictions.
struct RobustnessRecord {
    int node = 0;
    int degree = 0;
    std::optional<int> t_f;   // 1-based step of f's first flip, none if censored
    std::optional<int> t_g;   // same for the reference
    int budget_used = 0;
    bool clean_f_correct = false;  // f(clean) equals the true label
    bool clean_agree = false;      // f(clean) equals reference(clean)

    // Semantics-aware robustness: changes survived before either f flips or
    // the semantics (reference) change, censored at the budget.
    int semantics_aware_robustness() const {
        int t = budget_used + 1;
        if (t_f) t = std::min(t, *t_f);
        if (t_g) t = std::min(t, *t_g);
        return t - 1;
    }

    int conventional_robustness() const {
        return (t_f ? std::min(*t_f, budget_used + 1) : budget_used + 1) - 1;
    }

    int reference_robustness() const {
        return (t_g ? std::min(*t_g, budget_used + 1) : budget_used + 1) - 1;
    }
};

// Replays the plan step by step up to `budget` ops and records the first
// flip steps of f and of the reference.
inline RobustnessRecord robustness_trace(const Graph& g_clean, int v, const PerturbationPlan& plan,
                                         const NodePredictor& f_predict,
                                         const NodePredictor& g_reference_predict, int budget) {
    g_clean.check_node(v);
    if (plan.target != v) throw param_error("robustness_trace: plan targets a different node");
    if (budget < 0) throw param_error("robustness_trace: negative budget");

    RobustnessRecord rec;
    rec.node = v;
    rec.degree = g_clean.degree(v);

    int f_clean = f_predict(g_clean, v);
    int g_clean_label = g_reference_predict(g_clean, v);
    rec.clean_f_correct = f_clean == g_clean.labels[static_cast<std::size_t>(v)];
    rec.clean_agree = f_clean == g_clean_label;

    int steps = std::min<int>(budget, static_cast<int>(plan.ops.size()));
    rec.budget_used = steps;
    Graph work = g_clean;
    for (int t = 1; t <= steps; ++t) {
        apply_edge_op(work, v, plan.ops[static_cast<std::size_t>(t - 1)]);
        if (!rec.t_f && f_predict(work, v) != f_clean) rec.t_f = t;
        if (!rec.t_g && g_reference_predict(work, v) != g_clean_label) rec.t_g = t;
        if (rec.t_f && rec.t_g) break;
    }
    return rec;
}

// First 1-based plan step at which the predictor leaves its clean decision,
// replaying at most max_steps ops; nullopt when it never flips.
inline std::optional<int> first_flip_step(const Graph& g, int v, const PerturbationPlan& plan,
                                          const NodePredictor& pred, int max_steps) {
    int clean = pred(g, v);
    Graph work = g;
    int steps = std::min<int>(max_steps, static_cast<int>(plan.ops.size()));
    for (int t = 1; t <= steps; ++t) {
        apply_edge_op(work, v, plan.ops[static_cast<std::size_t>(t - 1)]);
        if (pred(work, v) != clean) return t;
    }
    return std::nullopt;
}

// Degree-normalized aggregates over a batch of traces.
struct MetricsSummary {
    double r_fg = 0.0;  // semantics-aware robustness, mean of Robustness/degree
    double r_f = 0.0;   // conventional robustness (reference = true labels)
    double r_g = 0.0;   // reference robustness (the semantic boundary)
    std::optional<double> r_over;  // 1 - r_fg / r_f, undefined when r_f == 0
    std::optional<double> r_adv;   // r_fg / r_g, undefined when r_g == 0
    std::optional<double> f_beta;
    int node_count = 0;
    double beta = 1.0;
    int excluded_degree0 = 0;
    int excluded_incorrect = 0;
    int excluded_disagree = 0;
    int censored_f = 0;  // filtered nodes where f never flipped within budget
    int censored_g = 0;
};

inline double f_beta_score(double one_minus_over, double adv, double beta) {
    double num = (1.0 + beta * beta) * one_minus_over * adv;
    double den = beta * beta * one_minus_over + adv;
    return den > 0.0 ? num / den : 0.0;
}

// Filters to nodes with degree >= 1, correct clean prediction and clean
// agreement with the reference, then averages the degree-normalized
// robustness variants.
inline MetricsSummary aggregate(const std::vector<RobustnessRecord>& records, double beta = 1.0) {
    if (!(beta > 0.0)) throw param_error("aggregate: beta must be positive");
    MetricsSummary s;
    s.beta = beta;
    double sum_fg = 0.0, sum_f = 0.0, sum_g = 0.0;
    for (const auto& rec : records) {
        if (rec.degree < 1) {
            ++s.excluded_degree0;
            continue;
        }
        if (!rec.clean_f_correct) {
            ++s.excluded_incorrect;
            continue;
        }
        if (!rec.clean_agree) {
            ++s.excluded_disagree;
            continue;
        }
        double deg = static_cast<double>(rec.degree);
        sum_fg += rec.semantics_aware_robustness() / deg;
        sum_f += rec.conventional_robustness() / deg;
        sum_g += rec.reference_robustness() / deg;
        if (!rec.t_f) ++s.censored_f;
        if (!rec.t_g) ++s.censored_g;
        ++s.node_count;
    }
    if (s.node_count == 0) throw empty_sample_error("aggregate: every record was filtered out");
    double cnt = static_cast<double>(s.node_count);
    s.r_fg = sum_fg / cnt;
    s.r_f = sum_f / cnt;
    s.r_g = sum_g / cnt;
    if (s.r_f > 0.0) s.r_over = 1.0 - s.r_fg / s.r_f;
    if (s.r_g > 0.0) s.r_adv = s.r_fg / s.r_g;
    if (s.r_over && s.r_adv) s.f_beta = f_beta_score(1.0 - *s.r_over, *s.r_adv, beta);
    return s;
}

// Monte-Carlo estimates of the expected 0/1 losses of f on inductively
// sampled nodes, with the inner maxima taken by exhaustive enumeration of
// all edge-toggle sets of size <= toggle_budget incident to the new node.
// The reference is the Bayes classifier of the generative model.
struct LossEstimates {
    double std_loss = 0.0;
    double adv_loss = 0.0;
    double over_loss = 0.0;
    double robust_loss = 0.0;
    int samples = 0;
    std::vector<char> per_sample_errors;  // f(G') != sampled label, per trial
};

inline LossEstimates expected_losses_bruteforce(const Graph& g_train, const NodePredictor& f_predict,
                                                int samples, int toggle_budget, double lambda1,
                                                double lambda2, std::uint64_t seed) {
    if (!g_train.gen) throw unsupported_error("expected_losses: graph has no generative model");
    if (samples < 1) throw param_error("expected_losses: samples must be positive");
    if (toggle_budget < 0) throw param_error("expected_losses: negative toggle budget");
    // Enumeration is all subsets of size <= budget of the n candidate
    // toggles; bail out when that count would explode.
    double subset_count = 1.0;
    double binom = 1.0;
    for (int k = 1; k <= toggle_budget; ++k) {
        binom *= static_cast<double>(g_train.n + 1 - k) / static_cast<double>(k);
        subset_count += binom;
    }
    if (subset_count > 250000.0) throw size_error("expected_losses: toggle budget too large to enumerate");

    LossEstimates est;
    est.samples = samples;
    est.per_sample_errors.resize(static_cast<std::size_t>(samples), 0);
    long std_sum = 0, adv_sum = 0, over_sum = 0;
    for (int trial = 0; trial < samples; ++trial) {
        Graph gp = extend_graph(g_train, 1, derive_seed(seed, Stream::TestNode, static_cast<std::uint64_t>(trial)));
        int v = gp.n - 1;
        int y_true = gp.labels[static_cast<std::size_t>(v)];
        int f0 = f_predict(gp, v);
        int g0 = classify_bayes(gp, v, BayesMode::Full);
        bool std_err = f0 != y_true;
        est.per_sample_errors[static_cast<std::size_t>(trial)] = std_err ? 1 : 0;
        std_sum += std_err ? 1 : 0;

        bool adv = false;   // exists semantics-preserving perturbation flipping f
        bool over = false;  // exists f-preserving perturbation flipping the reference
        if (f0 == g0 && toggle_budget > 0) {
            std::vector<int> others;
            for (int u = 0; u < gp.n; ++u)
                if (u != v) others.push_back(u);
            std::vector<int> pick;
            std::function<void(std::size_t)> recurse = [&](std::size_t start) {
                if (adv && over) return;
                if (!pick.empty()) {
                    Graph pert = gp;
                    for (int u : pick) {
                        if (pert.has_edge(v, u))
                            pert.erase_edge(v, u);
                        else
                            pert.insert_edge(v, u);
                    }
                    int gt = classify_bayes(pert, v, BayesMode::Full);
                    int ft = f_predict(pert, v);
                    if (gt == g0 && ft != g0) adv = true;
                    if (ft == f0 && gt != f0) over = true;
                }
                if (static_cast<int>(pick.size()) == toggle_budget) return;
                for (std::size_t i = start; i < others.size(); ++i) {
                    pick.push_back(others[i]);
                    recurse(i + 1);
                    pick.pop_back();
                }
            };
            recurse(0);
        }
        adv_sum += adv ? 1 : 0;
        over_sum += over ? 1 : 0;
    }
    double inv = 1.0 / static_cast<double>(samples);
    est.std_loss = static_cast<double>(std_sum) * inv;
    est.adv_loss = static_cast<double>(adv_sum) * inv;
    est.over_loss = static_cast<double>(over_sum) * inv;
    est.robust_loss = lambda1 * est.adv_loss + lambda2 * est.over_loss;
    return est;
}

// Pearson correlation of endpoint degrees over the (directed) edge list.
// Undefined for edgeless graphs and for regular graphs (zero variance).
inline std::optional<double> degree_assortativity(const Graph& g) {
    double sx = 0.0, sxx = 0.0, sxy = 0.0;
    long cnt = 0;
    for (int v = 0; v < g.n; ++v) {
        double dv = static_cast<double>(g.degree(v));
        for (int u : g.neighbors(v)) {
            double du = static_cast<double>(g.degree(u));
            sx += dv;
            sxx += dv * dv;
            sxy += dv * du;
            ++cnt;
        }
    }
    if (cnt == 0) return std::nullopt;
    double n = static_cast<double>(cnt);
    double mean = sx / n;
    double var = sxx / n - mean * mean;
    if (var <= 0.0) return std::nullopt;
    return (sxy / n - mean * mean) / var;
}

// Absolute change of the degree assortativity coefficient between a graph
// and its perturbed version.
inline std::optional<double> dac(const Graph& g, const Graph& g_perturbed) {
    auto r1 = degree_assortativity(g);
    auto r2 = degree_assortativity(g_perturbed);
    if (!r1 || !r2) return std::nullopt;
    return std::abs(*r2 - *r1);
}

// Cosine similarity between u's feature row and its degree-normalized
// neighbor aggregate sum_j X_j / sqrt(d_j d_u).
inline std::optional<double> node_centric_homophily(const Graph& g, int u) {
    g.check_node(u);
    double du = static_cast<double>(g.degree(u));
    if (du == 0.0) return std::nullopt;
    std::size_t dim = static_cast<std::size_t>(g.d);
    std::vector<double> agg(dim, 0.0);
    for (int j : g.neighbors(u)) {
        double w = 1.0 / std::sqrt(static_cast<double>(g.degree(j)) * du);
        const double* row = g.features.row(static_cast<std::size_t>(j));
        for (std::size_t k = 0; k < dim; ++k) agg[k] += w * row[k];
    }
    const double* xu = g.features.row(static_cast<std::size_t>(u));
    double dot = 0.0, na = 0.0, nx = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
        dot += agg[k] * xu[k];
        na += agg[k] * agg[k];
        nx += xu[k] * xu[k];
    }
    if (na <= 0.0 || nx <= 0.0) return std::nullopt;
    return dot / std::sqrt(na * nx);
}

}  // namespace semrob
