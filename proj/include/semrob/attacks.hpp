#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "semrob/bayes.hpp"
#include "semrob/errors.hpp"
#include "semrob/graph.hpp"
#include "semrob/matrix.hpp"
#include "semrob/rng.hpp"

namespace semrob {

enum class OpKind { Insert, Delete };

// One single-edge change incident to the plan's target; u is the other
// endpoint. Insert requires the edge absent at application time, Delete
// present.
struct EdgeOp {
    OpKind kind;
    int u;
};

struct PerturbationPlan {
    int target = 0;
    std::string attack_tag;
    std::vector<EdgeOp> ops;
};

// Local budget: a fixed count, the target's degree (optionally plus k), or
// unbounded up to a hard cap.
struct BudgetSpec {
    enum class Kind { Fixed, Degree, DegreePlus, Unbounded };
    Kind kind = Kind::Fixed;
    int value = 1;    // Fixed delta or DegreePlus increment
    int cap = 128;    // Unbounded safety cap

    void validate() const {
        if ((kind == Kind::Fixed || kind == Kind::DegreePlus) && value < 1)
            throw param_error("budget: delta/increment must be positive");
        if (cap < 1) throw param_error("budget: cap must be positive");
    }

    int resolve(const Graph& g, int v) const {
        validate();
        switch (kind) {
            case Kind::Fixed: return value;
            case Kind::Degree: return g.degree(v);
            case Kind::DegreePlus: return g.degree(v) + value;
            case Kind::Unbounded: return cap;
        }
        return 0;
    }

    static BudgetSpec fixed(int delta) { return {Kind::Fixed, delta, 128}; }
    static BudgetSpec degree() { return {Kind::Degree, 1, 128}; }
    static BudgetSpec degree_plus(int k) { return {Kind::DegreePlus, k, 128}; }
    static BudgetSpec unbounded(int cap = 128) { return {Kind::Unbounded, 1, cap}; }
};

inline void apply_edge_op(Graph& g, int target, const EdgeOp& op) {
    if (op.u == target) throw replay_error("edge op endpoint equals target");
    if (op.kind == OpKind::Insert) {
        if (g.has_edge(target, op.u)) throw replay_error("insert of an existing edge");
        g.insert_edge(target, op.u);
    } else {
        if (!g.has_edge(target, op.u)) throw replay_error("delete of a missing edge");
        g.erase_edge(target, op.u);
    }
}

// Replays the first `steps` ops (all when steps < 0) onto a copy.
inline Graph apply_plan(const Graph& g, const PerturbationPlan& plan, int steps = -1) {
    Graph out = g;
    std::size_t limit = steps < 0 ? plan.ops.size()
                                  : std::min<std::size_t>(plan.ops.size(), static_cast<std::size_t>(steps));
    for (std::size_t i = 0; i < limit; ++i) apply_edge_op(out, plan.target, plan.ops[i]);
    return out;
}

namespace detail {

// Non-adjacent nodes of a class different from (or equal to) the target's.
inline std::vector<int> insertion_candidates(const Graph& g, int v,
                                             const std::function<bool(int)>& class_ok) {
    std::vector<int> out;
    for (int u = 0; u < g.n; ++u) {
        if (u == v || g.has_edge(v, u)) continue;
        if (class_ok(g.labels[static_cast<std::size_t>(u)])) out.push_back(u);
    }
    return out;
}

inline double l2_distance(const Matrix& feats, int a, int b, const Matrix* projection) {
    std::size_t d = feats.cols();
    const double* ra = feats.row(static_cast<std::size_t>(a));
    const double* rb = feats.row(static_cast<std::size_t>(b));
    if (!projection) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double diff = ra[j] - rb[j];
            s += diff * diff;
        }
        return std::sqrt(s);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < projection->rows(); ++i) {
        const double* prow = projection->row(i);
        double za = 0.0, zb = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            za += prow[j] * ra[j];
            zb += prow[j] * rb[j];
        }
        double diff = za - zb;
        s += diff * diff;
    }
    return std::sqrt(s);
}

inline PerturbationPlan l2_plan(const Graph& g, int v, const BudgetSpec& budget, bool ascending,
                                std::optional<int> only_class, const Matrix* projection,
                                const std::string& tag) {
    g.check_node(v);
    int yv = g.labels[static_cast<std::size_t>(v)];
    auto class_ok = [&](int y) { return only_class ? y == *only_class : y != yv; };
    std::vector<int> cands = insertion_candidates(g, v, class_ok);
    if (cands.empty()) throw empty_candidate_error(tag + ": no insertion candidates");
    std::vector<std::pair<double, int>> scored;
    scored.reserve(cands.size());
    for (int u : cands) scored.emplace_back(l2_distance(g.features, v, u, projection), u);
    std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return ascending ? a.first < b.first : a.first > b.first;
        return a.second < b.second;
    });
    int n_ops = std::min<int>(budget.resolve(g, v), static_cast<int>(scored.size()));
    PerturbationPlan plan{v, tag, {}};
    for (int i = 0; i < n_ops; ++i) plan.ops.push_back({OpKind::Insert, scored[static_cast<std::size_t>(i)].second});
    return plan;
}

}  // namespace detail

// Insert edges to the closest different-class nodes in feature space,
// nearest first; ties break toward the smaller node index.
inline PerturbationPlan plan_l2_weak(const Graph& g, int v, const BudgetSpec& budget) {
    return detail::l2_plan(g, v, budget, /*ascending=*/true, std::nullopt, nullptr, "l2-weak");
}

// Insert edges to the most distant different-class nodes, farthest first.
inline PerturbationPlan plan_l2_strong(const Graph& g, int v, const BudgetSpec& budget) {
    return detail::l2_plan(g, v, budget, /*ascending=*/false, std::nullopt, nullptr, "l2-strong");
}

// Insert edges to uniformly random different-class nodes (no repeats).
inline PerturbationPlan plan_dice(const Graph& g, int v, const BudgetSpec& budget, std::uint64_t seed) {
    g.check_node(v);
    int yv = g.labels[static_cast<std::size_t>(v)];
    std::vector<int> cands = detail::insertion_candidates(g, v, [&](int y) { return y != yv; });
    if (cands.empty()) throw empty_candidate_error("dice: no insertion candidates");
    RngStream rng(seed, Stream::AttackPick, static_cast<std::uint64_t>(v));
    int n_ops = std::min<int>(budget.resolve(g, v), static_cast<int>(cands.size()));
    PerturbationPlan plan{v, "dice", {}};
    for (int i = 0; i < n_ops; ++i) {
        std::size_t rest = cands.size() - static_cast<std::size_t>(i);
        std::size_t pick = static_cast<std::size_t>(i) + rng.uniform_index(rest);
        std::swap(cands[static_cast<std::size_t>(i)], cands[pick]);
        plan.ops.push_back({OpKind::Insert, cands[static_cast<std::size_t>(i)]});
    }
    return plan;
}

// The provably strongest plan against the Bayes reference: all toggles with
// negative change potential (insert different-class, delete same-class,
// relative to the clean Bayes decision), in decreasing magnitude; within
// equal potential inserts come before deletes, then node index.
inline PerturbationPlan plan_optimal_bayes(const Graph& g, int v, const BudgetSpec& budget) {
    detail::check_bayes_preconditions(g, v);
    if (g.gen->num_classes != 2)
        throw unsupported_error("optimal-bayes plan: defined for binary models");
    int y_star = classify_bayes(g, v, BayesMode::Full);
    auto toggles = optimal_toggles(g, v, y_star);
    int n_ops = std::min<int>(budget.resolve(g, v), static_cast<int>(toggles.size()));
    PerturbationPlan plan{v, "optimal-bayes", {}};
    for (int i = 0; i < n_ops; ++i) {
        const auto& t = toggles[static_cast<std::size_t>(i)];
        plan.ops.push_back({t.insert ? OpKind::Insert : OpKind::Delete, t.u});
    }
    return plan;
}

// Class-restricted variant of the l2 insertion attack; distances are taken
// after an optional linear projection of the features (e.g. a trained GCN's
// first weight matrix).
inline PerturbationPlan plan_per_class_l2(const Graph& g, int v, int target_class,
                                          const BudgetSpec& budget,
                                          const std::optional<Matrix>& projection = std::nullopt) {
    g.check_node(v);
    if (target_class < 0 || target_class >= g.num_classes)
        throw param_error("per-class plan: target class out of range");
    if (target_class == g.labels[static_cast<std::size_t>(v)])
        throw param_error("per-class plan: target class equals the node's class");
    const Matrix* proj = nullptr;
    if (projection) {
        if (projection->cols() != static_cast<std::size_t>(g.d))
            throw param_error("per-class plan: projection must have d columns");
        if (!projection->all_finite()) throw numeric_error("per-class plan: projection not finite");
        proj = &*projection;
    }
    return detail::l2_plan(g, v, budget, /*ascending=*/true, target_class, proj, "per-class-l2");
}

// Soft classifier interface used by the adaptive attack: class probabilities
// at a node of an arbitrary (perturbed) graph.
using SoftPredictor = std::function<std::vector<double>(const Graph&, int)>;

// Adaptive attack: at each step try every legal single toggle incident to v
// and keep the one minimizing the model's probability of its clean
// prediction. Stops at a flip or when the budget is exhausted. Tie-break is
// (insert before delete, node index); each endpoint pair is used at most
// once per plan.
inline PerturbationPlan greedy_margin_attack(const Graph& g, int v, const SoftPredictor& model_predict,
                                             const BudgetSpec& budget) {
    g.check_node(v);
    int clean_label = argmax(model_predict(g, v));
    Graph work = g;
    std::set<int> used;
    PerturbationPlan plan{v, "greedy-margin", {}};
    int steps = budget.resolve(g, v);
    for (int step = 0; step < steps; ++step) {
        double best_prob = std::numeric_limits<double>::infinity();
        int best_u = -1;
        OpKind best_kind = OpKind::Insert;
        for (int u = 0; u < g.n; ++u) {
            if (u == v || used.count(u)) continue;
            bool present = work.has_edge(v, u);
            OpKind kind = present ? OpKind::Delete : OpKind::Insert;
            if (present)
                work.erase_edge(v, u);
            else
                work.insert_edge(v, u);
            double prob = model_predict(work, v)[static_cast<std::size_t>(clean_label)];
            if (present)
                work.insert_edge(v, u);
            else
                work.erase_edge(v, u);
            bool better = prob < best_prob;
            if (prob == best_prob && best_u >= 0) {
                if (kind != best_kind)
                    better = kind == OpKind::Insert;
                else
                    better = u < best_u;
            }
            if (better) {
                best_prob = prob;
                best_u = u;
                best_kind = kind;
            }
        }
        if (best_u < 0) break;
        apply_edge_op(work, v, {best_kind, best_u});
        used.insert(best_u);
        plan.ops.push_back({best_kind, best_u});
        if (argmax(model_predict(work, v)) != clean_label) break;
    }
    return plan;
}

// Swaps the endpoints of two vertex-disjoint edges (a,b), (c,d) into (a,d)
// and (c,b); every vertex keeps its degree.
inline Graph degree_preserving_rewire(const Graph& g, std::pair<int, int> e1, std::pair<int, int> e2) {
    auto [a, b] = e1;
    auto [c, d] = e2;
    for (int x : {a, b, c, d}) g.check_node(x);
    if (!g.has_edge(a, b) || !g.has_edge(c, d))
        throw rewire_conflict_error("rewire: both edges must be present");
    if (a == c || a == d || b == c || b == d)
        throw rewire_conflict_error("rewire: edges must be vertex-disjoint");
    if (g.has_edge(a, d) || g.has_edge(c, b))
        throw rewire_conflict_error("rewire: replacement edge already present");
    Graph out = g;
    out.erase_edge(a, b);
    out.erase_edge(c, d);
    out.insert_edge(a, d);
    out.insert_edge(c, b);
    return out;
}

inline nlohmann::json plan_to_json(const PerturbationPlan& plan) {
    nlohmann::json ops = nlohmann::json::array();
    for (const auto& op : plan.ops)
        ops.push_back({{"kind", op.kind == OpKind::Insert ? "insert" : "delete"}, {"u", op.u}});
    return {{"target", plan.target}, {"attack_tag", plan.attack_tag}, {"ops", std::move(ops)}};
}

inline PerturbationPlan plan_from_json(const nlohmann::json& j) {
    PerturbationPlan plan;
    plan.target = j.at("target").get<int>();
    plan.attack_tag = j.at("attack_tag").get<std::string>();
    for (const auto& op : j.at("ops")) {
        std::string kind = op.at("kind").get<std::string>();
        if (kind != "insert" && kind != "delete") throw format_error("plan: bad op kind " + kind);
        plan.ops.push_back({kind == "insert" ? OpKind::Insert : OpKind::Delete, op.at("u").get<int>()});
    }
    return plan;
}

}  // namespace semrob
