#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "semrob/attacks.hpp"
#include "semrob/bayes.hpp"
#include "semrob/graph_io.hpp"
#include "semrob/graphgen.hpp"
#include "semrob/label_prop.hpp"
#include "semrob/metrics.hpp"
#include "semrob/plot.hpp"
#include "semrob/stats.hpp"
#include "semrob/train.hpp"

namespace semrob {

inline constexpr const char* kBuildId = "semrob 0.1.0";

// ---------------------------------------------------------------------------
// Declarative experiment description
// ---------------------------------------------------------------------------

struct ModelSpec {
    enum class Type { Csbm, Cba, Real };
    Type type = Type::Csbm;
    int n = 1000;
    double p = 0.0063;
    double q = 0.0015;
    double sigma = 1.0;
    int d = 21;
    int m = 2;
    std::vector<std::vector<double>> omega = {{3.16, 0.74}, {0.74, 3.16}};
    std::string edge_file, feature_file, label_file, mask_file;

    GenModel instantiate(double k) const {
        if (type == Type::Real) throw param_error("real graphs have no generative model");
        if (type == Type::Csbm) return GenModel::csbm(n, p, q, k, d, sigma);
        std::size_t c = omega.size();
        Matrix om(c, c);
        for (std::size_t i = 0; i < c; ++i) {
            if (omega[i].size() != c) throw param_error("omega must be square");
            for (std::size_t j = 0; j < c; ++j) om(i, j) = omega[i][j];
        }
        return GenModel::cba(n, m, std::move(om), k, d, sigma);
    }
};

struct ClassifierSpec {
    std::string tag = "gcn";
    bool has_arch = true;
    Arch arch = Arch::Gcn;
    bool lp = false;     // post-process with label propagation
    bool bayes = false;  // the reference classifier itself
    int hidden_dim = 64;
    int hops = 2;
    LPConfig lp_cfg;
    TrainConfig train_cfg;
};

struct AttackSpec {
    std::string tag = "l2-weak";
    enum class Kind { L2Weak, L2Strong, Dice, OptimalBayes, GreedyMargin, PerClassL2 };
    Kind kind = Kind::L2Weak;
    BudgetSpec budget = BudgetSpec::degree();
};

struct ExperimentConfig {
    ModelSpec model;
    std::vector<double> k_values = {0.1, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0};
    int seeds = 10;
    std::uint64_t base_seed = 42;
    int test_nodes = 1000;
    double val_split = 0.2;
    std::vector<ClassifierSpec> classifiers;
    std::vector<AttackSpec> attacks;
    double beta = 1.0;
    std::string profile = "full";

    static ExperimentConfig defaults() {
        ExperimentConfig cfg;
        ClassifierSpec gcn;
        gcn.tag = "gcn";
        ClassifierSpec gcn_lp = gcn;
        gcn_lp.tag = "gcn+lp";
        gcn_lp.lp = true;
        cfg.classifiers = {gcn, gcn_lp};
        cfg.attacks = {AttackSpec{}};
        return cfg;
    }

    void apply_profile(const std::string& name) {
        if (name == "quick") {
            seeds = std::min(seeds, 3);
            test_nodes = std::min(test_nodes, 200);
        } else if (name != "full") {
            throw param_error("unknown profile: " + name);
        }
        profile = name;
    }
};

// --- JSON (canonical form: to_json always emits every field) ---------------

inline json budget_to_json(const BudgetSpec& b) {
    switch (b.kind) {
        case BudgetSpec::Kind::Fixed: return {{"kind", "fixed"}, {"delta", b.value}};
        case BudgetSpec::Kind::Degree: return {{"kind", "degree"}};
        case BudgetSpec::Kind::DegreePlus: return {{"kind", "degree+"}, {"k", b.value}};
        case BudgetSpec::Kind::Unbounded: return {{"kind", "unbounded"}, {"cap", b.cap}};
    }
    return {};
}

inline BudgetSpec budget_from_json(const json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "fixed") return BudgetSpec::fixed(j.at("delta").get<int>());
    if (kind == "degree") return BudgetSpec::degree();
    if (kind == "degree+") return BudgetSpec::degree_plus(j.at("k").get<int>());
    if (kind == "unbounded") return BudgetSpec::unbounded(j.value("cap", 128));
    throw param_error("unknown budget kind: " + kind);
}

inline json config_to_json(const ExperimentConfig& cfg) {
    json jm;
    switch (cfg.model.type) {
        case ModelSpec::Type::Csbm:
            jm = {{"type", "csbm"}, {"n", cfg.model.n}, {"p", cfg.model.p}, {"q", cfg.model.q},
                  {"sigma", cfg.model.sigma}, {"d", cfg.model.d}};
            break;
        case ModelSpec::Type::Cba:
            jm = {{"type", "cba"}, {"n", cfg.model.n}, {"m", cfg.model.m},
                  {"omega", cfg.model.omega}, {"sigma", cfg.model.sigma}, {"d", cfg.model.d}};
            break;
        case ModelSpec::Type::Real:
            jm = {{"type", "real"}, {"edge_file", cfg.model.edge_file},
                  {"feature_file", cfg.model.feature_file}, {"label_file", cfg.model.label_file}};
            if (!cfg.model.mask_file.empty()) jm["mask_file"] = cfg.model.mask_file;
            break;
    }
    json jc = json::array();
    for (const auto& c : cfg.classifiers) {
        json e = {{"tag", c.tag},
                  {"lp", c.lp},
                  {"hidden_dim", c.hidden_dim},
                  {"hops", c.hops},
                  {"lp_alpha", c.lp_cfg.alpha},
                  {"lp_iterations", c.lp_cfg.iterations},
                  {"train",
                   {{"learning_rate", c.train_cfg.learning_rate},
                    {"weight_decay", c.train_cfg.weight_decay},
                    {"max_epochs", c.train_cfg.max_epochs},
                    {"patience", c.train_cfg.patience},
                    {"beta1", c.train_cfg.beta1},
                    {"beta2", c.train_cfg.beta2},
                    {"seed", c.train_cfg.seed}}}};
        if (c.has_arch) e["arch"] = arch_name(c.arch);
        jc.push_back(std::move(e));
    }
    json ja = json::array();
    for (const auto& a : cfg.attacks) {
        std::string kind;
        switch (a.kind) {
            case AttackSpec::Kind::L2Weak: kind = "l2-weak"; break;
            case AttackSpec::Kind::L2Strong: kind = "l2-strong"; break;
            case AttackSpec::Kind::Dice: kind = "dice"; break;
            case AttackSpec::Kind::OptimalBayes: kind = "optimal-bayes"; break;
            case AttackSpec::Kind::GreedyMargin: kind = "greedy-margin"; break;
            case AttackSpec::Kind::PerClassL2: kind = "per-class-l2"; break;
        }
        ja.push_back({{"tag", a.tag}, {"kind", kind}, {"budget", budget_to_json(a.budget)}});
    }
    return {{"model", jm},         {"k_values", cfg.k_values}, {"seeds", cfg.seeds},
            {"base_seed", cfg.base_seed}, {"test_nodes", cfg.test_nodes}, {"val_split", cfg.val_split},
            {"classifiers", jc},   {"attacks", ja},            {"beta", cfg.beta},
            {"profile", cfg.profile}};
}

inline ExperimentConfig config_from_json(const json& j) {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    if (j.contains("model")) {
        const json& jm = j.at("model");
        std::string type = jm.value("type", "csbm");
        if (type == "csbm")
            cfg.model.type = ModelSpec::Type::Csbm;
        else if (type == "cba")
            cfg.model.type = ModelSpec::Type::Cba;
        else if (type == "real")
            cfg.model.type = ModelSpec::Type::Real;
        else
            throw param_error("unknown model type: " + type);
        cfg.model.n = jm.value("n", cfg.model.n);
        cfg.model.p = jm.value("p", cfg.model.p);
        cfg.model.q = jm.value("q", cfg.model.q);
        cfg.model.sigma = jm.value("sigma", cfg.model.sigma);
        cfg.model.d = jm.value("d", cfg.model.d);
        cfg.model.m = jm.value("m", cfg.model.m);
        if (jm.contains("omega")) cfg.model.omega = jm.at("omega").get<std::vector<std::vector<double>>>();
        cfg.model.edge_file = jm.value("edge_file", "");
        cfg.model.feature_file = jm.value("feature_file", "");
        cfg.model.label_file = jm.value("label_file", "");
        cfg.model.mask_file = jm.value("mask_file", "");
    }
    if (j.contains("k_values")) cfg.k_values = j.at("k_values").get<std::vector<double>>();
    cfg.seeds = j.value("seeds", cfg.seeds);
    cfg.base_seed = j.value("base_seed", cfg.base_seed);
    cfg.test_nodes = j.value("test_nodes", cfg.test_nodes);
    cfg.val_split = j.value("val_split", cfg.val_split);
    if (j.contains("classifiers")) {
        cfg.classifiers.clear();
        for (const json& e : j.at("classifiers")) {
            ClassifierSpec c;
            c.tag = e.at("tag").get<std::string>();
            if (e.contains("arch")) {
                c.has_arch = true;
                c.arch = arch_from_name(e.at("arch").get<std::string>());
            } else {
                c.has_arch = false;
                c.bayes = c.tag == "bayes";
            }
            c.lp = e.value("lp", (!c.has_arch && !c.bayes) ? true : false);
            if (c.bayes && c.lp) throw param_error("classifier 'bayes' cannot be combined with lp");
            c.hidden_dim = e.value("hidden_dim", 64);
            c.hops = e.value("hops", 2);
            c.lp_cfg.alpha = e.value("lp_alpha", 0.7);
            c.lp_cfg.iterations = e.value("lp_iterations", 50);
            if (e.contains("train")) {
                const json& t = e.at("train");
                c.train_cfg.learning_rate = t.value("learning_rate", c.train_cfg.learning_rate);
                c.train_cfg.weight_decay = t.value("weight_decay", c.train_cfg.weight_decay);
                c.train_cfg.max_epochs = t.value("max_epochs", c.train_cfg.max_epochs);
                c.train_cfg.patience = t.value("patience", c.train_cfg.patience);
                c.train_cfg.beta1 = t.value("beta1", c.train_cfg.beta1);
                c.train_cfg.beta2 = t.value("beta2", c.train_cfg.beta2);
                c.train_cfg.seed = t.value("seed", c.train_cfg.seed);
            }
            cfg.classifiers.push_back(std::move(c));
        }
    }
    if (j.contains("attacks")) {
        cfg.attacks.clear();
        for (const json& e : j.at("attacks")) {
            AttackSpec a;
            std::string kind = e.at("kind").get<std::string>();
            if (kind == "l2-weak")
                a.kind = AttackSpec::Kind::L2Weak;
            else if (kind == "l2-strong")
                a.kind = AttackSpec::Kind::L2Strong;
            else if (kind == "dice")
                a.kind = AttackSpec::Kind::Dice;
            else if (kind == "optimal-bayes")
                a.kind = AttackSpec::Kind::OptimalBayes;
            else if (kind == "greedy-margin")
                a.kind = AttackSpec::Kind::GreedyMargin;
            else if (kind == "per-class-l2")
                a.kind = AttackSpec::Kind::PerClassL2;
            else
                throw param_error("unknown attack kind: " + kind);
            a.tag = e.value("tag", kind);
            if (e.contains("budget")) a.budget = budget_from_json(e.at("budget"));
            cfg.attacks.push_back(std::move(a));
        }
    }
    cfg.beta = j.value("beta", cfg.beta);
    if (j.contains("profile")) cfg.apply_profile(j.at("profile").get<std::string>());
    return cfg;
}

// Stable under key reordering: nlohmann objects keep keys sorted, so the
// canonical dump of the round-tripped config is unique.
inline std::string config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = fnv1a64(config_to_json(cfg).dump());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline json provenance_block(const ExperimentConfig& cfg) {
    return {{"build", kBuildId},
            {"config", config_to_json(cfg)},
            {"config_hash", config_hash(cfg)},
            {"base_seed", cfg.base_seed},
            {"profile", cfg.profile}};
}

// ---------------------------------------------------------------------------
// Runtime pieces
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t k_bits(double k) { return std::bit_cast<std::uint64_t>(k); }

// Graph seed for cell (K, seed index); independent of list order.
inline std::uint64_t cell_seed(std::uint64_t base, double k, int seed_idx) {
    return derive_seed(derive_seed(base, Stream::GraphSample, k_bits(k)), Stream::GraphSample,
                       static_cast<std::uint64_t>(seed_idx));
}

// Deterministic index-parallel loop; each iteration writes only its own slot.
template <typename Fn>
inline void parallel_for(int count, Fn&& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    int n_threads = static_cast<int>(hw == 0 ? 4 : hw);
    n_threads = std::min(n_threads, count);
    if (n_threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (int i = t; i < count; i += n_threads) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

// A classifier spec bound to one training graph.
struct PreparedClassifier {
    ClassifierSpec spec;
    std::optional<ModelParams> params;

    NodePredictor hard_predictor() const {
        if (spec.bayes)
            return [](const Graph& g, int v) { return classify_bayes(g, v, BayesMode::Full); };
        ClassifierSpec s = spec;
        std::optional<ModelParams> p = params;
        return [s, p](const Graph& g, int v) -> int {
            Matrix probs = [&] {
                if (!p) return label_propagation(g, std::nullopt, s.lp_cfg);
                if (s.lp) return combine_with_lp(*p, g, s.lp_cfg);
                return predict(*p, g);
            }();
            const double* r = probs.row(static_cast<std::size_t>(v));
            int best = 0;
            for (std::size_t j = 1; j < probs.cols(); ++j)
                if (r[j] > r[static_cast<std::size_t>(best)]) best = static_cast<int>(j);
            return best;
        };
    }

    SoftPredictor soft_predictor() const {
        if (spec.bayes) {
            // Exact posterior: softmax of the per-class log-likelihoods.
            return [](const Graph& g, int v) {
                ClassScore s = class_scores(g, v, BayesMode::Full);
                double mx = s.total[0];
                for (double x : s.total) mx = std::max(mx, x);
                double sum = 0.0;
                std::vector<double> probs(s.total.size());
                for (std::size_t j = 0; j < s.total.size(); ++j) {
                    probs[j] = std::exp(s.total[j] - mx);
                    sum += probs[j];
                }
                for (double& x : probs) x /= sum;
                return probs;
            };
        }
        ClassifierSpec s = spec;
        std::optional<ModelParams> p = params;
        return [s, p](const Graph& g, int v) -> std::vector<double> {
            Matrix probs = [&] {
                if (!p) return label_propagation(g, std::nullopt, s.lp_cfg);
                if (s.lp) return combine_with_lp(*p, g, s.lp_cfg);
                return predict(*p, g);
            }();
            const double* r = probs.row(static_cast<std::size_t>(v));
            return std::vector<double>(r, r + probs.cols());
        };
    }

    // Feature projection for the per-class attack: the first weight matrix,
    // transposed to rows-of-output form, omitted when it does not reduce the
    // dimension.
    std::optional<Matrix> projection(int d) const {
        if (!params) return std::nullopt;
        const Matrix& w1 = params->w1;
        if (static_cast<int>(w1.cols()) >= d) return std::nullopt;
        return transpose(w1);
    }
};

inline PreparedClassifier prepare_classifier(const ClassifierSpec& spec, const Graph& g,
                                             std::uint64_t graph_seed, double val_split) {
    PreparedClassifier pc;
    pc.spec = spec;
    if (spec.has_arch) {
        TrainConfig cfg = spec.train_cfg;
        cfg.seed = derive_seed(graph_seed, Stream::WeightInit, fnv1a64(spec.tag) ^ spec.train_cfg.seed);
        pc.params = train(spec.arch, g, cfg, val_split, spec.hidden_dim, spec.hops).params;
    }
    return pc;
}

inline NodePredictor bayes_hard_predictor() {
    return [](const Graph& g, int v) { return classify_bayes(g, v, BayesMode::Full); };
}

inline PerturbationPlan make_plan(const AttackSpec& atk, const Graph& g, int v,
                                  const PreparedClassifier& clf, std::uint64_t trial_seed) {
    switch (atk.kind) {
        case AttackSpec::Kind::L2Weak: return plan_l2_weak(g, v, atk.budget);
        case AttackSpec::Kind::L2Strong: return plan_l2_strong(g, v, atk.budget);
        case AttackSpec::Kind::Dice: return plan_dice(g, v, atk.budget, trial_seed);
        case AttackSpec::Kind::OptimalBayes: return plan_optimal_bayes(g, v, atk.budget);
        case AttackSpec::Kind::GreedyMargin:
            return greedy_margin_attack(g, v, clf.soft_predictor(), atk.budget);
        case AttackSpec::Kind::PerClassL2: {
            int target = (g.labels[static_cast<std::size_t>(v)] + 1) % g.num_classes;
            return plan_per_class_l2(g, v, target, atk.budget, clf.projection(g.d));
        }
    }
    throw param_error("unknown attack kind");
}

// ---------------------------------------------------------------------------
// Experiment runs (each returns a self-describing result bundle)
// ---------------------------------------------------------------------------

inline const char* bayes_mode_name(BayesMode m) {
    switch (m) {
        case BayesMode::Full: return "full";
        case BayesMode::FeaturesOnly: return "features_only";
        case BayesMode::StructureOnly: return "structure_only";
    }
    return "?";
}

// Accuracy of the Bayes reference on inductively sampled test nodes, per K
// and evidence mode, across seeds.
inline json bayes_accuracy_table(const ExperimentConfig& cfg) {
    if (cfg.model.type == ModelSpec::Type::Real)
        throw unsupported_error("bayes table needs a synthetic model");
    const BayesMode modes[] = {BayesMode::FeaturesOnly, BayesMode::StructureOnly, BayesMode::Full};
    json cells = json::array();
    for (double k : cfg.k_values) {
        std::map<std::string, std::vector<double>> per_mode;
        for (int s = 0; s < cfg.seeds; ++s) {
            std::uint64_t gseed = detail::cell_seed(cfg.base_seed, k, s);
            Graph g = sample_graph(cfg.model.instantiate(k), gseed);
            std::vector<std::array<char, 3>> ok(static_cast<std::size_t>(cfg.test_nodes));
            detail::parallel_for(cfg.test_nodes, [&](int t) {
                Graph gx = extend_graph(g, 1, derive_seed(gseed, Stream::TestNode, static_cast<std::uint64_t>(t)));
                int v = gx.n - 1;
                int y = gx.labels[static_cast<std::size_t>(v)];
                for (int mi = 0; mi < 3; ++mi)
                    ok[static_cast<std::size_t>(t)][static_cast<std::size_t>(mi)] =
                        classify_bayes(gx, v, modes[mi]) == y ? 1 : 0;
            });
            for (int mi = 0; mi < 3; ++mi) {
                long hits = 0;
                for (const auto& row : ok) hits += row[static_cast<std::size_t>(mi)];
                per_mode[bayes_mode_name(modes[mi])].push_back(static_cast<double>(hits) /
                                                               static_cast<double>(cfg.test_nodes));
            }
        }
        for (int mi = 0; mi < 3; ++mi) {
            const auto& vals = per_mode[bayes_mode_name(modes[mi])];
            cells.push_back({{"k", k},
                             {"mode", bayes_mode_name(modes[mi])},
                             {"per_seed", vals},
                             {"mean", mean(vals)},
                             {"std", stddev(vals)},
                             {"stderr", standard_error(vals)}});
        }
    }
    return {{"kind", "bayes_table"}, {"provenance", provenance_block(cfg)}, {"cells", std::move(cells)}};
}

// Fraction of targeted test nodes whose reference label flips within each
// local budget, for the first configured attack. Targets follow the attack
// pipeline's node filter: degree >= 1, full reference correct, and the
// structure-blind (features-only) reference correct, the latter standing in
// for the attacked feature model.
inline json semantic_violation_table(const ExperimentConfig& cfg) {
    if (cfg.model.type == ModelSpec::Type::Real)
        throw unsupported_error("violation table needs a synthetic model");
    if (cfg.attacks.empty()) throw param_error("violation table: no attack configured");
    const AttackSpec& atk = cfg.attacks.front();
    struct BudgetRow {
        const char* name;
        BudgetSpec spec;
    };
    const std::vector<BudgetRow> budgets = {
        {"b1", BudgetSpec::fixed(1)},     {"b2", BudgetSpec::fixed(2)},
        {"b3", BudgetSpec::fixed(3)},     {"b4", BudgetSpec::fixed(4)},
        {"deg", BudgetSpec::degree()},    {"deg+2", BudgetSpec::degree_plus(2)},
    };
    NodePredictor bayes = bayes_hard_predictor();
    json cells = json::array();
    long total_nodes = 0, targeted_nodes = 0;
    for (double k : cfg.k_values) {
        std::map<std::string, std::vector<double>> per_budget;
        for (int s = 0; s < cfg.seeds; ++s) {
            std::uint64_t gseed = detail::cell_seed(cfg.base_seed, k, s);
            Graph g = sample_graph(cfg.model.instantiate(k), gseed);
            std::vector<std::array<char, 7>> flags(static_cast<std::size_t>(cfg.test_nodes));
            detail::parallel_for(cfg.test_nodes, [&](int t) {
                std::uint64_t tseed = derive_seed(gseed, Stream::TestNode, static_cast<std::uint64_t>(t));
                Graph gx = extend_graph(g, 1, tseed);
                int v = gx.n - 1;
                int y = gx.labels[static_cast<std::size_t>(v)];
                int deg = gx.degree(v);
                auto& row = flags[static_cast<std::size_t>(t)];
                bool targeted = deg >= 1 && classify_bayes(gx, v, BayesMode::Full) == y &&
                                classify_bayes(gx, v, BayesMode::FeaturesOnly) == y;
                row[6] = targeted ? 1 : 0;
                if (!targeted) {
                    for (int bi = 0; bi < 6; ++bi) row[static_cast<std::size_t>(bi)] = 0;
                    return;
                }
                int max_budget = std::max(4, deg + 2);
                AttackSpec full = atk;
                full.budget = BudgetSpec::fixed(max_budget);
                PreparedClassifier dummy;
                PerturbationPlan plan = make_plan(full, gx, v, dummy, tseed);
                auto flip = first_flip_step(gx, v, plan, bayes, max_budget);
                for (std::size_t bi = 0; bi < budgets.size(); ++bi) {
                    int b = budgets[bi].spec.kind == BudgetSpec::Kind::Fixed
                                ? budgets[bi].spec.value
                                : budgets[bi].spec.resolve(gx, v);
                    row[bi] = (flip && *flip <= b) ? 1 : 0;
                }
            });
            long targeted = 0;
            for (const auto& row : flags) targeted += row[6];
            total_nodes += cfg.test_nodes;
            targeted_nodes += targeted;
            for (std::size_t bi = 0; bi < budgets.size(); ++bi) {
                long hits = 0;
                for (const auto& row : flags) hits += row[bi];
                per_budget[budgets[bi].name].push_back(static_cast<double>(hits) /
                                                       static_cast<double>(std::max(1L, targeted)));
            }
        }
        for (const auto& b : budgets) {
            const auto& vals = per_budget[b.name];
            cells.push_back({{"k", k},
                             {"budget", b.name},
                             {"per_seed", vals},
                             {"mean", mean(vals)},
                             {"std", stddev(vals)},
                             {"stderr", standard_error(vals)}});
        }
    }
    return {{"kind", "violation_table"},
            {"provenance", provenance_block(cfg)},
            {"attack", atk.tag},
            {"total_nodes", total_nodes},
            {"targeted_nodes", targeted_nodes},
            {"cells", std::move(cells)}};
}

namespace detail {

inline json record_to_json(const RobustnessRecord& r) {
    json j = {{"node", r.node},
              {"degree", r.degree},
              {"budget", r.budget_used},
              {"clean_f_correct", r.clean_f_correct},
              {"clean_agree", r.clean_agree}};
    j["t_f"] = r.t_f ? json(*r.t_f) : json(nullptr);
    j["t_g"] = r.t_g ? json(*r.t_g) : json(nullptr);
    return j;
}

inline json summary_to_json(const MetricsSummary& s) {
    json j = {{"r_fg", s.r_fg},
              {"r_f", s.r_f},
              {"r_g", s.r_g},
              {"node_count", s.node_count},
              {"beta", s.beta},
              {"excluded_degree0", s.excluded_degree0},
              {"excluded_incorrect", s.excluded_incorrect},
              {"excluded_disagree", s.excluded_disagree},
              {"censored_f", s.censored_f},
              {"censored_g", s.censored_g}};
    j["r_over"] = s.r_over ? json(*s.r_over) : json(nullptr);
    j["r_adv"] = s.r_adv ? json(*s.r_adv) : json(nullptr);
    j["f_beta"] = s.f_beta ? json(*s.f_beta) : json(nullptr);
    return j;
}

}  // namespace detail

// Full pipeline: sample graphs, train the configured classifiers, attack
// every inductively sampled test node, trace and aggregate.
inline json over_robustness_sweep(const ExperimentConfig& cfg) {
    if (cfg.model.type == ModelSpec::Type::Real)
        throw unsupported_error("sweep needs a synthetic model (the reference is its Bayes rule)");
    if (cfg.classifiers.empty()) throw param_error("sweep: no classifiers configured");
    if (cfg.attacks.empty()) throw param_error("sweep: no attacks configured");
    NodePredictor bayes = bayes_hard_predictor();
    json cells = json::array();
    for (double k : cfg.k_values) {
        for (int s = 0; s < cfg.seeds; ++s) {
            std::uint64_t gseed = detail::cell_seed(cfg.base_seed, k, s);
            Graph g = sample_graph(cfg.model.instantiate(k), gseed);
            // Identically configured classifiers share one trained model.
            std::map<std::string, std::shared_ptr<PreparedClassifier>> by_signature;
            std::vector<std::shared_ptr<PreparedClassifier>> prepared;
            for (const auto& spec : cfg.classifiers) {
                json sig = {{"arch", spec.has_arch ? arch_name(spec.arch) : "-"},
                            {"hidden", spec.hidden_dim},
                            {"hops", spec.hops},
                            {"lr", spec.train_cfg.learning_rate},
                            {"wd", spec.train_cfg.weight_decay},
                            {"epochs", spec.train_cfg.max_epochs},
                            {"patience", spec.train_cfg.patience},
                            {"seed", spec.train_cfg.seed},
                            {"tag", spec.has_arch ? spec.tag : "-"}};
                // Model+LP reuses the base model: drop the tag from the
                // signature when the trained part is identical.
                std::string base_tag = spec.tag;
                if (spec.lp && base_tag.size() > 3 && base_tag.substr(base_tag.size() - 3) == "+lp")
                    base_tag = base_tag.substr(0, base_tag.size() - 3);
                sig["tag"] = spec.has_arch ? base_tag : "-";
                std::string key = sig.dump();
                auto it = by_signature.find(key);
                std::shared_ptr<PreparedClassifier> pc;
                if (it == by_signature.end()) {
                    ClassifierSpec train_spec = spec;
                    train_spec.tag = base_tag;
                    pc = std::make_shared<PreparedClassifier>(
                        prepare_classifier(train_spec, g, gseed, cfg.val_split));
                    by_signature.emplace(key, pc);
                } else {
                    pc = it->second;
                }
                auto bound = std::make_shared<PreparedClassifier>(*pc);
                bound->spec = spec;
                prepared.push_back(std::move(bound));
            }

            std::size_t n_clf = cfg.classifiers.size();
            std::size_t n_atk = cfg.attacks.size();
            std::vector<std::vector<std::vector<RobustnessRecord>>> records(
                n_clf, std::vector<std::vector<RobustnessRecord>>(
                           n_atk, std::vector<RobustnessRecord>(static_cast<std::size_t>(cfg.test_nodes))));
            std::vector<std::vector<char>> correct(n_clf,
                                                   std::vector<char>(static_cast<std::size_t>(cfg.test_nodes), 0));
            detail::parallel_for(cfg.test_nodes, [&](int t) {
                std::uint64_t tseed = derive_seed(gseed, Stream::TestNode, static_cast<std::uint64_t>(t));
                Graph gx = extend_graph(g, 1, tseed);
                int v = gx.n - 1;
                for (std::size_t ci = 0; ci < n_clf; ++ci) {
                    NodePredictor f = prepared[ci]->hard_predictor();
                    correct[ci][static_cast<std::size_t>(t)] =
                        f(gx, v) == gx.labels[static_cast<std::size_t>(v)] ? 1 : 0;
                    for (std::size_t ai = 0; ai < n_atk; ++ai) {
                        PerturbationPlan plan = make_plan(cfg.attacks[ai], gx, v, *prepared[ci], tseed);
                        int budget = cfg.attacks[ai].budget.resolve(gx, v);
                        records[ci][ai][static_cast<std::size_t>(t)] =
                            robustness_trace(gx, v, plan, f, bayes, budget);
                    }
                }
            });
            for (std::size_t ci = 0; ci < n_clf; ++ci) {
                long hits = 0;
                for (char c : correct[ci]) hits += c;
                double acc = static_cast<double>(hits) / static_cast<double>(cfg.test_nodes);
                for (std::size_t ai = 0; ai < n_atk; ++ai) {
                    MetricsSummary sum = aggregate(records[ci][ai], cfg.beta);
                    json recs = json::array();
                    for (const auto& r : records[ci][ai]) recs.push_back(detail::record_to_json(r));
                    cells.push_back({{"k", k},
                                     {"seed", s},
                                     {"classifier", cfg.classifiers[ci].tag},
                                     {"attack", cfg.attacks[ai].tag},
                                     {"test_accuracy", acc},
                                     {"summary", detail::summary_to_json(sum)},
                                     {"records", std::move(recs)}});
                }
            }
        }
    }
    // Cross-seed grid: mean/std/stderr of the headline ratios per cell group.
    json grid = json::array();
    for (double k : cfg.k_values) {
        for (const auto& clf : cfg.classifiers) {
            for (const auto& atk : cfg.attacks) {
                std::vector<double> over, adv, fb, acc;
                for (const auto& cell : cells) {
                    if (cell.at("k").get<double>() != k) continue;
                    if (cell.at("classifier").get<std::string>() != clf.tag) continue;
                    if (cell.at("attack").get<std::string>() != atk.tag) continue;
                    const json& sum = cell.at("summary");
                    if (!sum.at("r_over").is_null()) over.push_back(sum.at("r_over").get<double>());
                    if (!sum.at("r_adv").is_null()) adv.push_back(sum.at("r_adv").get<double>());
                    if (!sum.at("f_beta").is_null()) fb.push_back(sum.at("f_beta").get<double>());
                    acc.push_back(cell.at("test_accuracy").get<double>());
                }
                auto stats_or_null = [](const std::vector<double>& v) -> json {
                    if (v.empty()) return nullptr;
                    return {{"mean", mean(v)}, {"std", stddev(v)}, {"stderr", standard_error(v)}};
                };
                grid.push_back({{"k", k},
                                {"classifier", clf.tag},
                                {"attack", atk.tag},
                                {"r_over", stats_or_null(over)},
                                {"r_adv", stats_or_null(adv)},
                                {"f_beta", stats_or_null(fb)},
                                {"test_accuracy", stats_or_null(acc)}});
            }
        }
    }
    return {{"kind", "sweep"},
            {"provenance", provenance_block(cfg)},
            {"cells", std::move(cells)},
            {"grid", std::move(grid)}};
}

// Per-degree distribution of the number of single-class insertions the
// classifier withstands, minimized/maximized over target classes, capped.
inline json degree_robustness_profile(const ExperimentConfig& cfg) {
    if (cfg.classifiers.empty()) throw param_error("degree profile: no classifiers configured");
    const ClassifierSpec& spec = cfg.classifiers.front();
    int cap = 128;
    for (const auto& a : cfg.attacks)
        if (a.kind == AttackSpec::Kind::PerClassL2 && a.budget.kind == BudgetSpec::Kind::Unbounded)
            cap = a.budget.cap;

    struct NodeProfile {
        int node = 0, degree = 0;
        std::optional<int> n_min, n_max;
        bool skipped = false;
    };

    json per_node = json::array();
    std::map<int, std::vector<double>> min_by_degree, max_by_degree;
    std::map<int, int> censored_min, censored_max, count_by_degree;
    int skipped_misclassified = 0;

    // Targets are materialized lazily inside the worker threads so only
    // O(threads) perturbed graphs are alive at once.
    auto profile_nodes = [&](const PreparedClassifier& clf, int count,
                             const std::function<std::pair<Graph, int>(int)>& make_target) {
        std::vector<NodeProfile> rows(static_cast<std::size_t>(count));
        NodePredictor f = clf.hard_predictor();
        detail::parallel_for(count, [&](int i) {
            auto [gx, v] = make_target(i);
            NodeProfile& row = rows[static_cast<std::size_t>(i)];
            row.node = v;
            row.degree = gx.degree(v);
            if (f(gx, v) != gx.labels[static_cast<std::size_t>(v)]) {
                row.skipped = true;
                return;
            }
            std::optional<int> n_min, n_max;
            bool any_censored = false;
            for (int c = 0; c < gx.num_classes; ++c) {
                if (c == gx.labels[static_cast<std::size_t>(v)]) continue;
                PerturbationPlan plan =
                    plan_per_class_l2(gx, v, c, BudgetSpec::unbounded(cap), clf.projection(gx.d));
                auto flip = first_flip_step(gx, v, plan, f, cap);
                if (!flip) {
                    any_censored = true;
                    continue;
                }
                if (!n_min || *flip < *n_min) n_min = flip;
                if (!n_max || *flip > *n_max) n_max = flip;
            }
            row.n_min = n_min;
            // A censored class dominates the max side.
            row.n_max = any_censored ? std::nullopt : n_max;
        });
        for (const auto& row : rows) {
            if (row.skipped) {
                ++skipped_misclassified;
                continue;
            }
            json jrow = {{"node", row.node}, {"degree", row.degree}};
            jrow["n_min"] = row.n_min ? json(*row.n_min) : json(nullptr);
            jrow["n_max"] = row.n_max ? json(*row.n_max) : json(nullptr);
            per_node.push_back(std::move(jrow));
            ++count_by_degree[row.degree];
            if (row.n_min)
                min_by_degree[row.degree].push_back(static_cast<double>(*row.n_min));
            else
                ++censored_min[row.degree];
            if (row.n_max)
                max_by_degree[row.degree].push_back(static_cast<double>(*row.n_max));
            else
                ++censored_max[row.degree];
        }
    };

    if (cfg.model.type == ModelSpec::Type::Real) {
        Graph g = ingest_real_graph(cfg.model.edge_file, cfg.model.feature_file, cfg.model.label_file,
                                    cfg.model.mask_file.empty()
                                        ? std::nullopt
                                        : std::make_optional(cfg.model.mask_file));
        PreparedClassifier clf = prepare_classifier(spec, g, cfg.base_seed, cfg.val_split);
        std::vector<int> nodes;
        bool any_unknown = false;
        for (char kn : g.known) any_unknown |= kn == 0;
        for (int v = 0; v < g.n; ++v)
            if (!any_unknown || !g.known[static_cast<std::size_t>(v)]) nodes.push_back(v);
        profile_nodes(clf, static_cast<int>(nodes.size()),
                      [&](int i) { return std::make_pair(g, nodes[static_cast<std::size_t>(i)]); });
    } else {
        double k = cfg.k_values.empty() ? 1.5 : cfg.k_values.front();
        for (int s = 0; s < cfg.seeds; ++s) {
            std::uint64_t gseed = detail::cell_seed(cfg.base_seed, k, s);
            Graph g = sample_graph(cfg.model.instantiate(k), gseed);
            PreparedClassifier clf = prepare_classifier(spec, g, gseed, cfg.val_split);
            profile_nodes(clf, cfg.test_nodes, [&](int t) {
                Graph gx = extend_graph(g, 1, derive_seed(gseed, Stream::TestNode, static_cast<std::uint64_t>(t)));
                return std::make_pair(std::move(gx), g.n);
            });
        }
    }

    json rows = json::array();
    for (const auto& [deg, cnt] : count_by_degree) {
        auto quart = [&](std::map<int, std::vector<double>>& by_deg) -> json {
            auto it = by_deg.find(deg);
            if (it == by_deg.end() || it->second.empty()) return nullptr;
            std::vector<double> v = it->second;
            std::sort(v.begin(), v.end());
            return {{"mean", mean(v)},
                    {"q1", percentile_sorted(v, 0.25)},
                    {"median", percentile_sorted(v, 0.5)},
                    {"q3", percentile_sorted(v, 0.75)}};
        };
        rows.push_back({{"degree", deg},
                        {"count", cnt},
                        {"censored_min", censored_min.count(deg) ? censored_min[deg] : 0},
                        {"censored_max", censored_max.count(deg) ? censored_max[deg] : 0},
                        {"min_class", quart(min_by_degree)},
                        {"max_class", quart(max_by_degree)}});
    }
    return {{"kind", "degree_profile"},
            {"provenance", provenance_block(cfg)},
            {"classifier", spec.tag},
            {"cap", cap},
            {"skipped_misclassified", skipped_misclassified},
            {"rows", std::move(rows)},
            {"per_node", std::move(per_node)}};
}

}  // namespace semrob
