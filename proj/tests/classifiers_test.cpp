#include <gtest/gtest.h>

#include <cmath>

#include "semrob/graphgen.hpp"
#include "semrob/label_prop.hpp"
#include "semrob/models.hpp"
#include "semrob/train.hpp"

using namespace semrob;

namespace {

// Dense n x n matrix of S = D^{-1/2} A D^{-1/2}, optionally with self-loops.
Matrix dense_norm_adj(const Graph& g, bool self_loops) {
    Matrix s(static_cast<std::size_t>(g.n), static_cast<std::size_t>(g.n));
    auto deg = [&](int v) { return static_cast<double>(g.degree(v)) + (self_loops ? 1.0 : 0.0); };
    for (int i = 0; i < g.n; ++i) {
        if (self_loops) s(i, i) = 1.0 / deg(i);
        for (int j : g.neighbors(i)) s(i, j) = 1.0 / std::sqrt(deg(i) * deg(j));
    }
    return s;
}

// Gaussian elimination with partial pivoting; solves A X = B in place.
Matrix solve_dense(Matrix a, Matrix b) {
    std::size_t n = a.rows();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
            for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(col, j), b(piv, j));
        }
        double d = a(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = a(r, col) / d;
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            for (std::size_t j = 0; j < b.cols(); ++j) b(r, j) -= f * b(col, j);
        }
    }
    for (std::size_t col = n; col-- > 0;) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = b(col, j);
            for (std::size_t k = col + 1; k < n; ++k) s -= a(col, k) * b(k, j);
            b(col, j) = s / a(col, col);
        }
    }
    return b;
}

Graph three_node_path() {
    Graph g = make_graph(3, 2, 2);
    g.labels = {0, 1, 1};
    g.known = {1, 0, 0};
    g.insert_edge(0, 1);
    g.insert_edge(1, 2);
    return g;
}

Graph random_connected_graph(int n, std::uint64_t seed) {
    Graph g = make_graph(n, 3, 2);
    RngStream rng(seed, Stream::GraphSample, 0);
    for (int v = 1; v < n; ++v) g.insert_edge(v, static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(v))));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (!g.has_edge(i, j) && rng.bernoulli(0.25)) g.insert_edge(i, j);
    for (int v = 0; v < n; ++v) {
        g.labels[static_cast<std::size_t>(v)] = rng.bernoulli(0.5) ? 1 : 0;
        g.known[static_cast<std::size_t>(v)] = rng.bernoulli(0.6) ? 1 : 0;
        for (int j = 0; j < g.d; ++j) g.features(v, static_cast<std::size_t>(j)) = rng.normal();
    }
    g.known[0] = 1;
    return g;
}

}  // namespace

TEST(LabelPropagation, AlphaZeroReturnsSeedMatrix) {
    Graph g = three_node_path();
    LPConfig cfg{0.0, 25};
    Matrix f = label_propagation(g, std::nullopt, cfg);
    EXPECT_DOUBLE_EQ(f(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(f(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(f(1, 0), 0.0);
    EXPECT_DOUBLE_EQ(f(2, 1), 0.0);
}

// Oracle: the 50-iteration iterate must match the fixed point
// (1 - alpha) (I - alpha S)^{-1} Y from a direct dense solve.
TEST(LabelPropagation, MatchesClosedFormFixedPoint) {
    Graph g = three_node_path();
    LPConfig cfg{0.5, 50};
    Matrix f = label_propagation(g, std::nullopt, cfg);

    Matrix s = dense_norm_adj(g, false);
    Matrix a(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) a(i, j) = (i == j ? 1.0 : 0.0) - cfg.alpha * s(i, j);
    Matrix y(3, 2);
    y(0, 0) = 1.0;
    for (auto& val : y.data()) val *= (1.0 - cfg.alpha);
    Matrix fixed = solve_dense(a, y);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(f(i, j), fixed(i, j), 1e-6);
}

TEST(LabelPropagation, FixedPointOnRandomConnectedGraphs) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Graph g = random_connected_graph(10, seed);
        LPConfig cfg{0.6, 50};
        Matrix f = label_propagation(g, std::nullopt, cfg);
        Matrix s = dense_norm_adj(g, false);
        std::size_t n = static_cast<std::size_t>(g.n);
        Matrix a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) a(i, j) = (i == j ? 1.0 : 0.0) - cfg.alpha * s(i, j);
        Matrix y(n, 2);
        for (int v = 0; v < g.n; ++v)
            if (g.known[static_cast<std::size_t>(v)])
                y(static_cast<std::size_t>(v), static_cast<std::size_t>(g.labels[static_cast<std::size_t>(v)])) = 1.0;
        for (auto& val : y.data()) val *= (1.0 - cfg.alpha);
        Matrix fixed = solve_dense(a, y);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                EXPECT_NEAR(f(i, j), fixed(i, j), 1e-6) << "seed " << seed;
    }
}

TEST(LabelPropagation, IsolatedUnlabeledNodeStaysZero) {
    Graph g = make_graph(3, 2, 2);
    g.labels = {0, 1, 0};
    g.known = {1, 1, 0};
    g.insert_edge(0, 1);
    Matrix f = label_propagation(g, std::nullopt, LPConfig{0.7, 50});
    EXPECT_DOUBLE_EQ(f(2, 0), 0.0);
    EXPECT_DOUBLE_EQ(f(2, 1), 0.0);
    EXPECT_EQ(argmax_rows(f)[2], 0);  // tie resolves to class 0
}

TEST(LabelPropagation, SuccessiveIterateDifferencesShrink) {
    Graph g = random_connected_graph(12, 3);
    LPConfig cfg{0.8, 1};
    Matrix prev = label_propagation(g, std::nullopt, cfg);
    double last_diff = 1e100;
    for (int t = 2; t <= 12; ++t) {
        cfg.iterations = t;
        Matrix cur = label_propagation(g, std::nullopt, cfg);
        double diff = 0.0;
        for (std::size_t i = 0; i < cur.data().size(); ++i)
            diff = std::max(diff, std::abs(cur.data()[i] - prev.data()[i]));
        if (t > 2) {
            EXPECT_LE(diff, last_diff + 1e-12) << "iteration " << t;
        }
        last_diff = diff;
        prev = cur;
    }
}

TEST(LabelPropagation, SeedShapeMismatchThrows) {
    Graph g = three_node_path();
    Matrix bad(2, 2);
    EXPECT_THROW(label_propagation(g, bad, LPConfig{}), param_error);
    EXPECT_THROW(label_propagation(g, std::nullopt, LPConfig{1.5, 10}), param_error);
}

TEST(Predict, AllZeroWeightsGiveUniformRows) {
    Graph g = random_connected_graph(6, 1);
    for (Arch arch : {Arch::Mlp, Arch::Sgc, Arch::Gcn}) {
        ModelParams p = init_params(arch, g.d, 2, 4, 2, 0);
        for (auto& w : p.w1.data()) w = 0.0;
        for (auto& w : p.w2.data()) w = 0.0;
        Matrix probs = predict(p, g);
        for (std::size_t i = 0; i < probs.rows(); ++i)
            for (std::size_t j = 0; j < probs.cols(); ++j) EXPECT_DOUBLE_EQ(probs(i, j), 0.5);
    }
}

TEST(Predict, RowsSumToOneAndStayFinite) {
    Graph g = random_connected_graph(15, 2);
    for (Arch arch : {Arch::Mlp, Arch::Sgc, Arch::Gcn}) {
        ModelParams p = init_params(arch, g.d, 2, 8, 2, 5);
        Matrix probs = predict(p, g);
        for (std::size_t i = 0; i < probs.rows(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < probs.cols(); ++j) {
                ASSERT_TRUE(std::isfinite(probs(i, j)));
                s += probs(i, j);
            }
            EXPECT_NEAR(s, 1.0, 1e-9);
        }
    }
}

TEST(Predict, NonFiniteParametersRejected) {
    Graph g = random_connected_graph(4, 9);
    ModelParams p = init_params(Arch::Mlp, g.d, 2, 4, 2, 0);
    p.w1(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(predict(p, g), numeric_error);
}

TEST(Predict, SgcZeroHopsIsLogisticRegression) {
    Graph g = random_connected_graph(8, 4);
    ModelParams p = init_params(Arch::Sgc, g.d, 2, 0, 0, 7);
    Matrix probs = predict(p, g);
    // Oracle: softmax(X w + b) computed directly.
    Matrix logits = matmul(g.features, p.w1);
    for (std::size_t i = 0; i < logits.rows(); ++i)
        for (std::size_t j = 0; j < logits.cols(); ++j) logits(i, j) += p.b1[j];
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        double mx = std::max(logits(i, 0), logits(i, 1));
        double e0 = std::exp(logits(i, 0) - mx), e1 = std::exp(logits(i, 1) - mx);
        EXPECT_NEAR(probs(i, 0), e0 / (e0 + e1), 1e-12);
        EXPECT_NEAR(probs(i, 1), e1 / (e0 + e1), 1e-12);
    }
}

// Oracle: independently coded dense matrix-chain forward for the GCN.
TEST(Predict, GcnMatchesDenseOracle) {
    Graph g = make_graph(4, 3, 2);
    g.insert_edge(0, 1);
    g.insert_edge(1, 2);
    g.insert_edge(2, 3);
    g.insert_edge(0, 3);
    RngStream rng(5, Stream::NodeFeatures, 0);
    for (auto& x : g.features.data()) x = rng.normal();
    ModelParams p = init_params(Arch::Gcn, 3, 2, 5, 2, 11);

    Matrix s_hat = dense_norm_adj(g, true);
    Matrix h = matmul(matmul(s_hat, g.features), p.w1);
    for (std::size_t i = 0; i < h.rows(); ++i)
        for (std::size_t j = 0; j < h.cols(); ++j) h(i, j) = std::max(0.0, h(i, j) + p.b1[j]);
    Matrix logits = matmul(matmul(s_hat, h), p.w2);
    for (std::size_t i = 0; i < logits.rows(); ++i)
        for (std::size_t j = 0; j < logits.cols(); ++j) logits(i, j) += p.b2[j];

    Matrix probs = predict(p, g);
    for (std::size_t i = 0; i < 4; ++i) {
        double mx = std::max(logits(i, 0), logits(i, 1));
        double e0 = std::exp(logits(i, 0) - mx), e1 = std::exp(logits(i, 1) - mx);
        EXPECT_NEAR(probs(i, 0), e0 / (e0 + e1), 1e-10);
        EXPECT_NEAR(probs(i, 1), e1 / (e0 + e1), 1e-10);
    }
}

TEST(Predict, SgcIgnoresEdgesOutsideReceptiveField) {
    // Path 0-1-2-3-4-5 plus a far edge (4,5): removing it cannot change the
    // 2-hop SGC prediction at node 0 in any bit.
    Graph g = make_graph(6, 2, 2);
    for (int v = 0; v + 1 < 6; ++v) g.insert_edge(v, v + 1);
    RngStream rng(3, Stream::NodeFeatures, 1);
    for (auto& x : g.features.data()) x = rng.normal();
    ModelParams p = init_params(Arch::Sgc, 2, 2, 0, 2, 3);

    Matrix before = predict(p, g);
    Graph cut = g;
    cut.erase_edge(4, 5);
    Matrix after = predict(p, cut);
    EXPECT_EQ(before(0, 0), after(0, 0));
    EXPECT_EQ(before(0, 1), after(0, 1));
}

TEST(Train, ZeroEpochsReturnsSeededInit) {
    Graph g = random_connected_graph(10, 6);
    TrainConfig cfg;
    cfg.max_epochs = 0;
    cfg.seed = 42;
    TrainResult r = train(Arch::Mlp, g, cfg, 0.2, 4, 2);
    ModelParams init = init_params(Arch::Mlp, g.d, g.num_classes, 4, 2, 42);
    EXPECT_EQ(r.params.w1, init.w1);
    EXPECT_EQ(r.params.w2, init.w2);
    EXPECT_EQ(r.best_epoch, -1);
}

TEST(Train, EmptySplitRejected) {
    Graph g = random_connected_graph(10, 6);
    TrainConfig cfg;
    EXPECT_THROW(train(Arch::Mlp, g, cfg, 0.0), param_error);   // no validation nodes
    EXPECT_THROW(train(Arch::Mlp, g, cfg, 0.999), param_error); // no training nodes
}

// Oracle: central finite differences of the cross-entropy at h = 1e-5.
TEST(Train, AnalyticGradientsMatchFiniteDifferences) {
    Graph g = random_connected_graph(6, 12);
    std::vector<int> nodes = {0, 1, 2, 3, 4, 5};
    const double h = 1e-5;
    for (Arch arch : {Arch::Mlp, Arch::Sgc, Arch::Gcn}) {
        ModelParams p = init_params(arch, g.d, 2, 4, 2, 31);
        auto [loss, grads] = loss_and_gradients(p, g, nodes);
        (void)loss;
        auto check = [&](double* param, double analytic, const char* what, std::size_t idx) {
            double saved = *param;
            *param = saved + h;
            double up = ce_loss(p, g, nodes);
            *param = saved - h;
            double down = ce_loss(p, g, nodes);
            *param = saved;
            double numeric = (up - down) / (2.0 * h);
            double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            EXPECT_LT(std::abs(analytic - numeric) / denom, 1e-4)
                << arch_name(arch) << " " << what << "[" << idx << "]";
        };
        for (std::size_t i = 0; i < p.w1.data().size(); ++i)
            check(&p.w1.data()[i], grads.w1.data()[i], "w1", i);
        for (std::size_t i = 0; i < p.b1.size(); ++i) check(&p.b1[i], grads.b1[i], "b1", i);
        if (arch != Arch::Sgc) {
            for (std::size_t i = 0; i < p.w2.data().size(); ++i)
                check(&p.w2.data()[i], grads.w2.data()[i], "w2", i);
            for (std::size_t i = 0; i < p.b2.size(); ++i) check(&p.b2[i], grads.b2[i], "b2", i);
        }
    }
}

TEST(Train, BestValidationLossIsHistoryMinimum) {
    Graph g = sample_graph(GenModel::csbm(120, 0.08, 0.01, 2.0, 6), 3);
    TrainConfig cfg;
    cfg.max_epochs = 60;
    cfg.patience = 10;
    cfg.seed = 5;
    TrainResult r = train(Arch::Mlp, g, cfg, 0.25, 8, 2);
    ASSERT_FALSE(r.val_history.empty());
    double min_seen = r.val_history[0];
    for (double v : r.val_history) min_seen = std::min(min_seen, v);
    EXPECT_DOUBLE_EQ(r.best_val_loss, min_seen);
    EXPECT_DOUBLE_EQ(r.val_history[static_cast<std::size_t>(r.best_epoch)], min_seen);
}

TEST(Train, DeterministicForFixedSeed) {
    Graph g = sample_graph(GenModel::csbm(80, 0.1, 0.02, 2.0, 5), 8);
    TrainConfig cfg;
    cfg.max_epochs = 30;
    cfg.patience = 30;
    cfg.seed = 9;
    TrainResult a = train(Arch::Gcn, g, cfg, 0.2, 8, 2);
    TrainResult b = train(Arch::Gcn, g, cfg, 0.2, 8, 2);
    EXPECT_EQ(a.params.w1, b.params.w1);
    EXPECT_EQ(a.params.w2, b.params.w2);
    EXPECT_EQ(a.best_epoch, b.best_epoch);
}

TEST(Train, MlpSeparatesStrongFeatures) {
    // Well-separated class means: a trained MLP should be nearly perfect on
    // fresh inductive nodes.
    GenModel model = GenModel::csbm(600, 0.0063, 0.0015, 5.0, 21);
    Graph g = sample_graph(model, 4);
    TrainConfig cfg;
    cfg.max_epochs = 300;
    cfg.patience = 50;
    cfg.seed = 2;
    TrainResult r = train(Arch::Mlp, g, cfg, 0.2, 64, 2);
    long hits = 0;
    const int trials = 500;
    for (int t = 0; t < trials; ++t) {
        Graph ext = extend_graph(g, 1, derive_seed(44, Stream::TestNode, static_cast<std::uint64_t>(t)));
        Matrix probs = predict(r.params, ext);
        int v = ext.n - 1;
        if (argmax_rows(probs)[static_cast<std::size_t>(v)] == ext.labels[static_cast<std::size_t>(v)]) ++hits;
    }
    EXPECT_GE(static_cast<double>(hits) / trials, 0.97);
}

TEST(ModelParams, JsonRoundTrip) {
    for (Arch arch : {Arch::Mlp, Arch::Sgc, Arch::Gcn}) {
        ModelParams p = init_params(arch, 5, 3, 7, 2, 13);
        ModelParams back = model_from_json(model_to_json(p));
        EXPECT_EQ(back.arch, p.arch);
        EXPECT_EQ(back.hops, p.hops);
        EXPECT_EQ(back.w1, p.w1);
        EXPECT_EQ(back.w2, p.w2);
        EXPECT_EQ(back.b1, p.b1);
        EXPECT_EQ(back.b2, p.b2);
    }
}

TEST(CombineWithLp, UniformModelAlphaZeroKeepsKnownRows) {
    Graph g = three_node_path();
    ModelParams p = init_params(Arch::Mlp, g.d, 2, 4, 2, 0);
    for (auto& w : p.w1.data()) w = 0.0;
    for (auto& w : p.w2.data()) w = 0.0;
    Matrix f = combine_with_lp(p, g, LPConfig{0.0, 10});
    EXPECT_DOUBLE_EQ(f(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(f(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(f(1, 0), 0.5);
    EXPECT_DOUBLE_EQ(f(2, 1), 0.5);
}

// Oracle: alpha = 1 is pure diffusion of the seeded matrix, directly
// iterable.
TEST(CombineWithLp, AlphaOneIsPureDiffusion) {
    Graph g = make_graph(4, 2, 2);
    g.labels = {0, 1, 0, 1};
    g.known = {1, 1, 0, 0};
    g.insert_edge(0, 2);
    g.insert_edge(2, 1);
    g.insert_edge(1, 3);
    g.insert_edge(3, 0);  // connected bipartite cycle
    ModelParams p = init_params(Arch::Mlp, 2, 2, 4, 2, 19);
    RngStream rng(6, Stream::NodeFeatures, 2);
    for (auto& x : g.features.data()) x = rng.normal();

    LPConfig cfg{1.0, 50};
    Matrix got = combine_with_lp(p, g, cfg);

    Matrix seed = predict(p, g);
    Matrix y(4, 2);
    y(0, 0) = 1.0;
    y(1, 1) = 1.0;
    y(2, 0) = seed(2, 0);
    y(2, 1) = seed(2, 1);
    y(3, 0) = seed(3, 0);
    y(3, 1) = seed(3, 1);
    Matrix s = dense_norm_adj(g, false);
    Matrix f = y;
    for (int t = 0; t < 50; ++t) f = matmul(s, f);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(got(i, j), f(i, j), 1e-9);
}
