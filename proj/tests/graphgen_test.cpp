#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "semrob/graph_io.hpp"
#include "semrob/graphgen.hpp"
#include "semrob/stats.hpp"

using namespace semrob;

namespace {

GenModel paper_csbm(double k = 1.0) { return GenModel::csbm(1000, 0.0063, 0.0015, k, 21); }

GenModel paper_cba(double k = 1.0) {
    Matrix omega(2, 2);
    omega(0, 0) = omega(1, 1) = 3.16;
    omega(0, 1) = omega(1, 0) = 0.74;
    return GenModel::cba(1000, 2, omega, k, 21);
}

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream f(path);
    f << content;
    return path;
}

}  // namespace

TEST(GenModel, FeatureDimHeuristic) {
    EXPECT_EQ(feature_dim_heuristic(1000), 21);
}

TEST(GenModel, MeanSeparationIsK) {
    auto mu = GenModel::mu_for_separation(1.5, 2.0, 21);
    double dist_sq = 0.0;
    for (double m : mu) dist_sq += (2.0 * m) * (2.0 * m);
    EXPECT_NEAR(std::sqrt(dist_sq), 1.5 * 2.0, 1e-12);
}

TEST(GenModel, RejectsBadParameters) {
    EXPECT_THROW(GenModel::csbm(0, 0.1, 0.05, 1.0, 4), param_error);
    EXPECT_THROW(GenModel::csbm(10, 1.5, 0.05, 1.0, 4), param_error);
    EXPECT_THROW(GenModel::csbm(10, 0.05, 0.1, 1.0, 4), param_error);  // q > p
    Matrix bad(2, 2);
    bad(0, 0) = bad(1, 1) = 1.0;
    bad(0, 1) = bad(1, 0) = 2.0;  // heterophilic
    EXPECT_THROW(GenModel::cba(10, 1, bad, 1.0, 4), param_error);
}

TEST(SampleGraph, ZeroProbabilitiesGiveEmptyEdgeSet) {
    Graph g = sample_graph(GenModel::csbm(200, 0.0, 0.0, 1.0, 4), 3);
    EXPECT_EQ(g.edge_count(), 0u);
}

TEST(SampleGraph, DeterministicForFixedSeed) {
    Graph a = sample_graph(paper_csbm(), 99);
    Graph b = sample_graph(paper_csbm(), 99);
    EXPECT_EQ(a.features, b.features);
    EXPECT_EQ(a.labels, b.labels);
    EXPECT_EQ(a.edge_list(), b.edge_list());
    Graph c = sample_graph(paper_csbm(), 100);
    EXPECT_NE(a.edge_list(), c.edge_list());
}

TEST(SampleGraph, CsbmSameClassFrequencyMatchesP) {
    // Pooled binomial check: the empirical same-class edge frequency must sit
    // within 4 standard errors of p.
    const GenModel model = paper_csbm();
    long same_pairs = 0, same_edges = 0;
    for (int seed = 0; seed < 10; ++seed) {
        Graph g = sample_graph(model, static_cast<std::uint64_t>(seed));
        std::vector<long> class_count(2, 0);
        for (int y : g.labels) ++class_count[static_cast<std::size_t>(y)];
        same_pairs += class_count[0] * (class_count[0] - 1) / 2 + class_count[1] * (class_count[1] - 1) / 2;
        for (auto [a, b] : g.edge_list())
            if (g.labels[static_cast<std::size_t>(a)] == g.labels[static_cast<std::size_t>(b)]) ++same_edges;
    }
    double freq = static_cast<double>(same_edges) / static_cast<double>(same_pairs);
    double se = std::sqrt(model.p * (1.0 - model.p) / static_cast<double>(same_pairs));
    EXPECT_NEAR(freq, model.p, 4.0 * se);
}

TEST(SampleGraph, CsbmMeanDegreeMatchesReference) {
    std::vector<double> means;
    for (int seed = 0; seed < 10; ++seed) {
        Graph g = sample_graph(paper_csbm(), static_cast<std::uint64_t>(seed) + 50);
        means.push_back(2.0 * static_cast<double>(g.edge_count()) / static_cast<double>(g.n));
    }
    EXPECT_NEAR(mean(means), 3.93, 0.1);
}

TEST(SampleGraph, CbaMeanDegreeMatchesReference) {
    std::vector<double> means;
    for (int seed = 0; seed < 10; ++seed) {
        Graph g = sample_graph(paper_cba(), static_cast<std::uint64_t>(seed) + 50);
        means.push_back(2.0 * static_cast<double>(g.edge_count()) / static_cast<double>(g.n));
    }
    EXPECT_NEAR(mean(means), 3.94, 0.15);
}

TEST(SampleGraph, CbaNeighborCountsBounded) {
    Graph g = sample_graph(paper_cba(), 7);
    std::size_t max_edges = static_cast<std::size_t>(g.gen->m) * static_cast<std::size_t>(g.n - 1);
    EXPECT_LE(g.edge_count(), max_edges);
    // Every node after the first must have drawn between 1 and m distinct
    // predecessors; count edges to smaller indices.
    for (int v = 1; v < g.n; ++v) {
        int preds = 0;
        for (int u : g.neighbors(v))
            if (u < v) ++preds;
        EXPECT_GE(preds, 1) << "node " << v;
        EXPECT_LE(preds, g.gen->m) << "node " << v;
    }
}

TEST(ExtendGraph, PreservesExistingEntries) {
    Graph g = sample_graph(paper_csbm(), 11);
    Graph ext = extend_graph(g, 3, 1234);
    ASSERT_EQ(ext.n, g.n + 3);
    EXPECT_EQ(std::vector<int>(ext.labels.begin(), ext.labels.begin() + g.n), g.labels);
    for (int v = 0; v < g.n; ++v)
        for (int j = 0; j < g.d; ++j)
            EXPECT_EQ(ext.features(v, j), g.features(v, j));
    for (auto [a, b] : g.edge_list()) EXPECT_TRUE(ext.has_edge(a, b));
    for (int v = g.n; v < ext.n; ++v) EXPECT_FALSE(ext.known[static_cast<std::size_t>(v)]);
}

TEST(ExtendGraph, DeterministicForFixedSeed) {
    Graph g = sample_graph(paper_csbm(), 11);
    Graph a = extend_graph(g, 2, 77);
    Graph b = extend_graph(g, 2, 77);
    EXPECT_EQ(a.features, b.features);
    EXPECT_EQ(a.edge_list(), b.edge_list());
    EXPECT_EQ(a.labels, b.labels);
}

TEST(ExtendGraph, RequiresGenerativeModel) {
    Graph g = make_graph(5, 2, 2);
    EXPECT_THROW(extend_graph(g, 1, 0), unsupported_error);
}

// Oracle: the expected degree of a new node is sum_j P(edge to j), computable
// directly from the labels. A Monte-Carlo mean over 1000 extensions must
// match it.
TEST(ExtendGraph, NewNodeDegreeMatchesAnalyticExpectation) {
    Graph g = sample_graph(paper_csbm(), 21);
    const GenModel& m = *g.gen;
    std::vector<long> class_count(2, 0);
    for (int y : g.labels) ++class_count[static_cast<std::size_t>(y)];
    // The new node's label is Bernoulli(1/2), so average the two conditionals.
    double expected = 0.0;
    for (int y = 0; y < 2; ++y)
        expected += 0.5 * (static_cast<double>(class_count[static_cast<std::size_t>(y)]) * m.p +
                           static_cast<double>(class_count[static_cast<std::size_t>(1 - y)]) * m.q);
    EXPECT_NEAR(expected, 3.9, 0.15);

    double total_degree = 0.0;
    for (int t = 0; t < 1000; ++t) {
        Graph ext = extend_graph(g, 1, derive_seed(555, Stream::TestNode, static_cast<std::uint64_t>(t)));
        total_degree += ext.degree(ext.n - 1);
    }
    EXPECT_NEAR(total_degree / 1000.0, expected, 0.2);
}

TEST(ExtendGraph, EqualProbabilitiesAreLabelIndependent) {
    GenModel m = GenModel::csbm(400, 0.01, 0.01, 1.0, 4);
    Graph g = sample_graph(m, 5);
    std::vector<long> class_count(2, 0);
    for (int y : g.labels) ++class_count[static_cast<std::size_t>(y)];
    long same = 0, diff = 0;
    for (int t = 0; t < 2000; ++t) {
        Graph ext = extend_graph(g, 1, derive_seed(90, Stream::TestNode, static_cast<std::uint64_t>(t)));
        int v = ext.n - 1;
        int yv = ext.labels[static_cast<std::size_t>(v)];
        for (int u : ext.neighbors(v))
            (ext.labels[static_cast<std::size_t>(u)] == yv ? same : diff) += 1;
    }
    // With p = q the same/different split must follow the class balance.
    double expected_ratio = 1.0;  // labels are Ber(1/2), class sizes near equal
    double ratio = static_cast<double>(same) / static_cast<double>(diff);
    EXPECT_NEAR(ratio, expected_ratio, 0.25);
}

TEST(GraphIo, RoundTripIsIdentity) {
    Graph g = sample_graph(GenModel::csbm(60, 0.1, 0.02, 1.0, 5), 3);
    json j = graph_to_json(g);
    Graph back = graph_from_json(j);
    EXPECT_EQ(back.n, g.n);
    EXPECT_EQ(back.features, g.features);
    EXPECT_EQ(back.labels, g.labels);
    EXPECT_EQ(back.known, g.known);
    EXPECT_EQ(back.edge_list(), g.edge_list());
    ASSERT_TRUE(back.gen.has_value());
    EXPECT_EQ(back.gen->p, g.gen->p);
    EXPECT_EQ(back.gen->mu, g.gen->mu);
    // Second round trip is byte-stable.
    EXPECT_EQ(graph_to_json(back).dump(), j.dump());
}

TEST(Ingest, PathGraph) {
    auto edges = write_temp("semrob_edges.csv", "0,1\n1,2\n");
    auto feats = write_temp("semrob_feats.csv", "1.0,0.0\n0.5,0.5\n0.0,1.0\n");
    auto labels = write_temp("semrob_labels.csv", "0\n1\n1\n");
    Graph g = ingest_real_graph(edges.string(), feats.string(), labels.string());
    EXPECT_EQ(g.n, 3);
    EXPECT_EQ(g.d, 2);
    EXPECT_EQ(g.edge_list(), (std::vector<std::pair<int, int>>{{0, 1}, {1, 2}}));
    EXPECT_FALSE(g.gen.has_value());
    for (char k : g.known) EXPECT_TRUE(k);
}

TEST(Ingest, SelfLoopRejectedWithLineNumber) {
    auto edges = write_temp("semrob_edges_loop.csv", "0,1\n0,0\n");
    auto feats = write_temp("semrob_feats2.csv", "1\n2\n");
    auto labels = write_temp("semrob_labels2.csv", "0\n1\n");
    try {
        ingest_real_graph(edges.string(), feats.string(), labels.string());
        FAIL() << "expected format_error";
    } catch (const format_error& e) {
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
    }
}

TEST(Ingest, ReversedDuplicateCollapses) {
    auto edges = write_temp("semrob_edges_dup.csv", "0,1\n1,0\n");
    auto feats = write_temp("semrob_feats3.csv", "1\n2\n");
    auto labels = write_temp("semrob_labels3.csv", "0\n1\n");
    Graph g = ingest_real_graph(edges.string(), feats.string(), labels.string());
    EXPECT_EQ(g.edge_count(), 1u);
}

TEST(Ingest, ErrorsCarryContext) {
    auto edges = write_temp("semrob_edges_ok.csv", "0,1\n");
    auto feats = write_temp("semrob_feats4.csv", "1\n2\n");
    auto labels_short = write_temp("semrob_labels4.csv", "0\n");
    EXPECT_THROW(ingest_real_graph(edges.string(), feats.string(), labels_short.string()), format_error);

    auto bad_feats = write_temp("semrob_feats5.csv", "1\nxyz\n");
    auto labels = write_temp("semrob_labels5.csv", "0\n1\n");
    try {
        ingest_real_graph(edges.string(), bad_feats.string(), labels.string());
        FAIL() << "expected format_error";
    } catch (const format_error& e) {
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
    }

    auto edges_oob = write_temp("semrob_edges_oob.csv", "0,5\n");
    EXPECT_THROW(ingest_real_graph(edges_oob.string(), feats.string(), labels.string()), format_error);

    auto mask_bad = write_temp("semrob_mask.csv", "1\n2\n");
    EXPECT_THROW(ingest_real_graph(edges.string(), feats.string(), labels.string(), mask_bad.string()),
                 format_error);
}
