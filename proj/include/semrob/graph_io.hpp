#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "semrob/errors.hpp"
#include "semrob/graph.hpp"

namespace semrob {

using json = nlohmann::json;

inline json genmodel_to_json(const GenModel& m) {
    json j;
    j["variant"] = m.variant == ModelVariant::Csbm ? "csbm" : "cba";
    j["n"] = m.n;
    j["sigma"] = m.sigma;
    j["num_classes"] = m.num_classes;
    j["d"] = m.d;
    j["mu"] = m.mu;
    if (m.variant == ModelVariant::Csbm) {
        j["p"] = m.p;
        j["q"] = m.q;
    } else {
        j["m"] = m.m;
        j["omega"] = m.omega.data();
    }
    if (!m.class_means.empty()) j["class_means"] = m.class_means.data();
    return j;
}

inline GenModel genmodel_from_json(const json& j) {
    GenModel m;
    std::string v = j.at("variant").get<std::string>();
    if (v == "csbm")
        m.variant = ModelVariant::Csbm;
    else if (v == "cba")
        m.variant = ModelVariant::Cba;
    else
        throw format_error("unknown gen model variant: " + v);
    m.n = j.at("n").get<int>();
    m.sigma = j.at("sigma").get<double>();
    m.num_classes = j.at("num_classes").get<int>();
    m.d = j.at("d").get<int>();
    m.mu = j.at("mu").get<std::vector<double>>();
    if (m.variant == ModelVariant::Csbm) {
        m.p = j.at("p").get<double>();
        m.q = j.at("q").get<double>();
    } else {
        m.m = j.at("m").get<int>();
        std::size_t c = static_cast<std::size_t>(m.num_classes);
        m.omega = Matrix::from_data(c, c, j.at("omega").get<std::vector<double>>());
    }
    if (j.contains("class_means")) {
        m.class_means = Matrix::from_data(static_cast<std::size_t>(m.num_classes),
                                          static_cast<std::size_t>(m.d),
                                          j.at("class_means").get<std::vector<double>>());
    }
    m.validate();
    return m;
}

inline json graph_to_json(const Graph& g) {
    json j;
    j["n"] = g.n;
    j["d"] = g.d;
    j["num_classes"] = g.num_classes;
    j["features"] = g.features.data();  // row-major
    json edges = json::array();
    for (auto [a, b] : g.edge_list()) edges.push_back(json::array({a, b}));
    j["edges"] = std::move(edges);
    j["labels"] = g.labels;
    json mask = json::array();
    for (char k : g.known) mask.push_back(k != 0);
    j["known_mask"] = std::move(mask);
    if (g.gen) j["gen"] = genmodel_to_json(*g.gen);
    return j;
}

inline Graph graph_from_json(const json& j) {
    int n = j.at("n").get<int>();
    int d = j.at("d").get<int>();
    int c = j.at("num_classes").get<int>();
    Graph g = make_graph(n, d, c);
    g.features = Matrix::from_data(static_cast<std::size_t>(n), static_cast<std::size_t>(d),
                                   j.at("features").get<std::vector<double>>());
    g.labels = j.at("labels").get<std::vector<int>>();
    if (g.labels.size() != static_cast<std::size_t>(n)) throw format_error("labels length mismatch");
    for (int y : g.labels)
        if (y < 0 || y >= c) throw format_error("label value out of range");
    auto mask = j.at("known_mask").get<std::vector<bool>>();
    if (mask.size() != static_cast<std::size_t>(n)) throw format_error("known_mask length mismatch");
    for (std::size_t i = 0; i < mask.size(); ++i) g.known[i] = mask[i] ? 1 : 0;
    for (const auto& e : j.at("edges")) {
        int a = e.at(0).get<int>();
        int b = e.at(1).get<int>();
        g.insert_edge(a, b);
    }
    if (j.contains("gen")) g.gen = genmodel_from_json(j.at("gen"));
    return g;
}

inline void save_graph(const Graph& g, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open for writing: " + path);
    f << graph_to_json(g).dump(2) << "\n";
    if (!f) throw io_error("write failed: " + path);
}

inline Graph load_graph(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open for reading: " + path);
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw format_error(std::string("invalid graph json: ") + e.what());
    }
    return graph_from_json(j);
}

}  // namespace semrob
