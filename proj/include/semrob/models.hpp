#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "semrob/errors.hpp"
#include "semrob/graph.hpp"
#include "semrob/matrix.hpp"
#include "semrob/rng.hpp"

namespace semrob {

enum class Arch { Mlp, Sgc, Gcn };

inline std::string arch_name(Arch a) {
    switch (a) {
        case Arch::Mlp: return "mlp";
        case Arch::Sgc: return "sgc";
        case Arch::Gcn: return "gcn";
    }
    return "?";
}

inline Arch arch_from_name(const std::string& s) {
    if (s == "mlp") return Arch::Mlp;
    if (s == "sgc") return Arch::Sgc;
    if (s == "gcn") return Arch::Gcn;
    throw param_error("unknown architecture: " + s);
}

// Weights of one of the small classifiers. MLP and GCN carry two layers
// (w1: d x h, w2: h x C); SGC is a single linear map (w1: d x C) applied
// after `hops` propagation steps.
struct ModelParams {
    Arch arch = Arch::Mlp;
    int input_dim = 0;
    int hidden_dim = 0;
    int num_classes = 0;
    int hops = 2;                      // SGC only
    std::string activation = "relu";
    Matrix w1, w2;
    std::vector<double> b1, b2;

    void validate() const {
        if (activation != "relu") throw param_error("unsupported activation: " + activation);
        auto finite = [](const std::vector<double>& v) {
            for (double x : v)
                if (!std::isfinite(x)) return false;
            return true;
        };
        if (!w1.all_finite() || !w2.all_finite() || !finite(b1) || !finite(b2))
            throw numeric_error("model parameters contain non-finite values");
        std::size_t d = static_cast<std::size_t>(input_dim);
        std::size_t c = static_cast<std::size_t>(num_classes);
        std::size_t h = static_cast<std::size_t>(hidden_dim);
        if (arch == Arch::Sgc) {
            if (w1.rows() != d || w1.cols() != c || b1.size() != c)
                throw param_error("sgc: inconsistent shapes");
            if (hops < 0) throw param_error("sgc: hops must be >= 0");
        } else {
            if (w1.rows() != d || w1.cols() != h || b1.size() != h)
                throw param_error("layer 1: inconsistent shapes");
            if (w2.rows() != h || w2.cols() != c || b2.size() != c)
                throw param_error("layer 2: inconsistent shapes");
        }
    }
};

namespace detail {

// S_hat * M with S_hat the symmetrically normalized adjacency with added
// self-loops. Row order and per-row neighbor order are fixed, so entries
// outside a changed receptive field are reproduced bit-for-bit.
inline Matrix propagate_selfloops(const Graph& g, const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (int v = 0; v < g.n; ++v) {
        double dv = static_cast<double>(g.degree(v)) + 1.0;
        double* orow = out.row(static_cast<std::size_t>(v));
        const double* self = m.row(static_cast<std::size_t>(v));
        for (std::size_t j = 0; j < m.cols(); ++j) orow[j] = self[j] / dv;
        for (int u : g.neighbors(v)) {
            double du = static_cast<double>(g.degree(u)) + 1.0;
            double w = 1.0 / std::sqrt(dv * du);
            const double* urow = m.row(static_cast<std::size_t>(u));
            for (std::size_t j = 0; j < m.cols(); ++j) orow[j] += w * urow[j];
        }
    }
    return out;
}

// S * M with S = D^{-1/2} A D^{-1/2}; isolated nodes get zero rows.
inline Matrix propagate_plain(const Graph& g, const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (int v = 0; v < g.n; ++v) {
        double dv = static_cast<double>(g.degree(v));
        if (dv == 0.0) continue;
        double* orow = out.row(static_cast<std::size_t>(v));
        for (int u : g.neighbors(v)) {
            double du = static_cast<double>(g.degree(u));
            double w = 1.0 / std::sqrt(dv * du);
            const double* urow = m.row(static_cast<std::size_t>(u));
            for (std::size_t j = 0; j < m.cols(); ++j) orow[j] += w * urow[j];
        }
    }
    return out;
}

inline void add_bias_rows(Matrix& m, const std::vector<double>& b) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double* r = m.row(i);
        for (std::size_t j = 0; j < m.cols(); ++j) r[j] += b[j];
    }
}

inline void relu_inplace(Matrix& m) {
    for (double& x : m.data())
        if (x < 0.0) x = 0.0;
}

inline void softmax_rows_inplace(Matrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double* r = m.row(i);
        double mx = r[0];
        for (std::size_t j = 1; j < m.cols(); ++j) mx = std::max(mx, r[j]);
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) {
            r[j] = std::exp(r[j] - mx);
            s += r[j];
        }
        for (std::size_t j = 0; j < m.cols(); ++j) r[j] /= s;
    }
}

// Forward pass up to the logits, keeping the intermediates the backward pass
// needs.
struct ForwardCache {
    Matrix propagated_input;  // gcn: S_hat X; sgc: S_hat^K X; mlp: unused
    Matrix pre1;              // first-layer pre-activation (mlp/gcn)
    Matrix hidden;            // relu(pre1)
    Matrix propagated_hidden; // gcn: S_hat hidden
    Matrix logits;
};

inline ForwardCache forward_logits(const ModelParams& p, const Graph& g) {
    ForwardCache c;
    switch (p.arch) {
        case Arch::Mlp: {
            c.pre1 = matmul(g.features, p.w1);
            add_bias_rows(c.pre1, p.b1);
            c.hidden = c.pre1;
            relu_inplace(c.hidden);
            c.logits = matmul(c.hidden, p.w2);
            add_bias_rows(c.logits, p.b2);
            break;
        }
        case Arch::Sgc: {
            c.propagated_input = g.features;
            for (int k = 0; k < p.hops; ++k) c.propagated_input = propagate_selfloops(g, c.propagated_input);
            c.logits = matmul(c.propagated_input, p.w1);
            add_bias_rows(c.logits, p.b1);
            break;
        }
        case Arch::Gcn: {
            c.propagated_input = propagate_selfloops(g, g.features);
            c.pre1 = matmul(c.propagated_input, p.w1);
            add_bias_rows(c.pre1, p.b1);
            c.hidden = c.pre1;
            relu_inplace(c.hidden);
            c.propagated_hidden = propagate_selfloops(g, c.hidden);
            c.logits = matmul(c.propagated_hidden, p.w2);
            add_bias_rows(c.logits, p.b2);
            break;
        }
    }
    return c;
}

}  // namespace detail

// Per-node class probabilities (n x C, rows sum to 1).
inline Matrix predict(const ModelParams& params, const Graph& g) {
    params.validate();
    if (params.input_dim != g.d) throw param_error("predict: feature dimension mismatch");
    detail::ForwardCache c = detail::forward_logits(params, g);
    detail::softmax_rows_inplace(c.logits);
    return c.logits;
}

inline std::vector<double> predict_node(const ModelParams& params, const Graph& g, int v) {
    Matrix probs = predict(params, g);
    const double* r = probs.row(static_cast<std::size_t>(v));
    return std::vector<double>(r, r + probs.cols());
}

// Glorot-uniform weights, zero biases.
inline ModelParams init_params(Arch arch, int input_dim, int num_classes, int hidden_dim,
                               int hops, std::uint64_t seed) {
    ModelParams p;
    p.arch = arch;
    p.input_dim = input_dim;
    p.num_classes = num_classes;
    p.hidden_dim = arch == Arch::Sgc ? 0 : hidden_dim;
    p.hops = hops;
    auto glorot = [&](std::size_t rows, std::size_t cols, std::uint64_t layer) {
        RngStream rng(seed, Stream::WeightInit, layer);
        double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
        Matrix w(rows, cols);
        for (double& x : w.data()) x = (2.0 * rng.next_double() - 1.0) * limit;
        return w;
    };
    std::size_t d = static_cast<std::size_t>(input_dim);
    std::size_t c = static_cast<std::size_t>(num_classes);
    if (arch == Arch::Sgc) {
        p.w1 = glorot(d, c, 0);
        p.b1.assign(c, 0.0);
    } else {
        std::size_t h = static_cast<std::size_t>(hidden_dim);
        p.w1 = glorot(d, h, 0);
        p.b1.assign(h, 0.0);
        p.w2 = glorot(h, c, 1);
        p.b2.assign(c, 0.0);
    }
    p.validate();
    return p;
}

inline nlohmann::json model_to_json(const ModelParams& p) {
    nlohmann::json j;
    j["architecture"] = arch_name(p.arch);
    j["input_dim"] = p.input_dim;
    j["hidden_dim"] = p.hidden_dim;
    j["num_classes"] = p.num_classes;
    j["hops"] = p.hops;
    j["activation"] = p.activation;
    j["w1"] = p.w1.data();
    j["b1"] = p.b1;
    j["w2"] = p.w2.data();
    j["b2"] = p.b2;
    return j;
}

inline ModelParams model_from_json(const nlohmann::json& j) {
    ModelParams p;
    p.arch = arch_from_name(j.at("architecture").get<std::string>());
    p.input_dim = j.at("input_dim").get<int>();
    p.hidden_dim = j.at("hidden_dim").get<int>();
    p.num_classes = j.at("num_classes").get<int>();
    p.hops = j.at("hops").get<int>();
    p.activation = j.at("activation").get<std::string>();
    std::size_t d = static_cast<std::size_t>(p.input_dim);
    std::size_t c = static_cast<std::size_t>(p.num_classes);
    std::size_t h = static_cast<std::size_t>(p.hidden_dim);
    if (p.arch == Arch::Sgc) {
        p.w1 = Matrix::from_data(d, c, j.at("w1").get<std::vector<double>>());
    } else {
        p.w1 = Matrix::from_data(d, h, j.at("w1").get<std::vector<double>>());
        p.w2 = Matrix::from_data(h, c, j.at("w2").get<std::vector<double>>());
    }
    p.b1 = j.at("b1").get<std::vector<double>>();
    p.b2 = j.at("b2").get<std::vector<double>>();
    p.validate();
    return p;
}

}  // namespace semrob
