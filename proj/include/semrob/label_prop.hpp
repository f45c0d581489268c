#pragma once

#include <optional>

#include "semrob/errors.hpp"
#include "semrob/graph.hpp"
#include "semrob/models.hpp"

namespace semrob {

struct LPConfig {
    double alpha = 0.7;
    int iterations = 50;

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw param_error("lp: alpha must be in [0,1]");
        if (iterations < 1) throw param_error("lp: iterations must be positive");
    }
};

// Label spreading: iterate F^t = alpha * S F^{t-1} + (1 - alpha) * Y from
// F^0 = Y, with S = D^{-1/2} A D^{-1/2} (no self-loops; isolated nodes get
// zero rows). Y holds one-hot rows for known labels; rows of unknown nodes
// are the soft seed when given, zeros otherwise.
inline Matrix label_propagation(const Graph& g, const std::optional<Matrix>& soft_seed,
                                const LPConfig& cfg) {
    cfg.validate();
    std::size_t c = static_cast<std::size_t>(g.num_classes);
    if (soft_seed && (soft_seed->rows() != static_cast<std::size_t>(g.n) || soft_seed->cols() != c))
        throw param_error("label_propagation: soft_seed must be n x C");
    Matrix y(static_cast<std::size_t>(g.n), c);
    for (int v = 0; v < g.n; ++v) {
        if (g.known[static_cast<std::size_t>(v)]) {
            y(static_cast<std::size_t>(v), static_cast<std::size_t>(g.labels[static_cast<std::size_t>(v)])) = 1.0;
        } else if (soft_seed) {
            for (std::size_t j = 0; j < c; ++j)
                y(static_cast<std::size_t>(v), j) = (*soft_seed)(static_cast<std::size_t>(v), j);
        }
    }
    Matrix f = y;
    for (int t = 0; t < cfg.iterations; ++t) {
        Matrix sf = detail::propagate_plain(g, f);
        for (std::size_t i = 0; i < sf.rows(); ++i) {
            double* srow = sf.row(i);
            const double* yrow = y.row(i);
            for (std::size_t j = 0; j < c; ++j)
                srow[j] = cfg.alpha * srow[j] + (1.0 - cfg.alpha) * yrow[j];
        }
        f = std::move(sf);
    }
    return f;
}

// Model+LP: the model's soft predictions seed the unknown rows; known rows
// stay one-hot.
inline Matrix combine_with_lp(const ModelParams& params, const Graph& g, const LPConfig& cfg) {
    return label_propagation(g, predict(params, g), cfg);
}

}  // namespace semrob
