#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "semrob/errors.hpp"
#include "semrob/graph.hpp"
#include "semrob/models.hpp"
#include "semrob/rng.hpp"

namespace semrob {

struct TrainConfig {
    double learning_rate = 0.01;
    double weight_decay = 1e-3;
    int max_epochs = 500;
    int patience = 50;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0)) throw param_error("train: learning_rate must be positive");
        if (weight_decay < 0.0) throw param_error("train: weight_decay must be nonnegative");
        if (max_epochs < 0) throw param_error("train: max_epochs must be nonnegative");
        if (patience < 1) throw param_error("train: patience must be positive");
        if (max_epochs > 0 && patience > max_epochs)
            throw param_error("train: patience must be <= max_epochs");
        if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
            throw param_error("train: moment coefficients must be in [0,1)");
    }
};

struct Gradients {
    Matrix w1, w2;
    std::vector<double> b1, b2;
};

// Mean cross-entropy of the model over `nodes`, against the graph's labels.
inline double ce_loss(const ModelParams& params, const Graph& g, const std::vector<int>& nodes) {
    if (nodes.empty()) throw param_error("ce_loss: empty node set");
    detail::ForwardCache c = detail::forward_logits(params, g);
    double loss = 0.0;
    std::size_t cc = c.logits.cols();
    for (int v : nodes) {
        const double* r = c.logits.row(static_cast<std::size_t>(v));
        double mx = r[0];
        for (std::size_t j = 1; j < cc; ++j) mx = std::max(mx, r[j]);
        double lse = 0.0;
        for (std::size_t j = 0; j < cc; ++j) lse += std::exp(r[j] - mx);
        lse = mx + std::log(lse);
        loss += lse - r[static_cast<std::size_t>(g.labels[static_cast<std::size_t>(v)])];
    }
    return loss / static_cast<double>(nodes.size());
}

// Mean cross-entropy over `nodes` plus its exact gradient w.r.t. every
// parameter, by an explicit backward pass. Weight decay is decoupled from
// this loss and applied only in the optimizer update.
inline std::pair<double, Gradients> loss_and_gradients(const ModelParams& params, const Graph& g,
                                                       const std::vector<int>& nodes) {
    if (nodes.empty()) throw param_error("loss_and_gradients: empty node set");
    detail::ForwardCache c = detail::forward_logits(params, g);
    std::size_t n = c.logits.rows();
    std::size_t cc = c.logits.cols();

    Matrix probs = c.logits;
    detail::softmax_rows_inplace(probs);

    double loss = 0.0;
    Matrix dlogits(n, cc);
    double inv = 1.0 / static_cast<double>(nodes.size());
    for (int v : nodes) {
        std::size_t i = static_cast<std::size_t>(v);
        int y = g.labels[i];
        loss += -std::log(std::max(probs(i, static_cast<std::size_t>(y)), 1e-300));
        for (std::size_t j = 0; j < cc; ++j)
            dlogits(i, j) = (probs(i, j) - (static_cast<int>(j) == y ? 1.0 : 0.0)) * inv;
    }
    loss *= inv;

    Gradients gr;
    switch (params.arch) {
        case Arch::Mlp: {
            gr.w2 = matmul_at_b(c.hidden, dlogits);
            gr.b2 = column_sums(dlogits);
            Matrix dh = matmul_a_bt(dlogits, params.w2);
            for (std::size_t i = 0; i < dh.rows(); ++i)
                for (std::size_t j = 0; j < dh.cols(); ++j)
                    if (c.pre1(i, j) <= 0.0) dh(i, j) = 0.0;
            gr.w1 = matmul_at_b(g.features, dh);
            gr.b1 = column_sums(dh);
            break;
        }
        case Arch::Sgc: {
            gr.w1 = matmul_at_b(c.propagated_input, dlogits);
            gr.b1 = column_sums(dlogits);
            break;
        }
        case Arch::Gcn: {
            gr.w2 = matmul_at_b(c.propagated_hidden, dlogits);
            gr.b2 = column_sums(dlogits);
            Matrix dq = matmul_a_bt(dlogits, params.w2);
            Matrix dh = detail::propagate_selfloops(g, dq);  // S_hat is symmetric
            for (std::size_t i = 0; i < dh.rows(); ++i)
                for (std::size_t j = 0; j < dh.cols(); ++j)
                    if (c.pre1(i, j) <= 0.0) dh(i, j) = 0.0;
            gr.w1 = matmul_at_b(c.propagated_input, dh);
            gr.b1 = column_sums(dh);
            break;
        }
    }
    return {loss, std::move(gr)};
}

struct TrainResult {
    ModelParams params;
    double best_val_loss = 0.0;
    int best_epoch = -1;
    std::vector<double> val_history;
};

namespace detail {

struct AdamState {
    std::vector<double> m, v;
    explicit AdamState(std::size_t size) : m(size, 0.0), v(size, 0.0) {}
};

// One AdamW step: moment-based adaptive update plus decoupled weight decay.
inline void adamw_update(std::vector<double>& p, const std::vector<double>& grad, AdamState& st,
                         const TrainConfig& cfg, int t, bool decay) {
    double bc1 = 1.0 - std::pow(cfg.beta1, t);
    double bc2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < p.size(); ++i) {
        st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * grad[i];
        st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        double step = (st.m[i] / bc1) / (std::sqrt(st.v[i] / bc2) + cfg.eps);
        p[i] -= cfg.learning_rate * step;
        if (decay) p[i] -= cfg.learning_rate * cfg.weight_decay * p[i];
    }
}

}  // namespace detail

// Trains on a random train/validation node split (seeded by cfg.seed).
// Validation nodes and their incident edges are removed from the training
// subgraph; validation loss is evaluated on the full graph. Early stopping
// keeps the parameters of the best validation epoch.
inline TrainResult train(Arch arch, const Graph& g, const TrainConfig& cfg, double val_split,
                         int hidden_dim = 64, int hops = 2) {
    cfg.validate();
    if (!(val_split >= 0.0 && val_split < 1.0)) throw param_error("train: val_split must be in [0,1)");

    std::vector<int> order(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i) order[static_cast<std::size_t>(i)] = i;
    RngStream rng(cfg.seed, Stream::TrainSplit, 0);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_index(i)]);
    std::size_t n_val = static_cast<std::size_t>(std::lround(val_split * static_cast<double>(g.n)));
    if (n_val >= order.size() || (cfg.max_epochs > 0 && n_val == 0))
        throw param_error("train: empty train or validation split");
    std::vector<int> train_nodes(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
    std::vector<int> val_nodes(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(train_nodes.begin(), train_nodes.end());
    std::sort(val_nodes.begin(), val_nodes.end());

    TrainResult res;
    res.params = init_params(arch, g.d, g.num_classes, hidden_dim, hops, cfg.seed);
    if (cfg.max_epochs == 0) return res;

    Graph sub = induced_subgraph(g, train_nodes);
    std::vector<int> sub_nodes(static_cast<std::size_t>(sub.n));
    for (int i = 0; i < sub.n; ++i) sub_nodes[static_cast<std::size_t>(i)] = i;

    ModelParams p = res.params;
    detail::AdamState sw1(p.w1.data().size()), sw2(p.w2.data().size());
    detail::AdamState sb1(p.b1.size()), sb2(p.b2.size());

    ModelParams best = p;
    double best_loss = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        auto [loss, grads] = loss_and_gradients(p, sub, sub_nodes);
        (void)loss;
        int t = epoch + 1;
        detail::adamw_update(p.w1.data(), grads.w1.data(), sw1, cfg, t, true);
        detail::adamw_update(p.b1, grads.b1, sb1, cfg, t, false);
        if (p.arch != Arch::Sgc) {
            detail::adamw_update(p.w2.data(), grads.w2.data(), sw2, cfg, t, true);
            detail::adamw_update(p.b2, grads.b2, sb2, cfg, t, false);
        }
        double val_loss = ce_loss(p, g, val_nodes);
        res.val_history.push_back(val_loss);
        if (val_loss < best_loss) {
            best_loss = val_loss;
            best = p;
            best_epoch = epoch;
        } else if (epoch - best_epoch >= cfg.patience) {
            break;
        }
    }
    res.params = std::move(best);
    res.best_val_loss = best_loss;
    res.best_epoch = best_epoch;
    return res;
}

}  // namespace semrob
