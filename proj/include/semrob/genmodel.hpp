#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "semrob/errors.hpp"
#include "semrob/matrix.hpp"

namespace semrob {

enum class ModelVariant { Csbm, Cba };

// Parameters of the synthetic graph generators. A CSBM draws each node pair
// independently with probability p (same class) or q (different class); a CBA
// grows the graph by preferential attachment weighted with class affinities.
// Node features are a Gaussian mixture: row i ~ N(mean(y_i), sigma^2 * I),
// where sigma is the standard deviation (covariance sigma^2 * I).
struct GenModel {
    ModelVariant variant = ModelVariant::Csbm;
    int n = 0;
    double p = 0.0;             // CSBM same-class edge probability
    double q = 0.0;             // CSBM different-class edge probability
    int m = 0;                  // CBA edges per new node
    Matrix omega;               // CBA CxC affinity matrix
    std::vector<double> mu;     // length d; binary class means are -mu / +mu
    Matrix class_means;         // optional CxD override for C > 2 scoring
    double sigma = 1.0;
    int num_classes = 2;
    int d = 0;

    void validate() const {
        if (n < 1) throw param_error("gen model: n must be >= 1");
        if (d < 1) throw param_error("gen model: d must be >= 1");
        if (num_classes < 2) throw param_error("gen model: num_classes must be >= 2");
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw param_error("gen model: sigma must be positive");
        if (class_means.empty()) {
            if (static_cast<int>(mu.size()) != d)
                throw param_error("gen model: mu length must equal d");
            if (num_classes != 2)
                throw param_error("gen model: class_means required for more than 2 classes");
        } else if (class_means.rows() != static_cast<std::size_t>(num_classes) ||
                   class_means.cols() != static_cast<std::size_t>(d)) {
            throw param_error("gen model: class_means must be C x d");
        }
        if (variant == ModelVariant::Csbm) {
            if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0))
                throw param_error("csbm: p and q must lie in [0,1]");
            if (q > p) throw param_error("csbm: homophily requires q <= p");
        } else {
            if (m < 1) throw param_error("cba: m must be a positive integer");
            std::size_t c = static_cast<std::size_t>(num_classes);
            if (omega.rows() != c || omega.cols() != c)
                throw param_error("cba: omega must be C x C");
            for (std::size_t i = 0; i < c; ++i) {
                if (!(omega(i, i) > 0.0)) throw param_error("cba: same-class affinity must be > 0");
                for (std::size_t j = 0; j < c; ++j) {
                    if (omega(i, j) < 0.0) throw param_error("cba: affinities must be nonnegative");
                    if (std::abs(omega(i, j) - omega(j, i)) > 0.0)
                        throw param_error("cba: omega must be symmetric");
                    if (i != j && !(omega(i, i) > omega(i, j)))
                        throw param_error("cba: homophily requires same-class affinity > different-class");
                }
            }
        }
    }

    // Materialized C x d class-mean matrix.
    Matrix means() const {
        if (!class_means.empty()) return class_means;
        Matrix mm(2, mu.size());
        for (std::size_t j = 0; j < mu.size(); ++j) {
            mm(0, j) = -mu[j];
            mm(1, j) = mu[j];
        }
        return mm;
    }

    // mu with every element K*sigma/(2*sqrt(d)), so the distance between the
    // two class means is exactly K*sigma.
    static std::vector<double> mu_for_separation(double k, double sigma, int d) {
        if (d < 1) throw param_error("mu_for_separation: d must be >= 1");
        return std::vector<double>(static_cast<std::size_t>(d),
                                   k * sigma / (2.0 * std::sqrt(static_cast<double>(d))));
    }

    static GenModel csbm(int n, double p, double q, double k, int d, double sigma = 1.0) {
        GenModel g;
        g.variant = ModelVariant::Csbm;
        g.n = n;
        g.p = p;
        g.q = q;
        g.d = d;
        g.sigma = sigma;
        g.mu = mu_for_separation(k, sigma, d);
        g.validate();
        return g;
    }

    static GenModel cba(int n, int m, Matrix omega, double k, int d, double sigma = 1.0) {
        GenModel g;
        g.variant = ModelVariant::Cba;
        g.n = n;
        g.m = m;
        g.omega = std::move(omega);
        g.d = d;
        g.sigma = sigma;
        g.mu = mu_for_separation(k, sigma, d);
        g.validate();
        return g;
    }
};

// d = n/ln^2(n), rounded half to even (n = 1000 gives 21).
inline int feature_dim_heuristic(int n) {
    if (n < 2) throw param_error("feature_dim_heuristic: n must be >= 2");
    double l = std::log(static_cast<double>(n));
    double v = static_cast<double>(n) / (l * l);
    double r = std::nearbyint(v);  // default FE_TONEAREST rounds half to even
    return static_cast<int>(r);
}

}  // namespace semrob
