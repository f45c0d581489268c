#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "semrob/errors.hpp"

namespace semrob {

inline double mean(const std::vector<double>& v) {
    if (v.empty()) throw param_error("mean of empty vector");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1); zero for a single value.
inline double stddev(const std::vector<double>& v) {
    if (v.empty()) throw param_error("stddev of empty vector");
    if (v.size() == 1) return 0.0;
    double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double standard_error(const std::vector<double>& v) {
    return stddev(v) / std::sqrt(static_cast<double>(v.size()));
}

// Linear-interpolation percentile of a sorted vector, p in [0, 1].
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw param_error("percentile of empty vector");
    if (sorted.size() == 1) return sorted[0];
    double pos = p * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace semrob
