#pragma once

// Straight-from-definition reference implementations. They share no code
// with the library beyond the Dataset/Predictor types and the counter-based
// normal (so Monte-Carlo metrics see identical draws).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "axebench/core.hpp"
#include "axebench/support.hpp"

namespace oracle {

inline int sgn(double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

// Full ordering by repeated selection of the largest remaining |e|, lowest index first.
inline std::vector<std::size_t> ordering(std::span<const double> e) {
    std::vector<std::size_t> out;
    std::vector<bool> used(e.size(), false);
    for (std::size_t step = 0; step < e.size(); ++step) {
        std::size_t best = e.size();
        for (std::size_t j = 0; j < e.size(); ++j) {
            if (used[j]) continue;
            if (best == e.size() || std::abs(e[j]) > std::abs(e[best])) best = j;
        }
        used[best] = true;
        out.push_back(best);
    }
    return out;
}

inline std::vector<std::size_t> top_n(std::span<const double> e, std::size_t n) {
    auto o = ordering(e);
    o.resize(n);
    return o;
}

inline std::vector<std::size_t> bottom_n(std::span<const double> e, std::size_t n) {
    const auto o = ordering(e);
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n; ++j) out.push_back(o[o.size() - 1 - j]);
    return out;
}

inline bool contains(const std::vector<std::size_t>& v, std::size_t x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

inline double fa(std::span<const double> e, std::span<const double> s, std::size_t n) {
    if (n == 0) return 0.0;
    const auto a = top_n(e, n), b = top_n(s, n);
    double c = 0;
    for (auto f : a) c += contains(b, f);
    return c / static_cast<double>(n);
}

inline double ra(std::span<const double> e, std::span<const double> s, std::size_t n) {
    if (n == 0) return 0.0;
    const auto a = top_n(e, n), b = top_n(s, n);
    double c = 0;
    for (std::size_t p = 0; p < n; ++p) c += a[p] == b[p];
    return c / static_cast<double>(n);
}

inline double sa(std::span<const double> e, std::span<const double> s, std::size_t n) {
    if (n == 0) return 0.0;
    const auto a = top_n(e, n), b = top_n(s, n);
    double c = 0;
    for (auto f : a) c += contains(b, f) && sgn(e[f]) == sgn(s[f]);
    return c / static_cast<double>(n);
}

inline double sra(std::span<const double> e, std::span<const double> s, std::size_t n) {
    if (n == 0) return 0.0;
    const auto a = top_n(e, n), b = top_n(s, n);
    double c = 0;
    for (std::size_t p = 0; p < n; ++p) c += a[p] == b[p] && sgn(e[a[p]]) == sgn(s[a[p]]);
    return c / static_cast<double>(n);
}

// rank_i = 1 + #{j : |e_j| > |e_i|} + (#{j != i : |e_j| == |e_i|}) / 2
inline std::vector<double> ranks(std::span<const double> e) {
    std::vector<double> r(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        double above = 0, tied = 0;
        for (std::size_t j = 0; j < e.size(); ++j) {
            if (j == i) continue;
            if (std::abs(e[j]) > std::abs(e[i])) ++above;
            else if (std::abs(e[j]) == std::abs(e[i])) ++tied;
        }
        r[i] = 1 + above + tied / 2;
    }
    return r;
}

inline std::optional<double> rc(std::span<const double> e, std::span<const double> s) {
    const auto a = ranks(e), b = ranks(s);
    auto constant = [](const std::vector<double>& r) {
        return std::adjacent_find(r.begin(), r.end(), std::not_equal_to<>()) == r.end();
    };
    if (constant(a) || constant(b)) return std::nullopt;
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ma += a[i] / n, mb += b[i] / n;
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (a[i] - ma) * (b[i] - mb);
        va += (a[i] - ma) * (a[i] - ma);
        vb += (b[i] - mb) * (b[i] - mb);
    }
    return cov / std::sqrt(va * vb);
}

inline double pra(std::span<const double> e, std::span<const double> s) {
    if (e.size() < 2) return 1.0;
    double agree = 0, pairs = 0;
    for (std::size_t i = 0; i < e.size(); ++i)
        for (std::size_t j = i + 1; j < e.size(); ++j) {
            ++pairs;
            agree += sgn(std::abs(e[i]) - std::abs(e[j])) == sgn(std::abs(s[i]) - std::abs(s[j]));
        }
    return agree / pairs;
}

inline double gap(const axebench::Predictor& m, std::span<const double> x, const std::vector<std::size_t>& features,
                  std::size_t perturbations, double sigma, std::uint64_t seed, std::size_t row) {
    const auto key = axebench::derive_seed(seed, "metrics_sensitivity", row);
    const double base = m.predict_proba(x);
    double total = 0;
    for (std::size_t j = 0; j < perturbations; ++j) {
        std::vector<double> z(x.begin(), x.end());
        for (auto f : features) z[f] += sigma * axebench::normal_at(key, j * x.size() + f);
        total += std::abs(m.predict_proba(z) - base);
    }
    return total / static_cast<double>(perturbations);
}

// Exhaustive distance sort: every candidate row, ordered by (distance, index).
inline int knn(const axebench::Dataset& d, std::span<const int> targets, const std::vector<std::size_t>& features,
               std::size_t query, std::size_t k, bool include_self) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t r = 0; r < d.rows(); ++r) {
        if (!include_self && r == query) continue;
        double dist = 0;
        for (auto f : features) dist += (d.at(r, f) - d.at(query, f)) * (d.at(r, f) - d.at(query, f));
        all.emplace_back(dist, r);
    }
    std::sort(all.begin(), all.end());
    std::size_t ones = 0;
    for (std::size_t j = 0; j < k; ++j) ones += targets[all[j].second] == 1;
    return 2 * ones > k ? 1 : 0;
}

inline double axe(const axebench::Dataset& d, std::span<const int> y, const std::vector<std::vector<double>>& E,
                  std::size_t n, std::size_t k, bool include_self, std::vector<double>* per_row = nullptr) {
    double correct = 0;
    for (std::size_t i = 0; i < d.rows(); ++i) {
        const int yhat = knn(d, y, top_n(E[i], n), i, k, include_self);
        const double q = yhat == y[i] ? 1.0 : 0.0;
        if (per_row) per_row->push_back(q);
        correct += q;
    }
    return correct / static_cast<double>(d.rows());
}

// Shapley values by enumerating every coalition, with absent features filled
// from each background row in turn.
inline std::vector<double> exact_shapley(const axebench::Predictor& m, std::span<const double> x,
                                         const std::vector<std::vector<double>>& background) {
    const std::size_t p = x.size();
    auto value = [&](std::uint64_t mask) {
        double s = 0;
        std::vector<double> z(p);
        for (const auto& b : background) {
            for (std::size_t j = 0; j < p; ++j) z[j] = (mask >> j) & 1 ? x[j] : b[j];
            s += m.predict_proba(z);
        }
        return s / static_cast<double>(background.size());
    };
    std::vector<double> fact(p + 1, 1.0);
    for (std::size_t i = 1; i <= p; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
    std::vector<double> phi(p, 0.0);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << p); ++mask) {
        const auto size = static_cast<std::size_t>(__builtin_popcountll(mask));
        for (std::size_t j = 0; j < p; ++j) {
            if ((mask >> j) & 1) continue;
            const double w = fact[size] * fact[p - size - 1] / fact[p];
            phi[j] += w * (value(mask | (std::uint64_t{1} << j)) - value(mask));
        }
    }
    return phi;
}

}  // namespace oracle
