#include "axebench/metrics_reference.hpp"

#include <algorithm>
#include <cmath>

namespace axebench {

namespace {

int sign_of(double v) { return (v > 0) - (v < 0); }

template <typename Match>
double top_n_fraction(const GroundTruthPair& p, Match match) {
    if (p.n == 0) return 0.0;
    const auto top = top_n_features(p.e, p.n);
    const auto top_star = top_n_features(p.e_star, p.n);
    std::size_t hits = 0;
    for (std::size_t pos = 0; pos < top.size(); ++pos) {
        const auto it = std::find(top_star.begin(), top_star.end(), top[pos]);
        if (it == top_star.end()) continue;
        const auto pos_star = static_cast<std::size_t>(it - top_star.begin());
        if (match(top[pos], pos, pos_star)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(p.n);
}

}  // namespace

GroundTruthPair::GroundTruthPair(std::span<const double> e_, std::span<const double> e_star_, std::size_t n_)
    : e(e_), e_star(e_star_), n(n_) {
    if (e.size() != e_star.size()) throw Error("metrics_reference", "length mismatch between e and e*");
    if (n > e.size()) throw Error("metrics_reference", "n exceeds feature count");
}

double feature_agreement(const GroundTruthPair& p) {
    return top_n_fraction(p, [](std::size_t, std::size_t, std::size_t) { return true; });
}

double rank_agreement(const GroundTruthPair& p) {
    return top_n_fraction(p, [](std::size_t, std::size_t a, std::size_t b) { return a == b; });
}

double sign_agreement(const GroundTruthPair& p) {
    return top_n_fraction(
        p, [&](std::size_t f, std::size_t, std::size_t) { return sign_of(p.e[f]) == sign_of(p.e_star[f]); });
}

double signed_rank_agreement(const GroundTruthPair& p) {
    return top_n_fraction(p, [&](std::size_t f, std::size_t a, std::size_t b) {
        return a == b && sign_of(p.e[f]) == sign_of(p.e_star[f]);
    });
}

std::optional<double> rank_correlation(const GroundTruthPair& p) {
    const auto r = rank_vector(p.e);
    const auto s = rank_vector(p.e_star);
    const double n = static_cast<double>(r.size());
    double mr = 0, ms = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        mr += r[i];
        ms += s[i];
    }
    mr /= n;
    ms /= n;
    double srs = 0, srr = 0, sss = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        srs += (r[i] - mr) * (s[i] - ms);
        srr += (r[i] - mr) * (r[i] - mr);
        sss += (s[i] - ms) * (s[i] - ms);
    }
    if (srr == 0.0 || sss == 0.0) return std::nullopt;
    return srs / std::sqrt(srr * sss);
}

double pairwise_rank_agreement(const GroundTruthPair& p) {
    const std::size_t n = p.e.size();
    if (n < 2) return 1.0;
    std::size_t agree = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j, ++pairs) {
            const int a = sign_of(std::abs(p.e[i]) - std::abs(p.e[j]));
            const int b = sign_of(std::abs(p.e_star[i]) - std::abs(p.e_star[j]));
            if (a == b) ++agree;
        }
    return static_cast<double>(agree) / static_cast<double>(pairs);
}

}  // namespace axebench
