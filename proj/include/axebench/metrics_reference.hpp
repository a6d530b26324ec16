#pragma once

#include <optional>
#include <span>
#include <vector>

#include "axebench/core.hpp"

namespace axebench {

// Agreement metrics between an explanation e and a reference e*.
// FA/RA/SA/SRA divide by n (not by the size of the top-n intersection).

struct GroundTruthPair {
    std::span<const double> e;
    std::span<const double> e_star;
    std::size_t n = 0;

    GroundTruthPair(std::span<const double> e_, std::span<const double> e_star_, std::size_t n_);
    GroundTruthPair(const Explanation& e_, const Explanation& e_star_, std::size_t n_)
        : GroundTruthPair(std::span<const double>(e_.importances), std::span<const double>(e_star_.importances), n_) {}
};

/// |topn(e) ∩ topn(e*)| / n; 0 when n = 0.
double feature_agreement(const GroundTruthPair& p);
/// Common top-n features at the same rank position, over n.
double rank_agreement(const GroundTruthPair& p);
/// Common top-n features with matching sign, over n.
double sign_agreement(const GroundTruthPair& p);
/// Common top-n features with matching rank and sign, over n.
double signed_rank_agreement(const GroundTruthPair& p);
/// Spearman correlation of the fractional rank vectors over all N features.
/// Empty when either rank vector is constant.
std::optional<double> rank_correlation(const GroundTruthPair& p);
/// Fraction of the C(N,2) pairs ordered the same way by |e| and |e*|; a tie
/// agrees only with a tie. Uses every feature regardless of n.
double pairwise_rank_agreement(const GroundTruthPair& p);

}  // namespace axebench
