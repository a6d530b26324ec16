#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string_view>

namespace axebench {

// Seed derivation: every random stream is splitmix64(seed ^ fnv1a(tag) ^ index).
// Streams never depend on scheduling, so results are identical at any --jobs.

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
    return splitmix64(seed ^ fnv1a(tag) ^ splitmix64(index));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
    return Rng(derive_seed(seed, tag, index));
}

/// Standard normal draw via Box-Muller on 53-bit uniforms. Used instead of
/// std::normal_distribution so that draws are identical across standard
/// library implementations.
double standard_normal(Rng& rng);
double uniform01(Rng& rng);
/// Standard normal addressed by (key, counter) rather than drawn from a
/// stream: any subset of a draw table can be evaluated without generating the rest.
double normal_at(std::uint64_t key, std::uint64_t counter);
/// Uniform integer in [0, bound).
std::size_t uniform_index(Rng& rng, std::size_t bound);

/// Degree of parallelism used when callers pass jobs == 0.
std::size_t default_jobs();
void set_default_jobs(std::size_t jobs);

/// Runs body(i) for i in [0, count) on up to `jobs` threads (0 = default).
/// Each index runs exactly once; callers write results into slot i.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t jobs = 0);

}  // namespace axebench
