#include "axebench/support.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>
#include <vector>

namespace axebench {

namespace {
std::atomic<std::size_t> g_default_jobs{0};
}

double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(Rng& rng) {
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double normal_at(std::uint64_t key, std::uint64_t counter) {
    const std::uint64_t a = splitmix64(key ^ splitmix64(2 * counter));
    const std::uint64_t b = splitmix64(key ^ splitmix64(2 * counter + 1));
    // u1 in (0, 1] keeps the logarithm finite.
    const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t uniform_index(Rng& rng, std::size_t bound) {
    // Lemire-style rejection keeps the draw unbiased and portable.
    const std::uint64_t b = bound;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % b;
    std::uint64_t r = rng();
    while (r >= limit) r = rng();
    return static_cast<std::size_t>(r % b);
}

std::size_t default_jobs() {
    const std::size_t j = g_default_jobs.load();
    if (j != 0) return j;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

void set_default_jobs(std::size_t jobs) { g_default_jobs.store(jobs); }

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t jobs) {
    if (jobs == 0) jobs = default_jobs();
    jobs = std::min(jobs, count);
    if (jobs <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(count);
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(jobs);
    for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(worker);
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace axebench
