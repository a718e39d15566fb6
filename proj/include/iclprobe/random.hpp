#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace iclprobe {

/// Seeded generator with platform-independent draws. The standard
/// distributions are implementation-defined, so bounded integers and
/// shuffles are derived here directly from the 64-bit Mersenne Twister.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound). `bound` must be positive.
    std::uint64_t below(std::uint64_t bound);

    /// Uniform integer in [lo, hi].
    std::int64_t between(std::int64_t lo, std::int64_t hi);

    /// Uniform double in [0, 1).
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        shuffle(std::span<T>(items));
    }

    /// `count` distinct indices from [0, population), in draw order.
    std::vector<std::size_t> sample_indices(std::size_t population, std::size_t count);

private:
    std::mt19937_64 engine_;
};

/// Mixes a base seed with a stream index (splitmix64 finalizer), so that
/// derived streams are decorrelated and reproducible.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// round(p * n) with halves rounded up: floor(p * n + 0.5).
std::size_t proportion_count(double proportion, std::size_t n);

}  // namespace iclprobe
