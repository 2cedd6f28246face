#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace rfan {

// Seeded generator with hand-rolled transforms so that streams are
// bit-reproducible across standard library implementations.
// (std::normal_distribution and friends are implementation-defined.)
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // splitmix64 finalizer; used to derive independent substreams.
    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on [0,1) with 53 random bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the spare draw is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform(); // (0,1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Unbiased integer on [0, n) by masked rejection.
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t mask = ~0ULL >> std::countl_zero(n | 1);
        std::uint64_t v;
        do {
            v = gen_() & mask;
        } while (v >= n);
        return v;
    }

    int coin() { return static_cast<int>(uniform_below(2)); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_below(i)]);
        }
    }

    // k distinct indices from [0, n), in draw order (partial Fisher-Yates).
    std::vector<int> sample_without_replacement(int n, int k) {
        std::vector<int> idx(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
        std::vector<int> out;
        out.reserve(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            const auto j = static_cast<std::size_t>(i) +
                           uniform_below(static_cast<std::uint64_t>(n - i));
            std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
            out.push_back(idx[static_cast<std::size_t>(i)]);
        }
        return out;
    }

private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace rfan
