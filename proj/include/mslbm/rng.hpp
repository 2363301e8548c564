#ifndef MSLBM_RNG_HPP
#define MSLBM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace mslbm {

/// Seeded random stream with named substreams.
///
/// Substreams are derived from the stream's root seed (not from its
/// consumption state), so `rng.substream("noise", 2)` yields the same
/// draws no matter how much the parent has been consumed. This is what
/// keeps generated instances stable when views are added: each (object,
/// view) pair owns its own substream.
///
/// All sampling is implemented here rather than with std::*_distribution
/// so the byte-level output is pinned by this code alone.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : root_(seed), gen_(splitmix(seed)) {}

    RngStream substream(std::string_view name) const {
        return RngStream(splitmix(root_ ^ fnv1a(name)));
    }
    RngStream substream(std::string_view name, std::uint64_t index) const {
        return RngStream(splitmix(splitmix(root_ ^ fnv1a(name)) + index));
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound), bound >= 1. Rejection sampling, no modulo bias.
    std::uint64_t uniform_int(std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do {
            v = gen_();
        } while (v >= limit);
        return v % bound;
    }

    /// Standard normal via Box-Muller. Consumes exactly two uniforms per call.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();  // log(0) guard; astronomically rare
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    std::uint64_t root_seed() const { return root_; }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }
    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    std::uint64_t root_;
    std::mt19937_64 gen_;
};

}  // namespace mslbm

#endif
