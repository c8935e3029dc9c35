#pragma once

#include <cstdint>
#include <string_view>

#include "ptmark/numerics/latent.hpp"

namespace ptmark {

/// SplitMix64 finalizer. Bijective 64-bit mixer used for both the stream and seed derivation.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Counter-based generator: draw n is mix64(seed_key + n·0x9E3779B97F4A7C15), with
/// seed_key = mix64(seed). Output depends only on (seed, n), so streams are identical
/// across platforms and compilers.
class SeededRng {
public:
    static constexpr std::string_view algorithm = "splitmix64-counter";

    explicit SeededRng(std::uint64_t seed) : seed_(seed), key_(mix64(seed)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64();
    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform();
    /// Uniform on [lo, hi).
    double uniform(double lo, double hi);
    /// Standard normal via Box–Muller; consumes two counter values per pair.
    double normal();

    /// Independent child generator for a sub-task, keyed by `tag`.
    SeededRng child(std::uint64_t tag) const;

private:
    std::uint64_t seed_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Derives a seed from a parent seed and a tag; used to give every
/// (prompt, seed, method, perturbation) cell its own stream.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag);
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag);

/// FNV-1a over bytes.
std::uint64_t fnv1a64(std::string_view bytes);

/// c×h×w grid of i.i.d. standard normals drawn from `rng`.
Latent gaussian_grid(SeededRng& rng, std::size_t c, std::size_t h, std::size_t w);

}  // namespace ptmark
