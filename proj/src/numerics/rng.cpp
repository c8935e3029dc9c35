#include "ptmark/numerics/rng.hpp"

#include <cmath>
#include <numbers>

namespace ptmark {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kTagSalt = 0x632BE59BD9B4E019ULL;
}  // namespace

std::uint64_t SeededRng::next_u64() { return mix64(key_ + (counter_++) * kGolden); }

double SeededRng::uniform() {
    // top 53 bits, offset by half an ulp so 0 is never produced
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double SeededRng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

SeededRng SeededRng::child(std::uint64_t tag) const { return SeededRng(derive_seed(seed_, tag)); }

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) {
    return mix64(mix64(parent) ^ mix64(tag + kTagSalt));
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag) { return derive_seed(parent, fnv1a64(tag)); }

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

Latent gaussian_grid(SeededRng& rng, std::size_t c, std::size_t h, std::size_t w) {
    Latent z(c, h, w);
    for (double& v : z.data) v = rng.normal();
    return z;
}

}  // namespace ptmark
