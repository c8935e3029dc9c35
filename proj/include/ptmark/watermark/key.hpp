#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace ptmark {

struct KeyParams {
    std::uint64_t seed = 42;
    int radius = 10;
    std::size_t channel = 3;
    std::size_t height = 64;
    std::size_t width = 64;

    bool operator==(const KeyParams&) const = default;
};

/// Position on the centered spectrum (zero frequency at (H/2, W/2)).
struct SpectrumCoord {
    std::size_t row = 0;
    std::size_t col = 0;

    bool operator==(const SpectrumCoord&) const = default;
};

struct RingValue {
    int radius = 0;
    std::complex<double> value;
};

/// Ring-pattern watermark key: the binary region 𝕄 (a centered disc minus DC) and the
/// message W, constant on each integer-radius ring.
struct WatermarkKey {
    KeyParams params;
    std::vector<SpectrumCoord> mask;
    std::vector<std::complex<double>> pattern;  // one per mask coordinate
    std::vector<RingValue> rings;               // ascending radius

    /// 16 hex digits identifying (seed, radius, channel, h, w).
    std::string fingerprint() const;
};

/// Builds the key deterministically from `params`. Ring values are the per-ring mean of
/// the centered FFT of a seeded Gaussian grid, then conjugate-symmetrized (which makes
/// a ring-constant value real). Throws DomainError if radius ≥ min(h, w)/2, SizingError
/// for non power-of-two grids.
WatermarkKey keygen(const KeyParams& params);
WatermarkKey keygen(std::uint64_t seed, int radius, std::size_t channel, std::size_t h, std::size_t w);

/// Integer ring index of a centered-spectrum coordinate: floor of its distance to the center.
int ring_index(const SpectrumCoord& c, std::size_t h, std::size_t w);

/// Point reflection through the spectrum center.
SpectrumCoord conjugate_coord(const SpectrumCoord& c, std::size_t h, std::size_t w);

}  // namespace ptmark
