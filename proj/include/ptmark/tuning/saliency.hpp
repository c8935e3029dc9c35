#pragma once

#include <cstdint>
#include <vector>

#include "ptmark/numerics/latent.hpp"

namespace ptmark {

/// Binary spatial mask, one H×W plane broadcast over every channel.
struct SaliencyMask {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> plane;  // H×W, entries 0/1

    bool at(std::size_t i, std::size_t j) const { return plane[i * width + j] != 0; }
    std::size_t active_cells() const;
    double active_fraction() const;

    bool operator==(const SaliencyMask&) const = default;
};

/// Cells where ẑ and z* differ most. The channel-summed |ẑ − z*| is smoothed with a
/// zero-padded 3×3 box filter and the round(q·H·W) largest positive cells are kept
/// (ties broken by raster order). An all-but-zero difference gives an empty mask.
SaliencyMask saliency_mask(const Latent& z_hat, const Latent& z_star, double q);

SaliencyMask empty_mask(std::size_t channels, std::size_t height, std::size_t width);

}  // namespace ptmark
