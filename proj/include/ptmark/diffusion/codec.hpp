#pragma once

#include "ptmark/diffusion/image.hpp"
#include "ptmark/numerics/latent.hpp"

namespace ptmark {

/// Latent range mapped onto [0, 1] by the codec.
inline constexpr double kCodecLatentBound = 4.0;

/// 4×H×W latent → 2H×2W image. Channel c of cell (i, j) lands on pixel
/// (2i + c/2, 2j + c%2), then v ↦ (v + 4)/8 clamped to [0, 1].
Image decode(const Latent& z);

/// Exact inverse of the unclamped decode map.
Latent encode(const Image& x);

}  // namespace ptmark
