#pragma once

#include "ptmark/diffusion/image.hpp"

namespace ptmark {

/// Reported for identical images.
inline constexpr double kPsnrCap = 100.0;

/// 10·log10(1/MSE) for images on [0, 1]; MSE = 0 gives kPsnrCap.
double psnr(const Image& a, const Image& b);

/// Mean SSIM over all valid 11×11 windows (Gaussian weights, σ = 1.5), C1 = 0.01², C2 = 0.03².
double ssim(const Image& a, const Image& b);

/// Three-scale MS-SSIM with 2×2 mean downsampling and the first three standard weights
/// renormalized. The coarsest scale must still be at least 32 pixels on its short side.
double msssim(const Image& a, const Image& b);

}  // namespace ptmark
