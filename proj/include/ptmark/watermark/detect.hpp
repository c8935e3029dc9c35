#pragma once

#include <complex>
#include <span>
#include <vector>

#include "ptmark/diffusion/codec.hpp"
#include "ptmark/diffusion/denoiser.hpp"
#include "ptmark/numerics/latent.hpp"
#include "ptmark/watermark/key.hpp"

namespace ptmark {

inline constexpr double kDefaultThreshold = 0.01;

/// Writes the key pattern into the masked Fourier coefficients of the key channel.
Latent embed(const Latent& z_T, const WatermarkKey& key);

struct Extraction {
    std::vector<std::complex<double>> y;  // centered spectrum at the mask coordinates
    double sigma2 = 0.0;                  // per-real-component variance over the non-DC spectrum
};

Extraction extract(const Latent& z_T_est, const WatermarkKey& key);

/// η and its p-value.
///
/// η = (1/σ²) Σ_mask |W − y|². A real latent makes y[−m] = conj(y[m]), so the masked
/// entries of a symmetric key carry only half as many independent components as
/// coordinates. The p-value therefore counts each conjugate pair once:
/// statistic = (1/σ²) Σ_reps |W − y|², dof = 2·|reps|, λ = (1/σ²) Σ_reps |W|², and
/// p = F_{χ²(dof, λ)}(statistic). For a fully paired mask, statistic = η/2.
struct Score {
    double eta = 0.0;
    double statistic = 0.0;
    double dof = 0.0;
    double noncentrality = 0.0;
    double p_value = 0.0;
};

/// Throws DegenerateInputError when sigma2 ≤ 0.
Score score_pvalue(std::span<const std::complex<double>> y, const WatermarkKey& key, double sigma2);

struct VerificationReport {
    double eta = 0.0;
    double sigma2 = 0.0;
    double dof = 0.0;
    double noncentrality = 0.0;
    double p_value = 1.0;
    bool decision = false;
    double threshold = kDefaultThreshold;
};

/// encode → DDIM inversion at w = 1 → extract → score. `cond` is the inversion
/// embedding: the original prompt by default, or null_embed() for the empty prompt.
VerificationReport verify(const Image& x, const ToyDenoiser& d, const WatermarkKey& key, const Embedding& cond,
                          double threshold = kDefaultThreshold);

/// Same as verify but starting from a latent estimate of z_0.
VerificationReport verify_latent(const Latent& z0, const ToyDenoiser& d, const WatermarkKey& key,
                                 const Embedding& cond, double threshold = kDefaultThreshold);

/// Mann–Whitney AUC: fraction of (watermarked, clean) pairs with p_wm < p_clean, ties 0.5.
double auc(std::span<const double> p_watermarked, std::span<const double> p_clean);

}  // namespace ptmark
