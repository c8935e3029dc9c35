#pragma once

#include <cstdint>
#include <vector>

#include "ptmark/diffusion/embedding.hpp"
#include "ptmark/diffusion/schedule.hpp"
#include "ptmark/numerics/latent.hpp"

namespace ptmark {

struct DenoiserParams {
    std::uint64_t seed = 20240607;
    std::size_t dim = kDefaultEmbeddingDim;
    std::size_t channels = 4;
    std::size_t height = 64;
    std::size_t width = 64;
    double gamma = 0.1;
    double beta_add = 0.1;

    bool operator==(const DenoiserParams&) const = default;
};

/// Per-channel modulation for one (timestep, embedding) pair:
/// ε_c = gate_c · L_c + additive_c, with L the linear part.
struct Modulation {
    std::vector<double> pre_activation;  // u = W_h e + b_t
    std::vector<double> gate;            // 1 + γ tanh(u)
    std::vector<double> additive;        // β_add · W_m e
};

/// Closed-form differentiable stand-in for ε_θ(z, t, e):
///
///   ε = mix(K ⊛ z) ⊙ (1 + γ·tanh(W_h e + b_t)) + β_add·(W_m e)
///
/// K are per-channel 3×3 kernels applied with circular padding, mix is a C×C
/// channel mixer, and the modulation is broadcast over space. Weights are drawn
/// from `params.seed` and the linear part is rescaled so its spectral norm is ≤ 1.
class ToyDenoiser {
public:
    ToyDenoiser(const DenoiserParams& params, const NoiseSchedule& schedule);

    const DenoiserParams& params() const { return params_; }
    const NoiseSchedule& schedule() const { return schedule_; }

    /// mix(K ⊛ z); independent of t and e.
    Latent linear_part(const Latent& z) const;
    Modulation modulation(Timestep t, const Embedding& e) const;
    Latent modulate(const Latent& linear, const Modulation& m) const;

    /// ∂⟨cotangent, modulate(linear, modulation(t, e))⟩ / ∂e with `linear` held fixed.
    Embedding modulation_vjp(const Latent& linear, Timestep t, const Embedding& e, const Latent& cotangent) const;

    /// Spectral norm of z ↦ mix(K ⊛ z), maximized over the per-frequency channel blocks.
    double linear_norm_bound() const;

    /// Zeroes every weight; ε ≡ 0. Used to check the sampler in isolation.
    static ToyDenoiser zero(const DenoiserParams& params, const NoiseSchedule& schedule);

    /// Sets b_t to zero for every step; with e = 0 the denoiser then maps 0 to 0.
    void clear_bias();

    void require_latent(const Latent& z, const char* what) const;
    void require_embedding(const Embedding& e, const char* what) const;

private:
    DenoiserParams params_;
    NoiseSchedule schedule_;
    std::vector<double> kernels_;     // C × 3 × 3
    std::vector<double> mix_;         // C × C, row = output channel
    std::vector<double> w_mod_;       // C × d
    std::vector<double> bias_;        // T × C
    std::vector<double> w_add_;       // C × d
    double norm_bound_ = 0.0;
};

/// ε_θ(z, t, e)
Latent denoise_eps(const ToyDenoiser& d, const Latent& z, Timestep t, const Embedding& e);

/// ∂⟨cotangent, ε_θ(z, t, e)⟩ / ∂e, z held constant.
Embedding denoise_eps_vjp(const ToyDenoiser& d, const Latent& z, Timestep t, const Embedding& e,
                          const Latent& cotangent);

/// w·eps_cond + (1 − w)·eps_null
Latent guide(const Latent& eps_cond, const Latent& eps_null, double w);

/// Classifier-free guidance: w·ε(z, t, cond) + (1 − w)·ε(z, t, null).
/// When cond == null the conditional prediction is returned unchanged for every w.
Latent cfg_eps(const ToyDenoiser& d, const Latent& z, Timestep t, const Embedding& cond, const Embedding& null,
               double w);

}  // namespace ptmark
