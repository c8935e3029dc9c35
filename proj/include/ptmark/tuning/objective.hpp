#pragma once

#include "ptmark/diffusion/denoiser.hpp"
#include "ptmark/tuning/config.hpp"
#include "ptmark/tuning/saliency.hpp"

namespace ptmark {

struct LossTerms {
    double l_sem = 0.0;
    double l_wm = 0.0;
    double l_total = 0.0;

    bool operator==(const LossTerms&) const = default;
};

/// l_sem = ‖z* − z_pred‖², l_wm = ‖M ⊙ (ẑ − z_pred)‖₁, l_total = λ1·l_sem + λ2·l_wm.
LossTerms tuning_losses(const Latent& z_pred, const Latent& z_star, const Latent& z_hat, const SaliencyMask& mask,
                        const TuningConfig& cfg);

/// Everything at one sampling step that does not depend on ∅_t, so the inner
/// optimization loop only re-evaluates the modulation.
class StepObjective {
public:
    StepObjective(const ToyDenoiser& d, const Latent& z_bar_t, Timestep t, const Embedding& cond,
                  const Latent& z_star_prev, const Latent& z_hat_prev, const SaliencyMask& mask,
                  const TuningConfig& cfg);

    /// Guided ε with ∅_t = null; bit-identical to cfg_eps.
    Latent eps(const Embedding& null) const;
    /// ddim_step(z̄_t, eps(null), t)
    Latent predict(const Embedding& null) const;

    LossTerms losses(const Embedding& null) const;
    /// Gradient of l_total with respect to ∅_t, plus the losses at the same point.
    Embedding gradient(const Embedding& null, LossTerms* at = nullptr) const;

private:
    const ToyDenoiser& d_;
    const Latent& z_bar_t_;
    Timestep t_;
    Embedding cond_;
    const Latent& z_star_prev_;
    const Latent& z_hat_prev_;
    const SaliencyMask& mask_;
    TuningConfig cfg_;
    Latent linear_;
    Latent eps_cond_;
    double c_eps_ = 0.0;
};

/// ∂l_total/∂∅_t through z_pred = ddim_step(z̄_t, cfg_eps(z̄_t, t, cond, ∅_t, w), t).
/// Only the unconditional branch of the guidance depends on ∅_t; the mask is constant
/// and the L1 subgradient at 0 is 0.
Embedding embedding_grad(const ToyDenoiser& d, const Latent& z_bar_t, Timestep t, const Embedding& null_t,
                         const Embedding& cond, const Latent& z_star_prev, const Latent& z_hat_prev,
                         const SaliencyMask& mask, const TuningConfig& cfg);

}  // namespace ptmark
