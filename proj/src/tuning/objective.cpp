#include "ptmark/tuning/objective.hpp"

#include <cmath>

#include "ptmark/diffusion/ddim.hpp"
#include "ptmark/errors.hpp"

namespace ptmark {

namespace {

void require_mask(const SaliencyMask& mask, const Latent& z, const char* what) {
    if (mask.height != z.height || mask.width != z.width || mask.plane.size() != z.plane())
        throw ShapeError(std::string(what) + ": saliency mask does not match latent");
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

LossTerms tuning_losses(const Latent& z_pred, const Latent& z_star, const Latent& z_hat, const SaliencyMask& mask,
                        const TuningConfig& cfg) {
    require_same_shape(z_pred, z_star, "tuning_losses");
    require_same_shape(z_pred, z_hat, "tuning_losses");
    require_mask(mask, z_pred, "tuning_losses");

    LossTerms l;
    const std::size_t plane = z_pred.plane();
    for (std::size_t k = 0; k < z_pred.size(); ++k) {
        const double r = z_star.data[k] - z_pred.data[k];
        l.l_sem += r * r;
        if (mask.plane[k % plane]) l.l_wm += std::abs(z_hat.data[k] - z_pred.data[k]);
    }
    l.l_total = cfg.lambda1 * l.l_sem + cfg.lambda2 * l.l_wm;
    return l;
}

StepObjective::StepObjective(const ToyDenoiser& d, const Latent& z_bar_t, Timestep t, const Embedding& cond,
                             const Latent& z_star_prev, const Latent& z_hat_prev, const SaliencyMask& mask,
                             const TuningConfig& cfg)
    : d_(d), z_bar_t_(z_bar_t), t_(t), cond_(cond), z_star_prev_(z_star_prev), z_hat_prev_(z_hat_prev),
      mask_(mask), cfg_(cfg) {
    d.require_latent(z_bar_t, "embedding_grad");
    require_same_shape(z_bar_t, z_star_prev, "embedding_grad");
    require_same_shape(z_bar_t, z_hat_prev, "embedding_grad");
    require_mask(mask, z_bar_t, "embedding_grad");
    if (!std::isfinite(cfg.guidance_w)) throw DomainError("embedding_grad: guidance scale must be finite");

    const NoiseSchedule& s = d.schedule();
    const double ab_t = s.alpha_bar(t);
    const double ab_prev = s.alpha_bar(s.predecessor(t));
    c_eps_ = std::sqrt(1.0 - ab_prev) - std::sqrt(ab_prev) * std::sqrt(1.0 - ab_t) / std::sqrt(ab_t);
    linear_ = d.linear_part(z_bar_t);
    eps_cond_ = d.modulate(linear_, d.modulation(t, cond));
}

Latent StepObjective::eps(const Embedding& null) const {
    if (cond_ == null) return eps_cond_;
    return guide(eps_cond_, d_.modulate(linear_, d_.modulation(t_, null)), cfg_.guidance_w);
}

Latent StepObjective::predict(const Embedding& null) const {
    return ddim_step(z_bar_t_, eps(null), t_, d_.schedule());
}

LossTerms StepObjective::losses(const Embedding& null) const {
    return tuning_losses(predict(null), z_star_prev_, z_hat_prev_, mask_, cfg_);
}

Embedding StepObjective::gradient(const Embedding& null, LossTerms* at) const {
    const Latent z_pred = predict(null);
    if (at) *at = tuning_losses(z_pred, z_star_prev_, z_hat_prev_, mask_, cfg_);

    // ∂l/∂z_pred, then through z_pred = c_z·z̄_t + c_eps·(w·ε_cond + (1−w)·ε_null)
    const double chain = c_eps_ * (1.0 - cfg_.guidance_w);
    Latent cot(z_pred.channels, z_pred.height, z_pred.width);
    const std::size_t plane = z_pred.plane();
    for (std::size_t k = 0; k < z_pred.size(); ++k) {
        double g = cfg_.lambda1 * 2.0 * (z_pred.data[k] - z_star_prev_.data[k]);
        if (mask_.plane[k % plane]) g += cfg_.lambda2 * sign(z_pred.data[k] - z_hat_prev_.data[k]);
        cot.data[k] = chain * g;
    }
    return d_.modulation_vjp(linear_, t_, null, cot);
}

Embedding embedding_grad(const ToyDenoiser& d, const Latent& z_bar_t, Timestep t, const Embedding& null_t,
                         const Embedding& cond, const Latent& z_star_prev, const Latent& z_hat_prev,
                         const SaliencyMask& mask, const TuningConfig& cfg) {
    return StepObjective(d, z_bar_t, t, cond, z_star_prev, z_hat_prev, mask, cfg).gradient(null_t);
}

}  // namespace ptmark
