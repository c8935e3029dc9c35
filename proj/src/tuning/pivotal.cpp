#include "ptmark/tuning/pivotal.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "ptmark/errors.hpp"
#include "ptmark/watermark/detect.hpp"

namespace ptmark {

namespace {

bool finite(const LossTerms& l) { return std::isfinite(l.l_sem) && std::isfinite(l.l_wm) && std::isfinite(l.l_total); }

[[noreturn]] void abort_non_finite(Timestep t, std::size_t iter, const LossTerms& l, const Embedding& null) {
    std::ostringstream msg;
    msg << "pivotal_tune: non-finite loss at t=" << t << " iter=" << iter << " (l_sem=" << l.l_sem
        << ", l_wm=" << l.l_wm << ", |null|=" << null.norm() << ")";
    throw NumericalError(msg.str());
}

class Adam {
public:
    Adam(const TuningConfig& cfg, std::size_t dim) : cfg_(cfg), m_(dim, 0.0), v_(dim, 0.0) {}

    void step(Embedding& e, const Embedding& g) {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < e.values.size(); ++i) {
            m_[i] = cfg_.adam_beta1 * m_[i] + (1.0 - cfg_.adam_beta1) * g.values[i];
            v_[i] = cfg_.adam_beta2 * v_[i] + (1.0 - cfg_.adam_beta2) * g.values[i] * g.values[i];
            e.values[i] -= cfg_.lr * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + cfg_.adam_eps);
        }
    }

private:
    const TuningConfig& cfg_;
    std::vector<double> m_;
    std::vector<double> v_;
    long t_ = 0;
};

}  // namespace

TuneResult pivotal_tune(const ToyDenoiser& d, const Latent& z0_star, const WatermarkKey& key, const Embedding& cond,
                        const TuningConfig& cfg) {
    cfg.validate();
    d.require_latent(z0_star, "pivotal_tune");
    d.require_embedding(cond, "pivotal_tune");
    const NoiseSchedule& s = d.schedule();
    const std::size_t T = s.num_steps();
    const Embedding zero = null_embed(d.params().dim);

    TuneResult r;
    r.pivot = invert_trajectory(d, z0_star, cond);
    r.watermarked = sample_trajectory(d, embed(r.pivot.front(), key), cond, zero, cfg.guidance_w);

    r.tuned.timesteps = s.ladder();
    r.tuned.states.reserve(T + 1);
    r.tuned.states.push_back(r.watermarked.front());
    r.nulls.per_step.reserve(T);
    r.curves.reserve(T);

    Embedding null = zero;
    for (std::size_t k = 0; k < T; ++k) {
        const Timestep t = s.steps()[k];
        const Latent& z_star_prev = r.pivot.states[k + 1];
        const Latent& z_hat_prev = r.watermarked.states[k + 1];
        const SaliencyMask mask = saliency_mask(z_hat_prev, z_star_prev, cfg.saliency_q);
        const StepObjective objective(d, r.tuned.states.back(), t, cond, z_star_prev, z_hat_prev, mask, cfg);

        StepCurve curve;
        curve.timestep = t;
        curve.optimized = k >= cfg.start_step && cfg.n_iters > 0;
        if (curve.optimized) {
            Adam adam(cfg, null.dim());
            curve.iterations.reserve(cfg.n_iters);
            for (std::size_t it = 0; it < cfg.n_iters; ++it) {
                LossTerms l;
                const Embedding g = objective.gradient(null, &l);
                if (!finite(l)) abort_non_finite(t, it, l, null);
                curve.iterations.push_back(l);
                if (cfg.optimizer == Optimizer::adam) {
                    adam.step(null, g);
                } else {
                    for (std::size_t i = 0; i < null.values.size(); ++i) null.values[i] -= cfg.lr * g.values[i];
                }
                clamp_norm(null);
            }
        }

        const Latent next = objective.predict(null);
        curve.final = tuning_losses(next, z_star_prev, z_hat_prev, mask, cfg);
        if (!finite(curve.final)) abort_non_finite(t, cfg.n_iters, curve.final, null);
        r.tuned.states.push_back(next);
        r.nulls.per_step.push_back(null);
        r.curves.push_back(std::move(curve));
    }
    r.image = decode(r.tuned.back());
    return r;
}

void write_loss_csv(std::ostream& out, const std::vector<StepCurve>& curves) {
    out << "step,iter,l_sem,l_wm,l_total\n";
    out.precision(17);
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.iterations.size(); ++i) {
            const auto& l = c.iterations[i];
            out << c.timestep << ',' << i << ',' << l.l_sem << ',' << l.l_wm << ',' << l.l_total << '\n';
        }
        out << c.timestep << ',' << c.iterations.size() << ',' << c.final.l_sem << ',' << c.final.l_wm << ','
            << c.final.l_total << '\n';
    }
}

}  // namespace ptmark
