#pragma once

#include <iosfwd>
#include <vector>

#include "ptmark/diffusion/codec.hpp"
#include "ptmark/diffusion/ddim.hpp"
#include "ptmark/tuning/objective.hpp"
#include "ptmark/watermark/key.hpp"

namespace ptmark {

struct StepCurve {
    Timestep timestep = 0;
    bool optimized = false;
    std::vector<LossTerms> iterations;  // loss before each of the N updates
    LossTerms final;                    // loss at the ∅_t actually used for the step
};

struct TuneResult {
    Trajectory pivot;        // {z*_t}: inversion of z0_star at w = 1
    Trajectory watermarked;  // {ẑ_t}: w = 7.5 sampling from embed(z*_T), constant null
    Trajectory tuned;        // {z̄_t}
    NullTextSchedule nulls;  // ∅_t per sampled step
    Image image;             // decode(z̄_0)
    std::vector<StepCurve> curves;
};

/// Pivotal trajectory generation followed by semantic-aware tuning of the null-text
/// embeddings, one sampling step at a time. With n_iters = 0 the tuned trajectory
/// equals the watermarked one bit for bit.
TuneResult pivotal_tune(const ToyDenoiser& d, const Latent& z0_star, const WatermarkKey& key, const Embedding& cond,
                        const TuningConfig& cfg);

/// step,iter,l_sem,l_wm,l_total. Iterations 0…N−1 are pre-update values; iter N is the final loss.
void write_loss_csv(std::ostream& out, const std::vector<StepCurve>& curves);

}  // namespace ptmark
