#pragma once

#include <vector>

#include "ptmark/diffusion/denoiser.hpp"
#include "ptmark/numerics/rng.hpp"

namespace ptmark {

/// Diffusion states ordered from the noise end to the data end:
/// states.front() is z_T, states.back() is z_0, timesteps == schedule.ladder().
struct Trajectory {
    std::vector<Timestep> timesteps;
    std::vector<Latent> states;

    std::size_t size() const { return states.size(); }
    const Latent& front() const { return states.front(); }
    const Latent& back() const { return states.back(); }

    bool operator==(const Trajectory&) const = default;
};

/// Per-step null-text embeddings ∅_t, aligned with schedule.steps() (t = T … 1).
struct NullTextSchedule {
    std::vector<Embedding> per_step;

    std::size_t size() const { return per_step.size(); }
    static NullTextSchedule constant(const Embedding& e, std::size_t steps) { return {std::vector<Embedding>(steps, e)}; }
};

/// z_t = √ᾱ_t z0 + √(1−ᾱ_t) ε with fresh ε drawn from `rng`.
Latent forward_diffuse(const Latent& z0, Timestep t, const NoiseSchedule& s, SeededRng& rng);

/// Deterministic DDIM update from `t` to its predecessor on the ladder.
Latent ddim_step(const Latent& z_t, const Latent& eps, Timestep t, const NoiseSchedule& s);

/// Algebraic inverse of ddim_step: from `t` up to its successor on the ladder, using
/// the supplied ε (in practice evaluated at the current, lower-noise state).
Latent ddim_inverse_step(const Latent& z_t, const Latent& eps, Timestep t, const NoiseSchedule& s);

Trajectory sample_trajectory(const ToyDenoiser& d, const Latent& z_T, const Embedding& cond,
                             const NullTextSchedule& nulls, double w);
Trajectory sample_trajectory(const ToyDenoiser& d, const Latent& z_T, const Embedding& cond, const Embedding& null,
                             double w);

/// DDIM inversion at guidance scale 1 (ε = ε_θ(z, t, cond)), data end to noise end.
/// Each inverse step evaluates ε at the current state with the label of the step being inverted.
Trajectory invert_trajectory(const ToyDenoiser& d, const Latent& z_0, const Embedding& cond);

}  // namespace ptmark
