#include "ptmark/diffusion/ddim.hpp"

#include <cmath>
#include <sstream>

#include "ptmark/errors.hpp"

namespace ptmark {

Latent forward_diffuse(const Latent& z0, Timestep t, const NoiseSchedule& s, SeededRng& rng) {
    if (!s.on_ladder(t)) {
        std::ostringstream msg;
        msg << "forward_diffuse: timestep " << t << " is not on the sampling ladder";
        throw DomainError(msg.str());
    }
    const double ab = s.alpha_bar(t);
    const Latent noise = gaussian_grid(rng, z0.channels, z0.height, z0.width);
    return linear_combination(std::sqrt(ab), z0, std::sqrt(1.0 - ab), noise);
}

Latent ddim_step(const Latent& z_t, const Latent& eps, Timestep t, const NoiseSchedule& s) {
    require_same_shape(z_t, eps, "ddim_step");
    const Timestep prev = s.predecessor(t);
    const double ab_t = s.alpha_bar(t);
    const double ab_prev = s.alpha_bar(prev);
    // z_prev = √ᾱ_prev · (z_t − √(1−ᾱ_t)·ε)/√ᾱ_t + √(1−ᾱ_prev)·ε
    const double c_z = std::sqrt(ab_prev / ab_t);
    const double c_eps = std::sqrt(1.0 - ab_prev) - std::sqrt(ab_prev) * std::sqrt(1.0 - ab_t) / std::sqrt(ab_t);
    return linear_combination(c_z, z_t, c_eps, eps);
}

Latent ddim_inverse_step(const Latent& z_t, const Latent& eps, Timestep t, const NoiseSchedule& s) {
    require_same_shape(z_t, eps, "ddim_inverse_step");
    const Timestep next = s.successor(t);
    const double ab_t = s.alpha_bar(t);
    const double ab_next = s.alpha_bar(next);
    const double c_z = std::sqrt(ab_next / ab_t);
    const double c_eps = std::sqrt(1.0 - ab_next) - std::sqrt(ab_next) * std::sqrt(1.0 - ab_t) / std::sqrt(ab_t);
    return linear_combination(c_z, z_t, c_eps, eps);
}

Trajectory sample_trajectory(const ToyDenoiser& d, const Latent& z_T, const Embedding& cond,
                             const NullTextSchedule& nulls, double w) {
    const NoiseSchedule& s = d.schedule();
    if (nulls.size() != s.num_steps()) {
        std::ostringstream msg;
        msg << "sample_trajectory: " << nulls.size() << " null embeddings for " << s.num_steps() << " steps";
        throw ShapeError(msg.str());
    }
    d.require_latent(z_T, "sample_trajectory");

    Trajectory traj;
    traj.timesteps = s.ladder();
    traj.states.reserve(traj.timesteps.size());
    traj.states.push_back(z_T);
    for (std::size_t i = 0; i < s.num_steps(); ++i) {
        const Timestep t = s.steps()[i];
        const Latent eps = cfg_eps(d, traj.states.back(), t, cond, nulls.per_step[i], w);
        traj.states.push_back(ddim_step(traj.states.back(), eps, t, s));
    }
    return traj;
}

Trajectory sample_trajectory(const ToyDenoiser& d, const Latent& z_T, const Embedding& cond, const Embedding& null,
                             double w) {
    return sample_trajectory(d, z_T, cond, NullTextSchedule::constant(null, d.schedule().num_steps()), w);
}

Trajectory invert_trajectory(const ToyDenoiser& d, const Latent& z_0, const Embedding& cond) {
    const NoiseSchedule& s = d.schedule();
    d.require_latent(z_0, "invert_trajectory");
    const std::size_t T = s.num_steps();

    std::vector<Latent> ascending;
    ascending.reserve(T + 1);
    ascending.push_back(z_0);
    for (std::size_t k = T; k-- > 0;) {
        const Timestep target = s.steps()[k];
        const Timestep current = s.ladder()[k + 1];
        const Latent eps = denoise_eps(d, ascending.back(), target, cond);
        ascending.push_back(ddim_inverse_step(ascending.back(), eps, current, s));
    }

    Trajectory traj;
    traj.timesteps = s.ladder();
    traj.states.assign(ascending.rbegin(), ascending.rend());
    return traj;
}

}  // namespace ptmark
