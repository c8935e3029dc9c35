#pragma once

#include <cstddef>
#include <vector>

namespace ptmark {

/// Index on the training ladder; 0 is the data end (ᾱ = 1).
using Timestep = int;

struct ScheduleParams {
    int t_train = 1000;
    double beta_min = 1e-4;
    double beta_max = 0.02;
    int t_sample = 50;

    bool operator==(const ScheduleParams&) const = default;
};

/// Linear-β schedule with an evenly strided sampling ladder.
///
/// ᾱ_t = Π_{i=1..t}(1−β_i), so ᾱ_0 = 1 exactly. `steps()` holds the T sampled
/// timesteps in decreasing order (first is t_train); `ladder()` appends the data
/// end 0, giving the T+1 timesteps of a trajectory.
class NoiseSchedule {
public:
    explicit NoiseSchedule(const ScheduleParams& params);

    const ScheduleParams& params() const { return params_; }
    int t_train() const { return params_.t_train; }
    std::size_t num_steps() const { return steps_.size(); }

    /// β_t for t in [1, t_train].
    double beta(Timestep t) const;
    /// ᾱ_t for t in [0, t_train].
    double alpha_bar(Timestep t) const;

    const std::vector<Timestep>& steps() const { return steps_; }
    const std::vector<Timestep>& ladder() const { return ladder_; }

    bool on_ladder(Timestep t) const;
    /// Position of `t` in `ladder()`; throws DomainError if absent.
    std::size_t ladder_index(Timestep t) const;
    /// Position of `t` in `steps()`; throws DomainError if absent (including t = 0).
    std::size_t step_index(Timestep t) const;

    /// Next lower ladder point; throws DomainError for t = 0.
    Timestep predecessor(Timestep t) const;
    /// Next higher ladder point; throws DomainError for t = t_train.
    Timestep successor(Timestep t) const;

    /// Ladder point closest to an arbitrary training timestep.
    Timestep nearest_ladder_step(int t) const;

private:
    ScheduleParams params_;
    std::vector<double> betas_;       // index t-1
    std::vector<double> alpha_bars_;  // index t
    std::vector<Timestep> steps_;
    std::vector<Timestep> ladder_;
};

NoiseSchedule schedule_linear(int t_train = 1000, double beta_min = 1e-4, double beta_max = 0.02, int t_sample = 50);

}  // namespace ptmark
