#include "ptmark/diffusion/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "ptmark/errors.hpp"

namespace ptmark {

NoiseSchedule::NoiseSchedule(const ScheduleParams& params) : params_(params) {
    if (!(params.beta_min > 0.0 && params.beta_min <= params.beta_max && params.beta_max < 1.0)) {
        std::ostringstream msg;
        msg << "schedule: need 0 < beta_min <= beta_max < 1, got (" << params.beta_min << ", " << params.beta_max
            << ")";
        throw DomainError(msg.str());
    }
    if (params.t_train < 1 || params.t_sample < 1 || params.t_sample > params.t_train) {
        std::ostringstream msg;
        msg << "schedule: need 1 <= t_sample <= t_train, got t_sample=" << params.t_sample
            << " t_train=" << params.t_train;
        throw DomainError(msg.str());
    }

    const int n = params.t_train;
    betas_.resize(static_cast<std::size_t>(n));
    alpha_bars_.resize(static_cast<std::size_t>(n) + 1);
    alpha_bars_[0] = 1.0;
    for (int t = 1; t <= n; ++t) {
        const double frac = n == 1 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(n - 1);
        const double beta = params.beta_min + (params.beta_max - params.beta_min) * frac;
        betas_[static_cast<std::size_t>(t - 1)] = beta;
        alpha_bars_[static_cast<std::size_t>(t)] = alpha_bars_[static_cast<std::size_t>(t - 1)] * (1.0 - beta);
    }

    const int T = params.t_sample;
    steps_.reserve(static_cast<std::size_t>(T));
    for (int i = 0; i < T; ++i) {
        // round((T - i) * t_train / T) with integer arithmetic: exact and strictly decreasing
        const long num = static_cast<long>(T - i) * n;
        steps_.push_back(static_cast<Timestep>((2 * num + T) / (2L * T)));
    }
    ladder_ = steps_;
    ladder_.push_back(0);
}

double NoiseSchedule::beta(Timestep t) const {
    if (t < 1 || t > params_.t_train) throw DomainError("schedule: beta index out of range");
    return betas_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar(Timestep t) const {
    if (t < 0 || t > params_.t_train) throw DomainError("schedule: alpha_bar index out of range");
    return alpha_bars_[static_cast<std::size_t>(t)];
}

bool NoiseSchedule::on_ladder(Timestep t) const {
    // ladder_ is strictly decreasing
    return std::binary_search(ladder_.begin(), ladder_.end(), t, std::greater<>());
}

std::size_t NoiseSchedule::ladder_index(Timestep t) const {
    const auto it = std::lower_bound(ladder_.begin(), ladder_.end(), t, std::greater<>());
    if (it == ladder_.end() || *it != t) {
        std::ostringstream msg;
        msg << "schedule: timestep " << t << " is not on the sampling ladder";
        throw DomainError(msg.str());
    }
    return static_cast<std::size_t>(it - ladder_.begin());
}

std::size_t NoiseSchedule::step_index(Timestep t) const {
    const std::size_t i = ladder_index(t);
    if (i >= steps_.size()) throw DomainError("schedule: timestep 0 is not a sampled denoising step");
    return i;
}

Timestep NoiseSchedule::predecessor(Timestep t) const {
    const std::size_t i = ladder_index(t);
    if (i + 1 >= ladder_.size()) throw DomainError("schedule: timestep 0 has no predecessor");
    return ladder_[i + 1];
}

Timestep NoiseSchedule::successor(Timestep t) const {
    const std::size_t i = ladder_index(t);
    if (i == 0) throw DomainError("schedule: the first sampled step has no successor");
    return ladder_[i - 1];
}

Timestep NoiseSchedule::nearest_ladder_step(int t) const {
    return *std::min_element(ladder_.begin(), ladder_.end(),
                             [t](Timestep a, Timestep b) { return std::abs(a - t) < std::abs(b - t); });
}

NoiseSchedule schedule_linear(int t_train, double beta_min, double beta_max, int t_sample) {
    return NoiseSchedule(ScheduleParams{t_train, beta_min, beta_max, t_sample});
}

}  // namespace ptmark
