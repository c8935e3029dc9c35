#pragma once

#include <cstddef>
#include <string>

namespace ptmark {

enum class Optimizer { adam, sgd };

std::string to_string(Optimizer o);
/// Accepts "adam" or "sgd"; throws ConfigError otherwise.
Optimizer optimizer_from_string(const std::string& name);

struct TuningConfig {
    double lambda1 = 1.50;
    double lambda2 = 0.0007;
    std::size_t n_iters = 10;
    double guidance_w = 7.5;
    double lr = 0.01;
    double saliency_q = 0.20;
    std::size_t start_step = 0;  // ladder index; earlier steps follow the watermarked trajectory
    Optimizer optimizer = Optimizer::adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    /// Throws DomainError on λ < 0, q ∉ (0, 1), lr ≤ 0, non-finite w or bad Adam constants.
    void validate() const;

    bool operator==(const TuningConfig&) const = default;
};

}  // namespace ptmark
