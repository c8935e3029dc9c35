#include "ptmark/tuning/config.hpp"

#include <cmath>
#include <sstream>

#include "ptmark/errors.hpp"

namespace ptmark {

std::string to_string(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }

Optimizer optimizer_from_string(const std::string& name) {
    if (name == "adam") return Optimizer::adam;
    if (name == "sgd") return Optimizer::sgd;
    throw ConfigError("unknown optimizer '" + name + "' (expected adam or sgd)");
}

void TuningConfig::validate() const {
    auto fail = [](const std::string& what) { throw DomainError("tuning config: " + what); };
    if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) fail("lambda1 must be finite and >= 0");
    if (!(lambda2 >= 0.0) || !std::isfinite(lambda2)) fail("lambda2 must be finite and >= 0");
    if (!(saliency_q > 0.0 && saliency_q < 1.0)) fail("saliency_q must lie in (0, 1)");
    if (!(lr > 0.0) || !std::isfinite(lr)) fail("lr must be finite and > 0");
    if (!std::isfinite(guidance_w)) fail("guidance_w must be finite");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        fail("Adam betas must lie in [0, 1)");
    if (!(adam_eps > 0.0)) fail("adam_eps must be > 0");
}

}  // namespace ptmark
