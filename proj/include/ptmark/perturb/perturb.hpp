#pragma once

#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ptmark/diffusion/denoiser.hpp"
#include "ptmark/diffusion/image.hpp"
#include "ptmark/numerics/rng.hpp"

namespace ptmark {

struct Jpeg {
    int quality = 25;  // 1..100
    bool operator==(const Jpeg&) const = default;
};
struct Crop {
    double area_fraction = 0.75;  // (0, 1]
    bool operator==(const Crop&) const = default;
};
struct Blur {
    int radius = 4;  // σ = radius/2, half-width 2·radius
    bool operator==(const Blur&) const = default;
};
struct Noise {
    double intensity = 0.10;  // standard deviation as a fraction of [0, 1]
    bool operator==(const Noise&) const = default;
};
struct Brightness {
    double factor = 2.0;
    bool operator==(const Brightness&) const = default;
};
struct Rotate {
    double degrees = 75.0;  // angle drawn uniformly from [−degrees, +degrees]
    bool operator==(const Rotate&) const = default;
};
struct Regenerate {
    int steps = 600;  // training timestep to re-noise to, snapped to the sampling ladder
    bool operator==(const Regenerate&) const = default;
};

using PerturbationSpec = std::variant<Jpeg, Crop, Blur, Noise, Brightness, Rotate, Regenerate>;

/// What Regenerate needs: a denoiser to re-noise and denoise with, and the embedding
/// it denoises under (the attacker does not know the prompt, so null by default).
struct RegenerateContext {
    const ToyDenoiser* denoiser = nullptr;
    Embedding embedding;
};

/// Throws DomainError when parameters fall outside their ranges.
void validate(const PerturbationSpec& spec);

/// Applies one perturbation. Output stays in [0, 1] and keeps the input shape.
/// Regenerate throws DomainError when ctx carries no denoiser.
Image apply_perturbation(const Image& x, const PerturbationSpec& spec, SeededRng& rng,
                         const RegenerateContext* ctx = nullptr);

/// JPEG 25, crop 75%, blur radius 4, noise 10%, brightness ×2, rotation ±75°, regenerate from t = 600.
std::vector<PerturbationSpec> severity_defaults();

/// Short tag: jpeg, crop, blur, noise, brightness, rotate, regenerate.
std::string kind_name(const PerturbationSpec& spec);
/// Tag plus parameter, e.g. "jpeg_25"; used as a report column.
std::string label(const PerturbationSpec& spec);

/// {"kind": "jpeg", "quality": 25} and so on.
nlohmann::ordered_json to_json(const PerturbationSpec& spec);
/// Throws ConfigError for unknown kinds or missing fields.
PerturbationSpec perturbation_from_json(const nlohmann::json& j);

/// Standard JPEG luminance table scaled for `quality` (entries clamped to [1, 255]).
std::vector<int> jpeg_quant_table(int quality);

}  // namespace ptmark
