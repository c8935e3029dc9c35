#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ptmark {

/// C×H×W real tensor, channel-major. Holds diffusion states z_t.
struct Latent {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;

    Latent() = default;
    Latent(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
        : channels(c), height(h), width(w), data(c * h * w, fill) {}

    std::size_t plane() const { return height * width; }
    std::size_t size() const { return data.size(); }

    double& at(std::size_t c, std::size_t i, std::size_t j) { return data[(c * height + i) * width + j]; }
    double at(std::size_t c, std::size_t i, std::size_t j) const { return data[(c * height + i) * width + j]; }

    std::span<double> channel(std::size_t c) { return {data.data() + c * plane(), plane()}; }
    std::span<const double> channel(std::size_t c) const { return {data.data() + c * plane(), plane()}; }

    bool same_shape(const Latent& other) const {
        return channels == other.channels && height == other.height && width == other.width;
    }

    bool operator==(const Latent&) const = default;
};

/// Throws ShapeError when shapes differ. `what` names the calling operation.
void require_same_shape(const Latent& a, const Latent& b, const char* what);

bool all_finite(const Latent& z);

/// a·x + b·y, elementwise.
Latent linear_combination(double a, const Latent& x, double b, const Latent& y);
Latent scaled(const Latent& x, double a);

double dot(const Latent& a, const Latent& b);
double squared_norm(const Latent& z);
double l2_norm(const Latent& z);

/// ‖a − b‖₂ / ‖b‖₂
double relative_l2_error(const Latent& a, const Latent& b);
double max_abs_difference(const Latent& a, const Latent& b);

}  // namespace ptmark
