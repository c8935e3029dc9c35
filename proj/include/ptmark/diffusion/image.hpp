#pragma once

#include <cstddef>
#include <vector>

namespace ptmark {

/// Single-channel image, row-major, nominal range [0, 1].
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;

    Image() = default;
    Image(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), data(h * w, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * width + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * width + j]; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const { return height == o.height && width == o.width; }

    bool operator==(const Image&) const = default;
};

}  // namespace ptmark
