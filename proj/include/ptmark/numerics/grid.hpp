#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace ptmark {

/// Real H×W grid, row-major.
struct Grid2D {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;

    Grid2D() = default;
    Grid2D(std::size_t h, std::size_t w, double fill = 0.0) : height(h), width(w), values(h * w, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return values[i * width + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values[i * width + j]; }
    std::size_t size() const { return values.size(); }

    bool operator==(const Grid2D&) const = default;
};

/// Complex H×W grid, row-major.
struct ComplexGrid2D {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::complex<double>> values;

    ComplexGrid2D() = default;
    ComplexGrid2D(std::size_t h, std::size_t w) : height(h), width(w), values(h * w) {}

    std::complex<double>& operator()(std::size_t i, std::size_t j) { return values[i * width + j]; }
    const std::complex<double>& operator()(std::size_t i, std::size_t j) const { return values[i * width + j]; }
    std::size_t size() const { return values.size(); }

    static ComplexGrid2D from_real(std::size_t h, std::size_t w, std::span<const double> real);
    Grid2D real_part() const;
    double max_abs_imag() const;
};

}  // namespace ptmark
