#include "ptmark/numerics/grid.hpp"

#include <algorithm>
#include <cmath>

#include "ptmark/errors.hpp"

namespace ptmark {

ComplexGrid2D ComplexGrid2D::from_real(std::size_t h, std::size_t w, std::span<const double> real) {
    if (real.size() != h * w) throw ShapeError("ComplexGrid2D::from_real: value count does not match h*w");
    ComplexGrid2D g(h, w);
    std::transform(real.begin(), real.end(), g.values.begin(), [](double v) { return std::complex<double>(v, 0.0); });
    return g;
}

Grid2D ComplexGrid2D::real_part() const {
    Grid2D out(height, width);
    std::transform(values.begin(), values.end(), out.values.begin(), [](const auto& v) { return v.real(); });
    return out;
}

double ComplexGrid2D::max_abs_imag() const {
    double m = 0.0;
    for (const auto& v : values) m = std::max(m, std::abs(v.imag()));
    return m;
}

}  // namespace ptmark
