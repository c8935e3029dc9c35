#pragma once

#include "ptmark/numerics/grid.hpp"

namespace ptmark {

enum class FftDirection { forward, inverse };

/// Radix-2 2-D DFT. Forward is unnormalized; inverse carries the 1/(H·W) factor.
/// Throws SizingError unless both dimensions are powers of two and ≥ 2.
ComplexGrid2D fft2(const ComplexGrid2D& g, FftDirection direction);

/// Moves the zero frequency to (H/2, W/2). For even sizes the shift is its own inverse;
/// `ifftshift` is provided for readability at call sites.
ComplexGrid2D fftshift(const ComplexGrid2D& g);
ComplexGrid2D ifftshift(const ComplexGrid2D& g);

bool is_power_of_two(std::size_t n);

}  // namespace ptmark
