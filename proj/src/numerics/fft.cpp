#include "ptmark/numerics/fft.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "ptmark/errors.hpp"

namespace ptmark {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace {

using cd = std::complex<double>;

// In-place iterative Cooley–Tukey on a strided sequence.
void fft1d(cd* data, std::size_t n, std::size_t stride, bool inverse, std::vector<cd>& scratch) {
    scratch.resize(n);
    for (std::size_t i = 0; i < n; ++i) scratch[i] = data[i * stride];

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(scratch[i], scratch[j]);
    }

    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        for (std::size_t k = 0; k < half; ++k) {
            // twiddles computed directly rather than by recurrence to keep round-off at 1 ulp
            const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
            const cd w(std::cos(angle), std::sin(angle));
            for (std::size_t start = 0; start < n; start += len) {
                const cd u = scratch[start + k];
                const cd v = scratch[start + k + half] * w;
                scratch[start + k] = u + v;
                scratch[start + k + half] = u - v;
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) data[i * stride] = scratch[i];
}

ComplexGrid2D roll(const ComplexGrid2D& g, std::size_t di, std::size_t dj) {
    ComplexGrid2D out(g.height, g.width);
    for (std::size_t i = 0; i < g.height; ++i)
        for (std::size_t j = 0; j < g.width; ++j) out((i + di) % g.height, (j + dj) % g.width) = g(i, j);
    return out;
}

}  // namespace

ComplexGrid2D fft2(const ComplexGrid2D& g, FftDirection direction) {
    if (!is_power_of_two(g.height) || !is_power_of_two(g.width) || g.height < 2 || g.width < 2) {
        std::ostringstream msg;
        msg << "fft2: dimensions must be powers of two >= 2, got " << g.height << "x" << g.width;
        throw SizingError(msg.str());
    }
    if (g.values.size() != g.height * g.width) throw ShapeError("fft2: value count does not match dimensions");

    const bool inverse = direction == FftDirection::inverse;
    ComplexGrid2D out = g;
    std::vector<cd> scratch;
    for (std::size_t i = 0; i < out.height; ++i) fft1d(out.values.data() + i * out.width, out.width, 1, inverse, scratch);
    for (std::size_t j = 0; j < out.width; ++j) fft1d(out.values.data() + j, out.height, out.width, inverse, scratch);

    if (inverse) {
        const double scale = 1.0 / static_cast<double>(out.height * out.width);
        for (auto& v : out.values) v *= scale;
    }
    return out;
}

ComplexGrid2D fftshift(const ComplexGrid2D& g) { return roll(g, g.height / 2, g.width / 2); }

ComplexGrid2D ifftshift(const ComplexGrid2D& g) { return roll(g, g.height - g.height / 2, g.width - g.width / 2); }

}  // namespace ptmark
