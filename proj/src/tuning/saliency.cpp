#include "ptmark/tuning/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ptmark/errors.hpp"

namespace ptmark {

namespace {
constexpr double kEmptyDifference = 1e-9;
}

std::size_t SaliencyMask::active_cells() const {
    return static_cast<std::size_t>(std::count(plane.begin(), plane.end(), std::uint8_t{1}));
}

double SaliencyMask::active_fraction() const {
    return plane.empty() ? 0.0 : static_cast<double>(active_cells()) / static_cast<double>(plane.size());
}

SaliencyMask empty_mask(std::size_t channels, std::size_t height, std::size_t width) {
    return {channels, height, width, std::vector<std::uint8_t>(height * width, 0)};
}

SaliencyMask saliency_mask(const Latent& z_hat, const Latent& z_star, double q) {
    require_same_shape(z_hat, z_star, "saliency_mask");
    if (!(q > 0.0 && q < 1.0)) throw DomainError("saliency_mask: q must lie in (0, 1)");
    const std::size_t h = z_hat.height;
    const std::size_t w = z_hat.width;
    const std::size_t n = h * w;

    std::vector<double> diff(n, 0.0);
    for (std::size_t c = 0; c < z_hat.channels; ++c) {
        const auto a = z_hat.channel(c);
        const auto b = z_star.channel(c);
        for (std::size_t k = 0; k < n; ++k) diff[k] += std::abs(a[k] - b[k]);
    }
    SaliencyMask mask = empty_mask(z_hat.channels, h, w);
    if (n == 0 || *std::max_element(diff.begin(), diff.end()) < kEmptyDifference) return mask;

    std::vector<double> blurred(n, 0.0);
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            double acc = 0.0;
            for (std::size_t ii = i > 0 ? i - 1 : 0; ii <= std::min(i + 1, h - 1); ++ii)
                for (std::size_t jj = j > 0 ? j - 1 : 0; jj <= std::min(j + 1, w - 1); ++jj) acc += diff[ii * w + jj];
            blurred[i * w + j] = acc / 9.0;
        }
    }

    const auto k = static_cast<std::size_t>(std::llround(q * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return blurred[a] > blurred[b]; });
    for (std::size_t r = 0; r < std::min(k, n) && blurred[order[r]] > 0.0; ++r) mask.plane[order[r]] = 1;
    return mask;
}

}  // namespace ptmark
