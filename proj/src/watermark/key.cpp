#include "ptmark/watermark/key.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "ptmark/errors.hpp"
#include "ptmark/numerics/fft.hpp"
#include "ptmark/numerics/rng.hpp"

namespace ptmark {

namespace {

long squared_distance(const SpectrumCoord& c, std::size_t h, std::size_t w) {
    const long di = static_cast<long>(c.row) - static_cast<long>(h / 2);
    const long dj = static_cast<long>(c.col) - static_cast<long>(w / 2);
    return di * di + dj * dj;
}

}  // namespace

int ring_index(const SpectrumCoord& c, std::size_t h, std::size_t w) {
    const long d2 = squared_distance(c, h, w);
    long r = static_cast<long>(std::sqrt(static_cast<double>(d2)));
    while (r * r > d2) --r;
    while ((r + 1) * (r + 1) <= d2) ++r;
    return static_cast<int>(r);
}

SpectrumCoord conjugate_coord(const SpectrumCoord& c, std::size_t h, std::size_t w) {
    return {(h - c.row) % h, (w - c.col) % w};
}

std::string WatermarkKey::fingerprint() const {
    std::ostringstream canon;
    canon << "ring-key:" << params.seed << ":" << params.radius << ":" << params.channel << ":" << params.height
          << ":" << params.width;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canon.str())));
    return buf;
}

WatermarkKey keygen(const KeyParams& params) {
    const std::size_t h = params.height;
    const std::size_t w = params.width;
    if (!is_power_of_two(h) || !is_power_of_two(w) || h < 2 || w < 2) {
        std::ostringstream msg;
        msg << "keygen: grid " << h << "x" << w << " must have power-of-two sides >= 2";
        throw SizingError(msg.str());
    }
    if (params.radius < 1 || 2 * static_cast<std::size_t>(params.radius) >= std::min(h, w)) {
        std::ostringstream msg;
        msg << "keygen: radius " << params.radius << " must be in [1, min(h, w)/2)";
        throw DomainError(msg.str());
    }

    SeededRng rng(derive_seed(params.seed, std::string_view("ring-pattern")));
    const Latent noise = gaussian_grid(rng, 1, h, w);
    const ComplexGrid2D spectrum = fftshift(fft2(ComplexGrid2D::from_real(h, w, noise.channel(0)), FftDirection::forward));

    WatermarkKey key;
    key.params = params;
    const long r2 = static_cast<long>(params.radius) * params.radius;
    std::map<int, std::pair<std::complex<double>, std::size_t>> ring_sums;
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            const SpectrumCoord c{i, j};
            const long d2 = squared_distance(c, h, w);
            if (d2 == 0 || d2 >= r2) continue;
            key.mask.push_back(c);
            auto& [sum, count] = ring_sums[ring_index(c, h, w)];
            sum += spectrum(i, j);
            ++count;
        }
    }

    std::map<int, std::complex<double>> ring_value;
    for (const auto& [radius, acc] : ring_sums) {
        const std::complex<double> mean = acc.first / static_cast<double>(acc.second);
        // rings are symmetric under point reflection, so W[-m] = conj(W[m]) forces a real value
        const std::complex<double> symmetric = 0.5 * (mean + std::conj(mean));
        ring_value[radius] = symmetric;
        key.rings.push_back({radius, symmetric});
    }
    key.pattern.reserve(key.mask.size());
    for (const auto& c : key.mask) key.pattern.push_back(ring_value.at(ring_index(c, h, w)));
    return key;
}

WatermarkKey keygen(std::uint64_t seed, int radius, std::size_t channel, std::size_t h, std::size_t w) {
    return keygen(KeyParams{seed, radius, channel, h, w});
}

}  // namespace ptmark
