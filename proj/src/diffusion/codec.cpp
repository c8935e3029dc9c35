#include "ptmark/diffusion/codec.hpp"

#include <algorithm>
#include <sstream>

#include "ptmark/errors.hpp"

namespace ptmark {

namespace {
constexpr std::size_t kCodecChannels = 4;
constexpr double kScale = 2.0 * kCodecLatentBound;
}  // namespace

Image decode(const Latent& z) {
    if (z.channels != kCodecChannels) {
        std::ostringstream msg;
        msg << "decode: codec expects 4 latent channels, got " << z.channels;
        throw ShapeError(msg.str());
    }
    Image x(2 * z.height, 2 * z.width);
    for (std::size_t c = 0; c < kCodecChannels; ++c) {
        const std::size_t di = c / 2;
        const std::size_t dj = c % 2;
        for (std::size_t i = 0; i < z.height; ++i)
            for (std::size_t j = 0; j < z.width; ++j)
                x(2 * i + di, 2 * j + dj) = std::clamp((z.at(c, i, j) + kCodecLatentBound) / kScale, 0.0, 1.0);
    }
    return x;
}

Latent encode(const Image& x) {
    if (x.height % 2 != 0 || x.width % 2 != 0 || x.data.size() != x.height * x.width) {
        std::ostringstream msg;
        msg << "encode: image dimensions must be even, got " << x.height << "x" << x.width;
        throw ShapeError(msg.str());
    }
    Latent z(kCodecChannels, x.height / 2, x.width / 2);
    for (std::size_t c = 0; c < kCodecChannels; ++c) {
        const std::size_t di = c / 2;
        const std::size_t dj = c % 2;
        for (std::size_t i = 0; i < z.height; ++i)
            for (std::size_t j = 0; j < z.width; ++j)
                z.at(c, i, j) = x(2 * i + di, 2 * j + dj) * kScale - kCodecLatentBound;
    }
    return z;
}

}  // namespace ptmark
