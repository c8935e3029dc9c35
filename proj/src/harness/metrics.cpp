#include "ptmark/harness/metrics.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "ptmark/errors.hpp"

namespace ptmark {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr std::size_t kScales = 3;
constexpr std::size_t kMinCoarseSide = 32;

void require_same(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) {
        std::ostringstream msg;
        msg << what << ": shapes " << a.height << "x" << a.width << " and " << b.height << "x" << b.width
            << " differ";
        throw ShapeError(msg.str());
    }
}

std::array<double, kWindow * kWindow> gaussian_window() {
    std::array<double, kWindow * kWindow> w{};
    double total = 0.0;
    const int half = kWindow / 2;
    for (int i = 0; i < kWindow; ++i)
        for (int j = 0; j < kWindow; ++j) {
            const double d2 = static_cast<double>((i - half) * (i - half) + (j - half) * (j - half));
            w[static_cast<std::size_t>(i * kWindow + j)] = std::exp(-d2 / (2.0 * kSigma * kSigma));
            total += w[static_cast<std::size_t>(i * kWindow + j)];
        }
    for (double& v : w) v /= total;
    return w;
}

struct SsimParts {
    double ssim = 0.0;
    double cs = 0.0;  // contrast-structure term alone
};

SsimParts ssim_parts(const Image& a, const Image& b) {
    if (a.height < kWindow || a.width < kWindow) {
        std::ostringstream msg;
        msg << "ssim: image " << a.height << "x" << a.width << " is smaller than the " << kWindow << "x" << kWindow
            << " window";
        throw SizingError(msg.str());
    }
    static const auto window = gaussian_window();
    const std::size_t rows = a.height - kWindow + 1;
    const std::size_t cols = a.width - kWindow + 1;

    double ssim_sum = 0.0;
    double cs_sum = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
            for (std::size_t u = 0; u < kWindow; ++u)
                for (std::size_t v = 0; v < kWindow; ++v) {
                    const double w = window[u * kWindow + v];
                    const double x = a(i + u, j + v);
                    const double y = b(i + u, j + v);
                    ma += w * x;
                    mb += w * y;
                    saa += w * x * x;
                    sbb += w * y * y;
                    sab += w * (x * y);
                }
            const double va = saa - ma * ma;
            const double vb = sbb - mb * mb;
            const double cov = sab - ma * mb;
            const double cs = (2.0 * cov + kC2) / (va + vb + kC2);
            const double l = (2.0 * ma * mb + kC1) / (ma * ma + mb * mb + kC1);
            ssim_sum += l * cs;
            cs_sum += cs;
        }
    }
    const double n = static_cast<double>(rows * cols);
    return {ssim_sum / n, cs_sum / n};
}

Image downsample(const Image& x) {
    Image out(x.height / 2, x.width / 2);
    for (std::size_t i = 0; i < out.height; ++i)
        for (std::size_t j = 0; j < out.width; ++j)
            out(i, j) = 0.25 * (x(2 * i, 2 * j) + x(2 * i + 1, 2 * j) + x(2 * i, 2 * j + 1) + x(2 * i + 1, 2 * j + 1));
    return out;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
    require_same(a, b, "psnr");
    if (a.size() == 0) throw ShapeError("psnr: empty images");
    double sse = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a.data[k] - b.data[k];
        sse += d * d;
    }
    if (sse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(static_cast<double>(a.size()) / sse));
}

double ssim(const Image& a, const Image& b) {
    require_same(a, b, "ssim");
    return ssim_parts(a, b).ssim;
}

double msssim(const Image& a, const Image& b) {
    require_same(a, b, "msssim");
    const std::size_t shrink = std::size_t{1} << (kScales - 1);
    if (std::min(a.height, a.width) / shrink < kMinCoarseSide) {
        std::ostringstream msg;
        msg << "msssim: image " << a.height << "x" << a.width << " is too small for " << kScales << " scales";
        throw SizingError(msg.str());
    }
    // first three of the standard five-scale weights, renormalized to sum to 1
    constexpr std::array<double, kScales> raw = {0.0448, 0.2856, 0.3001};
    const double total = raw[0] + raw[1] + raw[2];

    Image x = a;
    Image y = b;
    double result = 1.0;
    for (std::size_t s = 0; s < kScales; ++s) {
        const SsimParts p = ssim_parts(x, y);
        // negative terms have no meaningful fractional power; clamp them as the reference code does
        const double term = s + 1 == kScales ? p.ssim : p.cs;
        result *= std::pow(std::max(term, 0.0), raw[s] / total);
        if (s + 1 < kScales) {
            x = downsample(x);
            y = downsample(y);
        }
    }
    return result;
}

}  // namespace ptmark
