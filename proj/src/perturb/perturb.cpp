#include "ptmark/perturb/perturb.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ptmark/diffusion/codec.hpp"
#include "ptmark/diffusion/ddim.hpp"
#include "ptmark/errors.hpp"

namespace ptmark {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Mirror index into [0, n) without repeating the edge sample (d c b | a b c d | c b a).
std::size_t reflect(long i, std::size_t n) {
    if (n == 1) return 0;
    const long period = 2 * (static_cast<long>(n) - 1);
    long m = i % period;
    if (m < 0) m += period;
    return static_cast<std::size_t>(m < static_cast<long>(n) ? m : period - m);
}

constexpr std::array<int, 64> kLuminance = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,  14, 13, 16, 24, 40,  57,
    69, 56, 14, 17, 22,  29,  51,  87,  80, 62, 18, 22, 37,  56,  68,  109, 103, 77, 24, 35, 55, 64,
    81, 104, 113, 92, 49, 64, 78,  87,  103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

Image jpeg(const Image& x, int quality) {
    const std::vector<int> q = jpeg_quant_table(quality);
    std::array<std::array<double, 8>, 8> basis{};
    for (int u = 0; u < 8; ++u) {
        const double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
        for (int n = 0; n < 8; ++n) basis[u][n] = cu * std::cos((2 * n + 1) * u * std::numbers::pi / 16.0);
    }

    Image out(x.height, x.width);
    std::array<double, 64> block{};
    std::array<double, 64> tmp{};
    for (std::size_t bi = 0; bi < x.height; bi += 8) {
        for (std::size_t bj = 0; bj < x.width; bj += 8) {
            // 8-bit samples, level-shifted; partial edge blocks replicate the border
            for (std::size_t i = 0; i < 8; ++i)
                for (std::size_t j = 0; j < 8; ++j) {
                    const std::size_t si = std::min(bi + i, x.height - 1);
                    const std::size_t sj = std::min(bj + j, x.width - 1);
                    block[i * 8 + j] = std::round(clamp01(x(si, sj)) * 255.0) - 128.0;
                }
            // separable forward DCT: rows then columns
            for (int i = 0; i < 8; ++i)
                for (int v = 0; v < 8; ++v) {
                    double acc = 0.0;
                    for (int n = 0; n < 8; ++n) acc += basis[v][n] * block[i * 8 + n];
                    tmp[i * 8 + v] = acc;
                }
            for (int u = 0; u < 8; ++u)
                for (int v = 0; v < 8; ++v) {
                    double acc = 0.0;
                    for (int n = 0; n < 8; ++n) acc += basis[u][n] * tmp[n * 8 + v];
                    const int k = u * 8 + v;
                    block[k] = std::round(acc / q[k]) * q[k];
                }
            for (int u = 0; u < 8; ++u)
                for (int j = 0; j < 8; ++j) {
                    double acc = 0.0;
                    for (int v = 0; v < 8; ++v) acc += basis[v][j] * block[u * 8 + v];
                    tmp[u * 8 + j] = acc;
                }
            for (std::size_t i = 0; i < 8 && bi + i < x.height; ++i)
                for (std::size_t j = 0; j < 8 && bj + j < x.width; ++j) {
                    double acc = 0.0;
                    for (std::size_t u = 0; u < 8; ++u) acc += basis[u][i] * tmp[u * 8 + j];
                    out(bi + i, bj + j) = std::clamp(std::round(acc + 128.0), 0.0, 255.0) / 255.0;
                }
        }
    }
    return out;
}

Image crop(const Image& x, double area, SeededRng& rng) {
    const auto side = [&](std::size_t n) {
        return std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(std::sqrt(area) * static_cast<double>(n))),
                                       1, n);
    };
    const std::size_t ch = side(x.height);
    const std::size_t cw = side(x.width);
    const auto offset = [&](std::size_t n, std::size_t c) {
        const std::size_t slack = n - c;
        return slack == 0 ? std::size_t{0}
                          : std::min(slack, static_cast<std::size_t>(rng.uniform() * static_cast<double>(slack + 1)));
    };
    const std::size_t oi = offset(x.height, ch);
    const std::size_t oj = offset(x.width, cw);

    Image out(x.height, x.width);
    for (std::size_t i = 0; i < x.height; ++i) {
        const std::size_t si = oi + i * ch / x.height;
        for (std::size_t j = 0; j < x.width; ++j) out(i, j) = x(si, oj + j * cw / x.width);
    }
    return out;
}

Image blur(const Image& x, int radius) {
    if (radius == 0) return x;
    const double sigma = radius / 2.0;
    const long half = 2L * radius;
    std::vector<double> kernel(static_cast<std::size_t>(2 * half + 1));
    double total = 0.0;
    for (long k = -half; k <= half; ++k) {
        const double v = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
        kernel[static_cast<std::size_t>(k + half)] = v;
        total += v;
    }
    for (double& v : kernel) v /= total;

    Image rows(x.height, x.width);
    for (std::size_t i = 0; i < x.height; ++i)
        for (std::size_t j = 0; j < x.width; ++j) {
            double acc = 0.0;
            for (long k = -half; k <= half; ++k)
                acc += kernel[static_cast<std::size_t>(k + half)] * x(i, reflect(static_cast<long>(j) + k, x.width));
            rows(i, j) = acc;
        }
    Image out(x.height, x.width);
    for (std::size_t i = 0; i < x.height; ++i)
        for (std::size_t j = 0; j < x.width; ++j) {
            double acc = 0.0;
            for (long k = -half; k <= half; ++k)
                acc += kernel[static_cast<std::size_t>(k + half)] * rows(reflect(static_cast<long>(i) + k, x.height), j);
            out(i, j) = clamp01(acc);
        }
    return out;
}

Image noise(const Image& x, double intensity, SeededRng& rng) {
    if (intensity == 0.0) return x;
    Image out = x;
    for (double& v : out.data) v = clamp01(v + intensity * rng.normal());
    return out;
}

Image brightness(const Image& x, double factor) {
    Image out = x;
    for (double& v : out.data) v = clamp01(v * factor);
    return out;
}

Image rotate(const Image& x, double degrees, SeededRng& rng) {
    const double angle = degrees == 0.0 ? 0.0 : rng.uniform(-degrees, degrees);
    if (angle == 0.0) return x;
    const double rad = angle * std::numbers::pi / 180.0;
    const double c = std::cos(rad);
    const double s = std::sin(rad);
    const double ci = (static_cast<double>(x.height) - 1.0) / 2.0;
    const double cj = (static_cast<double>(x.width) - 1.0) / 2.0;

    Image out(x.height, x.width);
    for (std::size_t i = 0; i < x.height; ++i) {
        for (std::size_t j = 0; j < x.width; ++j) {
            // inverse map: output pixel ← source position rotated by −angle
            const double di = static_cast<double>(i) - ci;
            const double dj = static_cast<double>(j) - cj;
            const double si = c * di - s * dj + ci;
            const double sj = s * di + c * dj + cj;
            const double fi = std::floor(si);
            const double fj = std::floor(sj);
            const double ti = si - fi;
            const double tj = sj - fj;
            const long i0 = static_cast<long>(fi);
            const long j0 = static_cast<long>(fj);
            const auto px = [&](long a, long b) { return x(reflect(a, x.height), reflect(b, x.width)); };
            const double v = (1 - ti) * ((1 - tj) * px(i0, j0) + tj * px(i0, j0 + 1)) +
                             ti * ((1 - tj) * px(i0 + 1, j0) + tj * px(i0 + 1, j0 + 1));
            out(i, j) = clamp01(v);
        }
    }
    return out;
}

Image regenerate(const Image& x, int steps, SeededRng& rng, const RegenerateContext* ctx) {
    if (ctx == nullptr || ctx->denoiser == nullptr)
        throw DomainError("apply_perturbation: regenerate needs a denoiser context");
    const ToyDenoiser& d = *ctx->denoiser;
    const NoiseSchedule& s = d.schedule();
    const Embedding e = ctx->embedding.dim() == 0 ? null_embed(d.params().dim) : ctx->embedding;

    const Timestep start = s.nearest_ladder_step(steps);
    Latent z = encode(x);
    d.require_latent(z, "regenerate");
    if (start == 0) return decode(z);
    z = forward_diffuse(z, start, s, rng);
    for (std::size_t k = s.step_index(start); k < s.num_steps(); ++k) {
        const Timestep t = s.steps()[k];
        z = ddim_step(z, denoise_eps(d, z, t, e), t, s);
    }
    return decode(z);
}

}  // namespace

std::vector<int> jpeg_quant_table(int quality) {
    if (quality < 1 || quality > 100) throw DomainError("jpeg: quality must lie in [1, 100]");
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    std::vector<int> q(64);
    for (std::size_t k = 0; k < 64; ++k) q[k] = std::clamp((kLuminance[k] * scale + 50) / 100, 1, 255);
    return q;
}

void validate(const PerturbationSpec& spec) {
    const auto fail = [](const std::string& what) { throw DomainError("perturbation: " + what); };
    std::visit(overloaded{
                   [&](const Jpeg& p) {
                       if (p.quality < 1 || p.quality > 100) fail("jpeg quality must lie in [1, 100]");
                   },
                   [&](const Crop& p) {
                       if (!(p.area_fraction > 0.0 && p.area_fraction <= 1.0)) fail("crop area must lie in (0, 1]");
                   },
                   [&](const Blur& p) {
                       if (p.radius < 0) fail("blur radius must be >= 0");
                   },
                   [&](const Noise& p) {
                       if (!(p.intensity >= 0.0 && p.intensity <= 1.0)) fail("noise intensity must lie in [0, 1]");
                   },
                   [&](const Brightness& p) {
                       if (!(p.factor > 0.0) || !std::isfinite(p.factor)) fail("brightness factor must be > 0");
                   },
                   [&](const Rotate& p) {
                       if (!(p.degrees >= 0.0 && p.degrees <= 180.0)) fail("rotation bound must lie in [0, 180]");
                   },
                   [&](const Regenerate& p) {
                       if (p.steps < 0) fail("regenerate steps must be >= 0");
                   },
               },
               spec);
}

Image apply_perturbation(const Image& x, const PerturbationSpec& spec, SeededRng& rng, const RegenerateContext* ctx) {
    validate(spec);
    if (x.data.size() != x.height * x.width) throw ShapeError("apply_perturbation: malformed image");
    return std::visit(overloaded{
                          [&](const Jpeg& p) { return jpeg(x, p.quality); },
                          [&](const Crop& p) { return crop(x, p.area_fraction, rng); },
                          [&](const Blur& p) { return blur(x, p.radius); },
                          [&](const Noise& p) { return noise(x, p.intensity, rng); },
                          [&](const Brightness& p) { return brightness(x, p.factor); },
                          [&](const Rotate& p) { return rotate(x, p.degrees, rng); },
                          [&](const Regenerate& p) { return regenerate(x, p.steps, rng, ctx); },
                      },
                      spec);
}

std::vector<PerturbationSpec> severity_defaults() {
    return {Jpeg{25}, Crop{0.75}, Blur{4}, Noise{0.10}, Brightness{2.0}, Rotate{75.0}, Regenerate{600}};
}

std::string kind_name(const PerturbationSpec& spec) {
    static constexpr const char* names[] = {"jpeg", "crop", "blur", "noise", "brightness", "rotate", "regenerate"};
    return names[spec.index()];
}

std::string label(const PerturbationSpec& spec) {
    std::ostringstream out;
    out << kind_name(spec) << '_';
    std::visit(overloaded{
                   [&](const Jpeg& p) { out << p.quality; },
                   [&](const Crop& p) { out << p.area_fraction; },
                   [&](const Blur& p) { out << p.radius; },
                   [&](const Noise& p) { out << p.intensity; },
                   [&](const Brightness& p) { out << p.factor; },
                   [&](const Rotate& p) { out << p.degrees; },
                   [&](const Regenerate& p) { out << p.steps; },
               },
               spec);
    return out.str();
}

nlohmann::ordered_json to_json(const PerturbationSpec& spec) {
    nlohmann::ordered_json j;
    j["kind"] = kind_name(spec);
    std::visit(overloaded{
                   [&](const Jpeg& p) { j["quality"] = p.quality; },
                   [&](const Crop& p) { j["area_fraction"] = p.area_fraction; },
                   [&](const Blur& p) { j["radius"] = p.radius; },
                   [&](const Noise& p) { j["intensity"] = p.intensity; },
                   [&](const Brightness& p) { j["factor"] = p.factor; },
                   [&](const Rotate& p) { j["degrees"] = p.degrees; },
                   [&](const Regenerate& p) { j["steps"] = p.steps; },
               },
               spec);
    return j;
}

PerturbationSpec perturbation_from_json(const nlohmann::json& j) {
    PerturbationSpec spec;
    try {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "jpeg")
            spec = Jpeg{j.at("quality").get<int>()};
        else if (kind == "crop")
            spec = Crop{j.at("area_fraction").get<double>()};
        else if (kind == "blur")
            spec = Blur{j.at("radius").get<int>()};
        else if (kind == "noise")
            spec = Noise{j.at("intensity").get<double>()};
        else if (kind == "brightness")
            spec = Brightness{j.at("factor").get<double>()};
        else if (kind == "rotate")
            spec = Rotate{j.at("degrees").get<double>()};
        else if (kind == "regenerate")
            spec = Regenerate{j.at("steps").get<int>()};
        else
            throw ConfigError("unknown perturbation kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("perturbation: ") + e.what());
    }
    try {
        validate(spec);
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

}  // namespace ptmark
