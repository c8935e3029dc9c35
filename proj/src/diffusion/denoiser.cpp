#include "ptmark/diffusion/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include "ptmark/errors.hpp"
#include "ptmark/numerics/rng.hpp"

namespace ptmark {

namespace {

// Weight scales. Kernels and mixer are identity plus seeded jitter so the linear part
// stays close to the identity (ε ≈ z at high noise) with a frequency-dependent gain.
constexpr double kKernelJitter = 0.01;
constexpr double kMixJitter = 0.01;
constexpr double kModulationScale = 0.15;  // std of (W_h e)_c for unit-norm e
constexpr double kBiasScale = 0.15;
constexpr double kAdditiveScale = 0.2;    // std of (W_m e)_c for unit-norm e
constexpr double kTargetNorm = 1.0;

std::complex<double> kernel_response(const double* k, double fi, double fj) {
    std::complex<double> acc{};
    for (int a = -1; a <= 1; ++a) {
        for (int b = -1; b <= 1; ++b) {
            const double phase = -2.0 * std::numbers::pi * (fi * a + fj * b);
            acc += k[(a + 1) * 3 + (b + 1)] * std::complex<double>(std::cos(phase), std::sin(phase));
        }
    }
    return acc;
}

// Largest singular value of a small complex matrix via power iteration on AᴴA.
double matrix_spectral_norm(const std::vector<std::complex<double>>& a, std::size_t n) {
    std::vector<std::complex<double>> v(n, 1.0), tmp(n), next(n);
    double sigma2 = 0.0;
    for (int it = 0; it < 200; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            tmp[i] = 0.0;
            for (std::size_t j = 0; j < n; ++j) tmp[i] += a[i * n + j] * v[j];
        }
        for (std::size_t j = 0; j < n; ++j) {
            next[j] = 0.0;
            for (std::size_t i = 0; i < n; ++i) next[j] += std::conj(a[i * n + j]) * tmp[i];
        }
        double norm = 0.0;
        for (const auto& x : next) norm += std::norm(x);
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        if (std::abs(norm - sigma2) <= 1e-15 * norm) {
            sigma2 = norm;
            break;
        }
        sigma2 = norm;
        for (std::size_t j = 0; j < n; ++j) v[j] = next[j] / norm;
    }
    return std::sqrt(sigma2);
}

// With circular padding the linear part is block-diagonal in frequency: at each
// frequency it acts on the channel vector as mix · diag(K̂_c(f)).
double linear_spectral_norm(const std::vector<double>& kernels, const std::vector<double>& mix, std::size_t c,
                            std::size_t h, std::size_t w) {
    double peak = 0.0;
    std::vector<std::complex<double>> block(c * c);
    std::vector<std::complex<double>> response(c);
    for (std::size_t fi = 0; fi < h; ++fi) {
        for (std::size_t fj = 0; fj < w; ++fj) {
            for (std::size_t ch = 0; ch < c; ++ch)
                response[ch] = kernel_response(&kernels[ch * 9], static_cast<double>(fi) / static_cast<double>(h),
                                               static_cast<double>(fj) / static_cast<double>(w));
            for (std::size_t i = 0; i < c; ++i)
                for (std::size_t j = 0; j < c; ++j) block[i * c + j] = mix[i * c + j] * response[j];
            peak = std::max(peak, matrix_spectral_norm(block, c));
        }
    }
    return peak;
}

}  // namespace

ToyDenoiser::ToyDenoiser(const DenoiserParams& params, const NoiseSchedule& schedule)
    : params_(params), schedule_(schedule) {
    const std::size_t c = params.channels;
    const std::size_t d = params.dim;
    const std::size_t T = schedule.num_steps();
    if (c == 0 || d == 0 || params.height < 3 || params.width < 3)
        throw DomainError("ToyDenoiser: channels, dim must be positive and spatial size >= 3");

    SeededRng rng(derive_seed(params.seed, std::string_view("toy-denoiser")));

    kernels_.assign(c * 9, 0.0);
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t k = 0; k < 9; ++k) kernels_[ch * 9 + k] = kKernelJitter * rng.normal();
        kernels_[ch * 9 + 4] += 1.0;
    }
    mix_.assign(c * c, 0.0);
    for (std::size_t i = 0; i < c; ++i) {
        for (std::size_t j = 0; j < c; ++j) mix_[i * c + j] = kMixJitter * rng.normal();
        mix_[i * c + i] += 1.0;
    }
    const double mod_std = kModulationScale / std::sqrt(static_cast<double>(d));
    w_mod_.resize(c * d);
    for (double& v : w_mod_) v = mod_std * rng.normal();
    bias_.resize(T * c);
    for (double& v : bias_) v = kBiasScale * rng.normal();
    const double add_std = kAdditiveScale / std::sqrt(static_cast<double>(d));
    w_add_.resize(c * d);
    for (double& v : w_add_) v = add_std * rng.normal();

    const double bound = linear_spectral_norm(kernels_, mix_, c, params.height, params.width);
    const double rescale = kTargetNorm / bound;
    for (double& v : kernels_) v *= rescale;
    norm_bound_ = bound * rescale;
}

ToyDenoiser ToyDenoiser::zero(const DenoiserParams& params, const NoiseSchedule& schedule) {
    ToyDenoiser d(params, schedule);
    std::fill(d.kernels_.begin(), d.kernels_.end(), 0.0);
    std::fill(d.mix_.begin(), d.mix_.end(), 0.0);
    std::fill(d.w_mod_.begin(), d.w_mod_.end(), 0.0);
    std::fill(d.bias_.begin(), d.bias_.end(), 0.0);
    std::fill(d.w_add_.begin(), d.w_add_.end(), 0.0);
    d.norm_bound_ = 0.0;
    return d;
}

void ToyDenoiser::clear_bias() { std::fill(bias_.begin(), bias_.end(), 0.0); }

double ToyDenoiser::linear_norm_bound() const { return norm_bound_; }

void ToyDenoiser::require_latent(const Latent& z, const char* what) const {
    if (z.channels != params_.channels || z.height != params_.height || z.width != params_.width ||
        z.data.size() != z.channels * z.height * z.width) {
        std::ostringstream msg;
        msg << what << ": latent " << z.channels << "x" << z.height << "x" << z.width << " does not match denoiser "
            << params_.channels << "x" << params_.height << "x" << params_.width;
        throw ShapeError(msg.str());
    }
}

void ToyDenoiser::require_embedding(const Embedding& e, const char* what) const {
    if (e.dim() != params_.dim) {
        std::ostringstream msg;
        msg << what << ": embedding dim " << e.dim() << " does not match denoiser dim " << params_.dim;
        throw ShapeError(msg.str());
    }
}

Latent ToyDenoiser::linear_part(const Latent& z) const {
    require_latent(z, "ToyDenoiser::linear_part");
    const std::size_t c = params_.channels;
    const std::size_t h = params_.height;
    const std::size_t w = params_.width;

    Latent conv(c, h, w);
    for (std::size_t ch = 0; ch < c; ++ch) {
        const double* k = &kernels_[ch * 9];
        for (std::size_t i = 0; i < h; ++i) {
            const std::size_t rows[3] = {(i + h - 1) % h, i, (i + 1) % h};
            for (std::size_t j = 0; j < w; ++j) {
                const std::size_t cols[3] = {(j + w - 1) % w, j, (j + 1) % w};
                double acc = 0.0;
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) acc += k[a * 3 + b] * z.at(ch, rows[a], cols[b]);
                conv.at(ch, i, j) = acc;
            }
        }
    }

    Latent out(c, h, w);
    const std::size_t plane = h * w;
    for (std::size_t o = 0; o < c; ++o) {
        double* dst = out.data.data() + o * plane;
        for (std::size_t in = 0; in < c; ++in) {
            const double m = mix_[o * c + in];
            const double* src = conv.data.data() + in * plane;
            for (std::size_t p = 0; p < plane; ++p) dst[p] += m * src[p];
        }
    }
    return out;
}

Modulation ToyDenoiser::modulation(Timestep t, const Embedding& e) const {
    require_embedding(e, "ToyDenoiser::modulation");
    const std::size_t c = params_.channels;
    const std::size_t d = params_.dim;
    const std::size_t row = schedule_.step_index(t);

    Modulation m;
    m.pre_activation.resize(c);
    m.gate.resize(c);
    m.additive.resize(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
        double u = bias_[row * c + ch];
        double a = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            u += w_mod_[ch * d + k] * e.values[k];
            a += w_add_[ch * d + k] * e.values[k];
        }
        m.pre_activation[ch] = u;
        m.gate[ch] = 1.0 + params_.gamma * std::tanh(u);
        m.additive[ch] = params_.beta_add * a;
    }
    return m;
}

Latent ToyDenoiser::modulate(const Latent& linear, const Modulation& m) const {
    require_latent(linear, "ToyDenoiser::modulate");
    Latent out(linear.channels, linear.height, linear.width);
    const std::size_t plane = linear.plane();
    for (std::size_t ch = 0; ch < linear.channels; ++ch) {
        const double g = m.gate[ch];
        const double a = m.additive[ch];
        const double* src = linear.data.data() + ch * plane;
        double* dst = out.data.data() + ch * plane;
        for (std::size_t p = 0; p < plane; ++p) dst[p] = src[p] * g + a;
    }
    return out;
}

Embedding ToyDenoiser::modulation_vjp(const Latent& linear, Timestep t, const Embedding& e,
                                      const Latent& cotangent) const {
    require_latent(linear, "ToyDenoiser::modulation_vjp");
    require_latent(cotangent, "ToyDenoiser::modulation_vjp (cotangent)");
    const Modulation m = modulation(t, e);
    const std::size_t c = params_.channels;
    const std::size_t d = params_.dim;
    const std::size_t plane = linear.plane();

    Embedding grad(d);
    for (std::size_t ch = 0; ch < c; ++ch) {
        const double* lin = linear.data.data() + ch * plane;
        const double* cot = cotangent.data.data() + ch * plane;
        double cot_dot_lin = 0.0;
        double cot_sum = 0.0;
        for (std::size_t p = 0; p < plane; ++p) {
            cot_dot_lin += cot[p] * lin[p];
            cot_sum += cot[p];
        }
        const double th = std::tanh(m.pre_activation[ch]);
        const double d_u = cot_dot_lin * params_.gamma * (1.0 - th * th);
        const double d_a = cot_sum * params_.beta_add;
        for (std::size_t k = 0; k < d; ++k) grad.values[k] += d_u * w_mod_[ch * d + k] + d_a * w_add_[ch * d + k];
    }
    return grad;
}

Latent denoise_eps(const ToyDenoiser& d, const Latent& z, Timestep t, const Embedding& e) {
    return d.modulate(d.linear_part(z), d.modulation(t, e));
}

Embedding denoise_eps_vjp(const ToyDenoiser& d, const Latent& z, Timestep t, const Embedding& e,
                          const Latent& cotangent) {
    d.require_latent(cotangent, "denoise_eps_vjp");
    return d.modulation_vjp(d.linear_part(z), t, e, cotangent);
}

Latent guide(const Latent& eps_cond, const Latent& eps_null, double w) {
    if (!std::isfinite(w)) throw DomainError("cfg_eps: guidance scale must be finite");
    return linear_combination(w, eps_cond, 1.0 - w, eps_null);
}

Latent cfg_eps(const ToyDenoiser& d, const Latent& z, Timestep t, const Embedding& cond, const Embedding& null,
               double w) {
    if (!std::isfinite(w)) throw DomainError("cfg_eps: guidance scale must be finite");
    const Latent linear = d.linear_part(z);
    Latent e_cond = d.modulate(linear, d.modulation(t, cond));
    if (cond == null) return e_cond;
    const Latent e_null = d.modulate(linear, d.modulation(t, null));
    return guide(e_cond, e_null, w);
}

}  // namespace ptmark
