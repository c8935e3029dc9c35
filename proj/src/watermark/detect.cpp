#include "ptmark/watermark/detect.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "ptmark/diffusion/ddim.hpp"
#include "ptmark/errors.hpp"
#include "ptmark/numerics/fft.hpp"
#include "ptmark/numerics/special.hpp"

namespace ptmark {

namespace {

void require_key_fits(const Latent& z, const WatermarkKey& key, const char* what) {
    if (z.height != key.params.height || z.width != key.params.width || key.params.channel >= z.channels) {
        std::ostringstream msg;
        msg << what << ": latent " << z.channels << "x" << z.height << "x" << z.width << " does not fit key (channel "
            << key.params.channel << ", " << key.params.height << "x" << key.params.width << ")";
        throw ShapeError(msg.str());
    }
    if (key.pattern.size() != key.mask.size()) throw ShapeError(std::string(what) + ": key pattern/mask size mismatch");
}

ComplexGrid2D centered_spectrum(const Latent& z, std::size_t channel) {
    return fftshift(
        fft2(ComplexGrid2D::from_real(z.height, z.width, z.channel(channel)), FftDirection::forward));
}

}  // namespace

Latent embed(const Latent& z_T, const WatermarkKey& key) {
    require_key_fits(z_T, key, "embed");
    ComplexGrid2D spectrum = centered_spectrum(z_T, key.params.channel);
    for (std::size_t m = 0; m < key.mask.size(); ++m) spectrum(key.mask[m].row, key.mask[m].col) = key.pattern[m];
    const Grid2D spatial = fft2(ifftshift(spectrum), FftDirection::inverse).real_part();

    Latent out = z_T;
    auto dst = out.channel(key.params.channel);
    std::copy(spatial.values.begin(), spatial.values.end(), dst.begin());
    return out;
}

Extraction extract(const Latent& z_T_est, const WatermarkKey& key) {
    require_key_fits(z_T_est, key, "extract");
    const ComplexGrid2D spectrum = centered_spectrum(z_T_est, key.params.channel);

    Extraction ex;
    ex.y.reserve(key.mask.size());
    for (const auto& c : key.mask) ex.y.push_back(spectrum(c.row, c.col));

    const std::size_t ci = spectrum.height / 2;
    const std::size_t cj = spectrum.width / 2;
    double power = 0.0;
    for (std::size_t i = 0; i < spectrum.height; ++i)
        for (std::size_t j = 0; j < spectrum.width; ++j)
            if (i != ci || j != cj) power += std::norm(spectrum(i, j));
    ex.sigma2 = power / 2.0 / static_cast<double>(spectrum.size() - 1);
    return ex;
}

Score score_pvalue(std::span<const std::complex<double>> y, const WatermarkKey& key, double sigma2) {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        std::ostringstream msg;
        msg << "score_pvalue: spectral variance " << sigma2 << " is degenerate";
        throw DegenerateInputError(msg.str());
    }
    if (y.size() != key.mask.size()) throw ShapeError("score_pvalue: message length does not match key mask");

    const std::size_t h = key.params.height;
    const std::size_t w = key.params.width;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> position;
    for (std::size_t m = 0; m < key.mask.size(); ++m) position[{key.mask[m].row, key.mask[m].col}] = m;

    Score s;
    double reps = 0.0;
    for (std::size_t m = 0; m < key.mask.size(); ++m) {
        const double dist = std::norm(key.pattern[m] - y[m]) / sigma2;
        s.eta += dist;

        // one representative per conjugate pair: the lower flat index
        const SpectrumCoord partner = conjugate_coord(key.mask[m], h, w);
        const auto it = position.find({partner.row, partner.col});
        const bool representative = it == position.end() || it->second >= m;
        if (!representative) continue;
        s.statistic += dist;
        s.noncentrality += std::norm(key.pattern[m]) / sigma2;
        reps += 1.0;
    }
    s.dof = 2.0 * reps;
    s.p_value = s.dof > 0.0 ? noncentral_chi2_cdf(s.statistic, s.dof, s.noncentrality) : 1.0;
    return s;
}

VerificationReport verify_latent(const Latent& z0, const ToyDenoiser& d, const WatermarkKey& key,
                                 const Embedding& cond, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw DomainError("verify: threshold must lie in (0, 1]");
    const Trajectory inverted = invert_trajectory(d, z0, cond);
    const Extraction ex = extract(inverted.front(), key);
    const Score s = score_pvalue(ex.y, key, ex.sigma2);

    VerificationReport r;
    r.eta = s.eta;
    r.sigma2 = ex.sigma2;
    r.dof = s.dof;
    r.noncentrality = s.noncentrality;
    r.p_value = s.p_value;
    r.threshold = threshold;
    r.decision = s.p_value < threshold;
    return r;
}

VerificationReport verify(const Image& x, const ToyDenoiser& d, const WatermarkKey& key, const Embedding& cond,
                          double threshold) {
    return verify_latent(encode(x), d, key, cond, threshold);
}

double auc(std::span<const double> p_watermarked, std::span<const double> p_clean) {
    if (p_watermarked.empty() || p_clean.empty()) throw DomainError("auc: both populations must be nonempty");
    double wins = 0.0;
    for (double a : p_watermarked) {
        for (double b : p_clean) {
            if (a < b)
                wins += 1.0;
            else if (a == b)
                wins += 0.5;
        }
    }
    return wins / (static_cast<double>(p_watermarked.size()) * static_cast<double>(p_clean.size()));
}

}  // namespace ptmark
