#include "ptmark/numerics/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "ptmark/errors.hpp"

namespace ptmark {

namespace {

constexpr int kMaxGammaIterations = 1'000'000;
constexpr double kGammaEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr double kTailMass = 1e-20;
constexpr long kMaxMixtureTerms = 100'000;

// Series for P(s, x), valid and fast for x < s + 1.
double gamma_series(double s, double x, double log_prefactor) {
    double ap = s;
    double term = 1.0 / s;
    double sum = term;
    for (int n = 0; n < kMaxGammaIterations; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kGammaEps) return sum * std::exp(log_prefactor);
    }
    throw NumericalError("reg_lower_incomplete_gamma: series did not converge");
}

// Modified Lentz continued fraction for Q(s, x), used when x >= s + 1.
double gamma_continued_fraction(double s, double x, double log_prefactor) {
    double b = x + 1.0 - s;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kMaxGammaIterations; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kGammaEps) return std::exp(log_prefactor) * h;
    }
    throw NumericalError("reg_lower_incomplete_gamma: continued fraction did not converge");
}

struct GammaPair {
    double lower;
    double upper;
};

// P(s, x) and Q(s, x), each computed directly on its own side so the smaller one
// keeps full relative precision.
GammaPair reg_incomplete_gamma(double s, double x, const char* what) {
    if (!std::isfinite(s) || !std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite input");
    if (s <= 0.0) throw DomainError(std::string(what) + ": s must be positive");
    if (x < 0.0) throw DomainError(std::string(what) + ": x must be nonnegative");
    if (x == 0.0) return {0.0, 1.0};

    const double log_prefactor = -x + s * std::log(x) - std::lgamma(s);
    if (x < s + 1.0) {
        const double p = std::clamp(gamma_series(s, x, log_prefactor), 0.0, 1.0);
        return {p, 1.0 - p};
    }
    const double q = std::clamp(gamma_continued_fraction(s, x, log_prefactor), 0.0, 1.0);
    return {1.0 - q, q};
}

[[noreturn]] void too_many_terms(double x, double k, double lambda_nc, double partial) {
    std::ostringstream msg;
    msg << "noncentral_chi2_cdf: series did not converge within " << kMaxMixtureTerms << " terms (x=" << x
        << ", k=" << k << ", lambda=" << lambda_nc << ", partial=" << partial << ")";
    throw NumericalError(msg.str());
}

}  // namespace

double reg_lower_incomplete_gamma(double s, double x) {
    return reg_incomplete_gamma(s, x, "reg_lower_incomplete_gamma").lower;
}

double reg_upper_incomplete_gamma(double s, double x) {
    return reg_incomplete_gamma(s, x, "reg_upper_incomplete_gamma").upper;
}

double chi2_cdf(double x, double k) {
    if (k <= 0.0) throw DomainError("chi2_cdf: degrees of freedom must be positive");
    if (x < 0.0) throw DomainError("chi2_cdf: x must be nonnegative");
    return reg_lower_incomplete_gamma(k / 2.0, x / 2.0);
}

double noncentral_chi2_cdf(double x, double k, double lambda_nc) {
    if (!std::isfinite(x) || !std::isfinite(k) || !std::isfinite(lambda_nc))
        throw DomainError("noncentral_chi2_cdf: non-finite input");
    if (x < 0.0) throw DomainError("noncentral_chi2_cdf: x must be nonnegative");
    if (k < 1.0) throw DomainError("noncentral_chi2_cdf: k must be >= 1");
    if (lambda_nc < 0.0) throw DomainError("noncentral_chi2_cdf: noncentrality must be nonnegative");
    if (x == 0.0) return 0.0;
    if (lambda_nc == 0.0) return chi2_cdf(x, k);

    const double mu = lambda_nc / 2.0;
    const double half_x = x / 2.0;
    const double half_k = k / 2.0;
    const double log_mu = std::log(mu);
    auto weight = [&](long j) {
        const double jd = static_cast<double>(j);
        return std::exp(-mu + jd * log_mu - std::lgamma(jd + 1.0));
    };

    // Both tails are accumulated so that a CDF near 1 is returned as 1 − (upper tail),
    // which keeps p-values of strongly non-watermarked inputs from carrying truncation noise.
    const long mode = static_cast<long>(std::floor(mu));
    double lower = 0.0;
    double upper = 0.0;
    long terms = 0;
    auto add = [&](long j) {
        const double w = weight(j);
        const GammaPair g = reg_incomplete_gamma(half_k + static_cast<double>(j), half_x, "noncentral_chi2_cdf");
        lower += w * g.lower;
        upper += w * g.upper;
        if (++terms > kMaxMixtureTerms) too_many_terms(x, k, lambda_nc, lower);
    };

    // Upward from the mode. Poisson weights decrease geometrically with ratio mu/(j+1),
    // so the remaining mass beyond j is bounded by w_{j+1} / (1 - mu/(j+2)).
    for (long j = mode;; ++j) {
        add(j);
        const double ratio = mu / static_cast<double>(j + 2);
        if (ratio < 1.0 && weight(j + 1) / (1.0 - ratio) < kTailMass / 2.0) break;
    }
    // Downward from mode-1. Below the mode the ratio w_{j-1}/w_j = j/mu < 1.
    for (long j = mode - 1; j >= 0; --j) {
        add(j);
        if (j == 0) break;
        const double ratio = static_cast<double>(j - 1) / mu;
        if (weight(j - 1) / (1.0 - ratio) < kTailMass / 2.0) break;
    }

    if (!std::isfinite(lower) || !std::isfinite(upper)) throw NumericalError("noncentral_chi2_cdf: non-finite result");
    return std::clamp(lower <= 0.5 ? lower : 1.0 - upper, 0.0, 1.0);
}

}  // namespace ptmark
