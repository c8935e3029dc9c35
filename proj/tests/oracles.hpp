#pragma once

// Independent reference computations the library results are checked against.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include "ptmark/numerics/grid.hpp"
#include "ptmark/numerics/rng.hpp"

namespace oracle {

namespace detail {
inline double simpson_step(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                           double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}
}  // namespace detail

/// Adaptive Simpson quadrature with Richardson correction.
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-14,
                        int max_depth = 60) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// P(s, x) by direct integration of the gamma density.
inline double lower_gamma_by_quadrature(double s, double x) {
    const double lg = std::lgamma(s);
    return integrate([&](double t) { return t <= 0.0 ? 0.0 : std::exp((s - 1.0) * std::log(t) - t - lg); }, 0.0, x,
                     1e-15);
}

/// Fraction of `draws` samples of Σ_i (Z_i + μ_i)² that are ≤ x, with all non-centrality
/// on the first coordinate (μ_1 = √λ).
inline double noncentral_chi2_cdf_mc(double x, int k, double lambda, long draws, std::uint64_t seed) {
    ptmark::SeededRng rng(seed);
    const double shift = std::sqrt(lambda);
    long below = 0;
    for (long n = 0; n < draws; ++n) {
        double acc = 0.0;
        for (int i = 0; i < k; ++i) {
            const double z = rng.normal() + (i == 0 ? shift : 0.0);
            acc += z * z;
        }
        below += acc <= x;
    }
    return static_cast<double>(below) / static_cast<double>(draws);
}

/// O(N⁴) forward DFT straight from the definition.
inline ptmark::ComplexGrid2D naive_dft2(const ptmark::ComplexGrid2D& g) {
    ptmark::ComplexGrid2D out(g.height, g.width);
    const double h = static_cast<double>(g.height);
    const double w = static_cast<double>(g.width);
    for (std::size_t u = 0; u < g.height; ++u)
        for (std::size_t v = 0; v < g.width; ++v) {
            std::complex<double> acc = 0.0;
            for (std::size_t i = 0; i < g.height; ++i)
                for (std::size_t j = 0; j < g.width; ++j) {
                    const double phase = -2.0 * std::numbers::pi *
                                         (static_cast<double>(u * i) / h + static_cast<double>(v * j) / w);
                    acc += g(i, j) * std::polar(1.0, phase);
                }
            out(u, v) = acc;
        }
    return out;
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `p` and Uniform(0, 1).
inline double ks_uniform(std::vector<double> p) {
    std::sort(p.begin(), p.end());
    const double n = static_cast<double>(p.size());
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        d = std::max(d, static_cast<double>(i + 1) / n - p[i]);
        d = std::max(d, p[i] - static_cast<double>(i) / n);
    }
    return d;
}

/// Mann–Whitney AUC by explicit pair enumeration written independently of the library.
inline double auc_by_enumeration(const std::vector<double>& pos, const std::vector<double>& neg) {
    double s = 0.0;
    for (double a : pos)
        for (double b : neg) s += a < b ? 1.0 : (a == b ? 0.5 : 0.0);
    return s / static_cast<double>(pos.size() * neg.size());
}

}  // namespace oracle
