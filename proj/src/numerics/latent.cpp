#include "ptmark/numerics/latent.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ptmark/errors.hpp"

namespace ptmark {

void require_same_shape(const Latent& a, const Latent& b, const char* what) {
    if (a.same_shape(b)) return;
    std::ostringstream msg;
    msg << what << ": shape mismatch " << a.channels << "x" << a.height << "x" << a.width << " vs " << b.channels
        << "x" << b.height << "x" << b.width;
    throw ShapeError(msg.str());
}

bool all_finite(const Latent& z) {
    return std::all_of(z.data.begin(), z.data.end(), [](double v) { return std::isfinite(v); });
}

Latent linear_combination(double a, const Latent& x, double b, const Latent& y) {
    require_same_shape(x, y, "linear_combination");
    Latent out(x.channels, x.height, x.width);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = a * x.data[i] + b * y.data[i];
    return out;
}

Latent scaled(const Latent& x, double a) {
    Latent out = x;
    for (double& v : out.data) v *= a;
    return out;
}

double dot(const Latent& a, const Latent& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

double squared_norm(const Latent& z) { return dot(z, z); }

double l2_norm(const Latent& z) { return std::sqrt(squared_norm(z)); }

double relative_l2_error(const Latent& a, const Latent& b) {
    require_same_shape(a, b, "relative_l2_error");
    double num = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        num += d * d;
    }
    const double den = squared_norm(b);
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

double max_abs_difference(const Latent& a, const Latent& b) {
    require_same_shape(a, b, "max_abs_difference");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

}  // namespace ptmark
