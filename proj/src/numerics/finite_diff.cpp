#include "ptmark/numerics/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "ptmark/errors.hpp"

namespace ptmark {

std::vector<double> central_difference_gradient(const std::function<double(std::span<const double>)>& f,
                                                std::span<const double> x, double h) {
    std::vector<double> point(x.begin(), x.end());
    std::vector<double> grad(point.size());
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double saved = point[i];
        point[i] = saved + h;
        const double up = f(point);
        point[i] = saved - h;
        const double down = f(point);
        point[i] = saved;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

double relative_max_error(std::span<const double> a, std::span<const double> b, double floor) {
    if (a.size() != b.size()) throw ShapeError("relative_max_error: length mismatch");
    double num = 0.0;
    double den = floor;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num = std::max(num, std::abs(a[i] - b[i]));
        den = std::max(den, std::abs(b[i]));
    }
    return num / den;
}

}  // namespace ptmark
