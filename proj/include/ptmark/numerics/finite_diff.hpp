#pragma once

#include <functional>
#include <span>
#include <vector>

namespace ptmark {

/// Central-difference gradient of a scalar function.
std::vector<double> central_difference_gradient(const std::function<double(std::span<const double>)>& f,
                                                std::span<const double> x, double h = 1e-5);

/// max_i |a_i − b_i| / max(max_i |b_i|, floor)
double relative_max_error(std::span<const double> a, std::span<const double> b, double floor = 1e-12);

}  // namespace ptmark
