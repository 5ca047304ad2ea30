#pragma once

#include <functional>
#include <span>

namespace abdoshape::neural {

/// Scalar function of a flat parameter vector. When `grad` is non-empty the
/// function also writes its analytic gradient there.
using ScalarFunction = std::function<double(std::span<const double> x, std::span<double> grad)>;

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
double grad_check(const ScalarFunction& f, std::span<const double> point, double h = 1e-5);

}  // namespace abdoshape::neural
