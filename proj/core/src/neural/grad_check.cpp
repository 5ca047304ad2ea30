#include "abdoshape/neural/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "abdoshape/error.hpp"

namespace abdoshape::neural {

double grad_check(const ScalarFunction& f, std::span<const double> point, double h) {
  if (!(h > 0.0)) throw InvalidArgument("grad_check step must be > 0");
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> analytic(x.size(), 0.0);
  f(x, analytic);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x, {});
    x[i] = saved - h;
    const double down = f(x, {});
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i])));
  }
  return worst;
}

}  // namespace abdoshape::neural
