#include "regime_design/performance.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace regime_design {

double single_regime_min_rate(double arrival_rate, double tolerance, double slack,
                              double stability_margin, bool protect) {
  if (!(tolerance > 0 && tolerance < 1)) throw DomainError("tolerance must lie in (0, 1)");
  if (!(stability_margin > 0)) throw DomainError("stability margin must be positive");
  if (!protect) return arrival_rate + stability_margin;
  if (!(slack > 0)) throw DomainError("protected demand needs positive slack");
  const double needed = -std::log(tolerance) / slack;
  return (std::max(stability_margin, needed) - stability_margin) + arrival_rate + stability_margin;
}

double cvar_of_values(std::span<const double> values, double tail_fraction) {
  if (values.empty()) throw DomainError("cvar of an empty list");
  if (!(tail_fraction >= 0 && tail_fraction < 1))
    throw DomainError("tail fraction must lie in [0, 1)");
  const int n = static_cast<int>(values.size());
  const int k = tail_count(tail_fraction, n);
  if (k < 1) throw DegenerateFraction("floor((1 - gamma) n) is zero for n = " + std::to_string(n));
  std::vector<double> v(values.begin(), values.end());
  std::nth_element(v.begin(), v.begin() + (k - 1), v.end(), std::greater<>());
  std::sort(v.begin(), v.begin() + k, std::greater<>());
  return std::accumulate(v.begin(), v.begin() + k, 0.0) / k;
}

}  // namespace regime_design
