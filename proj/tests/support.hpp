#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "regime_design/model.hpp"

namespace rd_test {

using namespace regime_design;

struct RandomShape {
  int min_demands = 3, max_demands = 8;
  int max_regimes = 3;
  double edge_probability = 0.2;
  bool uniform_alpha = false;
  bool zero_slack = false;  ///< occasionally place t* at t
};

inline std::vector<Regime> random_regimes(std::mt19937_64& rng, int R) {
  std::uniform_real_distribution<double> lam(0.5, 3.0), cost(0.5, 2.0);
  std::vector<Regime> regimes(R);
  double total = 0;
  for (int r = 0; r < R; ++r) {
    regimes[r].index = r;
    regimes[r].name = "r" + std::to_string(r);
    regimes[r].arrival_rate = lam(rng);
    regimes[r].unit_cost = cost(rng);
    total += regimes[r].arrival_rate;
  }
  for (auto& g : regimes) g.mixture_weight = g.arrival_rate / total;
  return regimes;
}

inline Instance random_instance(std::mt19937_64& rng, const RandomShape& shape = {}) {
  std::uniform_int_distribution<int> nd(shape.min_demands, shape.max_demands), nr(1, shape.max_regimes);
  std::uniform_real_distribution<double> tt(2.0, 10.0), dd(0.3, 4.0), aa(0.03, 0.4), u(0, 1);
  const int n = nd(rng);
  const auto regimes = random_regimes(rng, nr(rng));
  const double alpha = aa(rng);
  std::vector<Demand> demands(n);
  for (int a = 0; a < n; ++a) {
    auto& d = demands[a];
    d.id = "d" + std::to_string(a);
    d.access_time = tt(rng);
    double slack = dd(rng);
    if (shape.zero_slack && u(rng) < 0.1) slack = 0;
    d.threshold = d.access_time + slack;
    d.tolerance = shape.uniform_alpha ? alpha : aa(rng);
  }
  std::vector<ConflictEdge> edges;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (u(rng) < shape.edge_probability) edges.push_back({a, b});
  return Instance(std::move(demands), regimes, std::move(edges));
}

/// Knobs drawn so that most, but not all, instances stay feasible.
inline DesignParams random_params(std::mt19937_64& rng, const Instance& inst) {
  std::uniform_real_distribution<double> u(0, 1);
  const double betas[] = {0.2, 0.4, 0.5, 0.67, 0.8};
  const double gammas[] = {0.0, 0.5, 0.75};
  const double kappas[] = {0.0, 0.1, 1.0};
  DesignParams p;
  p.coverage = betas[std::uniform_int_distribution<int>(0, 4)(rng)];
  p.tail_fraction = gammas[std::uniform_int_distribution<int>(0, 2)(rng)];
  if (tail_count(p.tail_fraction, inst.num_demands()) == 0) p.tail_fraction = 0.0;
  p.congestion_weight = kappas[std::uniform_int_distribution<int>(0, 2)(rng)];
  const int n = inst.num_demands();
  std::vector<double> t(inst.access_times().data(), inst.access_times().data() + n);
  std::sort(t.begin(), t.end(), std::greater<>());
  const int K = tail_count(p.tail_fraction, n);
  double top = 0;
  for (int k = 0; k < K; ++k) top += t[k];
  p.tail_threshold = u(rng) < 0.4 ? kUnboundedTail : top / K + 0.2 + 2.0 * u(rng);
  return p;
}

}  // namespace rd_test
