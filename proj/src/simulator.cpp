#include "regime_design/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <thread>

#include "regime_design/errors.hpp"
#include "regime_design/evaluation.hpp"
#include "regime_design/performance.hpp"

namespace regime_design {

namespace {

double uniform01(std::mt19937_64& rng) {
  // 53 random bits; never returns 1.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double exponential(std::mt19937_64& rng, double rate) { return -std::log1p(-uniform01(rng)) / rate; }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

int draw_regime(const std::vector<double>& cumulative, std::mt19937_64& rng) {
  const double u = uniform01(rng) * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(), cumulative.size() - 1));
}

/// FCFS single-server queue advanced one customer at a time.
struct LindleyQueue {
  double arrival = 0, service = 0, wait = 0;
  double next(std::mt19937_64& rng) {
    const double s = exponential(rng, service);
    const double sojourn = wait + s;
    wait = std::max(0.0, sojourn - exponential(rng, arrival));
    return sojourn;
  }
};

std::vector<double> default_grid(const ResponseMixture<double>& mix, int points) {
  // Upper end: 0.999 quantile by bisection on the tail.
  double lo = mix.shift, hi = mix.shift + 1.0;
  while (mix.tail(hi) > 1e-3) hi = mix.shift + 2.0 * (hi - mix.shift);
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mix.tail(mid) > 1e-3 ? lo : hi) = mid;
  }
  std::vector<double> grid(points);
  for (int k = 0; k < points; ++k)
    grid[k] = mix.shift + (hi - mix.shift) * (points == 1 ? 1.0 : double(k) / (points - 1));
  return grid;
}

DemandStatistics run_demand(const Instance& instance, const Eigen::VectorXd& mu, int a,
                            std::int64_t samples, std::uint64_t seed,
                            const std::vector<double>& grid_in, const SimulationOptions& opt) {
  const Demand& d = instance.demand(a);
  const auto mix = response_mixture(d, instance.regimes(), mu);
  DemandStatistics st;
  st.id = d.id;
  st.grid = grid_in.empty() ? default_grid(mix, opt.grid_points) : grid_in;
  std::sort(st.grid.begin(), st.grid.end());
  const std::size_t G = st.grid.size();

  std::mt19937_64 rng(mix_seed(seed ^ fnv1a(d.id)));
  const int R = instance.num_regimes();
  std::vector<double> cumulative(R);
  double acc = 0;
  for (int r = 0; r < R; ++r) cumulative[r] = acc += instance.regime(r).mixture_weight;

  std::vector<LindleyQueue> queues;
  if (opt.discrete_event) {
    queues.resize(R);
    for (int r = 0; r < R; ++r) {
      queues[r] = {instance.regime(r).arrival_rate, mu[r], 0.0};
      for (int k = 0; k < opt.warmup; ++k) (void)queues[r].next(rng);
    }
  }

  // counts[g] = samples falling in (grid[g-1], grid[g]]
  std::vector<std::int64_t> counts(G + 1, 0);
  std::int64_t hits = 0;
  double sum = 0;
  for (std::int64_t i = 0; i < samples; ++i) {
    const int r = draw_regime(cumulative, rng);
    const double rate = mu[r] - instance.regime(r).arrival_rate;
    const double x = d.access_time + (opt.discrete_event ? queues[r].next(rng) : exponential(rng, rate));
    sum += x;
    if (x <= d.threshold) ++hits;
    ++counts[std::lower_bound(st.grid.begin(), st.grid.end(), x) - st.grid.begin()];
  }
  st.empirical_cdf.resize(G);
  st.analytic_cdf.resize(G);
  std::int64_t running = 0;
  for (std::size_t g = 0; g < G; ++g) {
    running += counts[g];
    st.empirical_cdf[g] = double(running) / double(samples);
    st.analytic_cdf[g] = mix.cdf(st.grid[g]);
    st.max_cdf_gap = std::max(st.max_cdf_gap, std::abs(st.empirical_cdf[g] - st.analytic_cdf[g]));
  }
  st.empirical_mean = sum / double(samples);
  st.analytic_mean = mix.mean();
  st.analytic_sd = std::sqrt(std::max(0.0, mix.variance()));
  st.sla_hit_rate = double(hits) / double(samples);
  st.analytic_sla = mix.cdf(d.threshold);
  return st;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double sample_response(const Demand& demand, std::span<const Regime> regimes,
                       const Eigen::VectorXd& mu, std::mt19937_64& rng) {
  require_stable(mu, regime_arrivals(regimes));
  double u = uniform01(rng), acc = 0;
  std::size_t r = 0;
  for (; r + 1 < regimes.size(); ++r) {
    acc += regimes[r].mixture_weight;
    if (u < acc) break;
  }
  return demand.access_time + exponential(rng, mu[r] - regimes[r].arrival_rate);
}

SimulationResult simulate(const Instance& instance, const ServicePlan& plan, std::int64_t samples,
                          std::uint64_t seed, const std::vector<double>& grid,
                          const SimulationOptions& options) {
  if (samples < 1) throw DomainError("sample count must be at least 1");
  if (plan.service_rates.size() != instance.num_regimes())
    throw DimensionMismatch("plan rates do not match the regime count");
  require_stable(plan.service_rates, instance.arrival_rates());

  const int n = instance.num_demands();
  SimulationResult out;
  out.samples = samples;
  out.seed = seed;
  out.demands.resize(n);
  const int threads = std::clamp(options.threads, 1, std::max(1, n));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (int a = t; a < n; a += threads)
          out.demands[a] = run_demand(instance, plan.service_rates, a, samples, seed, grid, options);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (const auto& d : out.demands) out.max_cdf_gap = std::max(out.max_cdf_gap, d.max_cdf_gap);
  return out;
}

void write_simulation_csv(const SimulationResult& result, std::ostream& out) {
  out.precision(10);
  out << "demand_id,grid_t,empirical_cdf,analytic_cdf\n";
  for (const auto& d : result.demands)
    for (std::size_t g = 0; g < d.grid.size(); ++g)
      out << d.id << ',' << d.grid[g] << ',' << d.empirical_cdf[g] << ',' << d.analytic_cdf[g] << '\n';
}

VerificationReport verify_plan(const Instance& instance, const DesignParams& params,
                               const ServicePlan& plan, std::int64_t samples, std::uint64_t seed,
                               double tolerance) {
  VerificationReport rep;
  const int R = instance.num_regimes();
  bool stable = plan.service_rates.size() == R;
  for (int r = 0; stable && r < R; ++r) {
    const double lam = instance.regime(r).arrival_rate;
    if (!(plan.service_rates[r] > lam)) {
      stable = false;
      rep.discrepancies.push_back({"stability", instance.regime(r).name, plan.service_rates[r], lam});
    }
  }
  if (!stable) return rep;

  rep.simulation = simulate(instance, plan, samples, seed, {});
  for (int a = 0; a < instance.num_demands(); ++a) {
    const Demand& d = instance.demand(a);
    if (a >= static_cast<int>(plan.protected_demands.size()) || !plan.protected_demands[a] ||
        d.sla_trivial())
      continue;
    const double bound = 1.0 - d.tolerance - tolerance;
    const double hit = rep.simulation.demands[a].sla_hit_rate;
    if (hit < bound) rep.discrepancies.push_back({"sla", d.id, hit, bound});
  }
  if (params.tail_threshold < kUnboundedTail) {
    const Eigen::VectorXd e = expected_responses(instance, plan.service_rates);
    const double cvar = cvar_of_values(e, params.tail_fraction);
    if (cvar > params.tail_threshold * (1.0 + kFeasibilityTolerance))
      rep.discrepancies.push_back({"cvar", "cvar", cvar, params.tail_threshold});
  }
  rep.passed = rep.discrepancies.empty();
  return rep;
}

}  // namespace regime_design
