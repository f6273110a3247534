#include <algorithm>
#include <atomic>
#include <cstdint>
#include <thread>

#include "regime_design/errors.hpp"
#include "regime_design/exact_solvers.hpp"

namespace regime_design {

namespace {

Protection from_mask(std::uint32_t mask, int n) {
  Protection s(n, false);
  for (int a = 0; a < n; ++a) s[a] = (mask >> a) & 1u;
  return s;
}

}  // namespace

std::vector<EnumeratedPoint> enumerate_points(const Instance& instance, const DesignParams& params,
                                              const EnumerateOptions& options) {
  const int n = instance.num_demands();
  if (n > kEnumerationLimit)
    throw PreconditionError("enumeration is limited to " + std::to_string(kEnumerationLimit) +
                            " demands, got " + std::to_string(n));
  params.validate(n);

  std::vector<std::uint32_t> masks;
  const std::uint32_t total = 1u << n;
  for (std::uint32_t m = 0; m < total; ++m) {
    const Protection s = from_mask(m, n);
    if (coverage_satisfied(instance, params, s) && conflicts_satisfied(instance, s))
      masks.push_back(m);
  }

  std::vector<EnumeratedPoint> points(masks.size());
  int threads = options.threads > 0 ? options.threads
                                    : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, std::max<int>(1, static_cast<int>(masks.size())));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < masks.size() && !failed;) {
      try {
        EnumeratedPoint& p = points[i];
        p.protection = from_mask(masks[i], n);
        const SubproblemSolution sol =
            solve_fixed(instance, params, p.protection, options.subproblem);
        p.status = sol.status;
        p.value = sol.objective;
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return points;
}

EnumerateResult enumerate_solve(const Instance& instance, const DesignParams& params,
                                const EnumerateOptions& options) {
  const auto points = enumerate_points(instance, params, options);
  EnumerateResult out;
  out.evaluated = static_cast<int>(points.size());
  out.plan.method = "enumerate";
  out.plan.service_rates = instance.arrival_rates();
  out.plan.protected_demands.assign(instance.num_demands(), false);

  const EnumeratedPoint* best = nullptr;
  for (const auto& p : points) {
    if (p.status == SubproblemStatus::NumericalFailure)
      throw Error("subproblem failed during enumeration");
    if (p.status != SubproblemStatus::Optimal) continue;
    if (!best || p.value < best->value) best = &p;
  }
  if (!best) return out;
  // Re-solve the winner to recover its rates; points only keep the value.
  const SubproblemSolution sol =
      solve_fixed(instance, params, best->protection, options.subproblem);
  out.plan = make_plan(instance, best->protection, sol, "enumerate");
  out.status = SolveStatus::Optimal;
  return out;
}

}  // namespace regime_design
