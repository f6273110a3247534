#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "regime_design/evaluation.hpp"
#include "regime_design/exact_solvers.hpp"
#include "regime_design/serialization.hpp"

using namespace regime_design;

namespace {

const std::filesystem::path kFixtures = std::filesystem::path(REGIME_DESIGN_SOURCE_DIR) / "tests" / "fixtures";

}  // namespace

TEST_CASE("every exact solver reproduces the stored plan") {
  const Instance inst = instance_from_json(read_json(kFixtures / "brooklyn_night.instance.json"));
  const DesignParams p = params_from_json(read_json(kFixtures / "brooklyn_night.params.json"));
  const nlohmann::json golden = read_json(kFixtures / "brooklyn_night.plan.json");
  CHECK(golden["instance_hash"] == content_hash(to_json(inst)));
  const ServicePlan expect = plan_from_json(golden, inst);

  const ServicePlan plans[] = {benders_solve(inst, p).plan, compact_solve(inst, p).plan,
                               enumerate_solve(inst, p).plan};
  for (const ServicePlan& plan : plans) {
    CAPTURE(plan.method);
    // The edge endpoints are interchangeable here, so only Benders pins the exact set.
    if (plan.method == "benders") CHECK(plan.protected_demands == expect.protected_demands);
    CHECK(std::count(plan.protected_demands.begin(), plan.protected_demands.end(), true) ==
          std::count(expect.protected_demands.begin(), expect.protected_demands.end(), true));
    CHECK(check_feasibility(inst, p, plan).feasible);
    CHECK(plan.objective_value == doctest::Approx(expect.objective_value).epsilon(1e-7));
    for (int r = 0; r < inst.num_regimes(); ++r)
      CHECK(plan.service_rates[r] == doctest::Approx(expect.service_rates[r]).epsilon(1e-5));
  }
}
