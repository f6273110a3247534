#pragma once

#include <optional>
#include <string>
#include <vector>

#include "regime_design/cone.hpp"
#include "regime_design/model.hpp"

namespace regime_design {

/// Demands ordered by slack, largest first, ties by id.
struct SortedSelection {
  std::vector<int> order;
  int k = 0;
  Protection selected;
  long comparisons = 0;  ///< comparator calls made by the sort
};

[[nodiscard]] SortedSelection sort_by_slack(const Instance& instance, int k);

/// Exact for conflict-free instances with one tolerance shared by every demand.
/// Throws PreconditionError on conflicts, mixed tolerances or weighted coverage.
[[nodiscard]] ServicePlan solve_conflict_free_uniform(const Instance& instance,
                                                      const DesignParams& params,
                                                      const SubproblemOptions& options = {});

/// A k-subset whose members dominate every non-member in both slack and tolerance,
/// as demand ids in instance order; nullopt when none exists.
[[nodiscard]] std::optional<std::vector<std::string>> dominance_select(const Instance& instance,
                                                                       int k);

/// dominance_select with k = ceil(beta n) followed by one subproblem solve.
[[nodiscard]] std::optional<ServicePlan> solve_dominant(const Instance& instance,
                                                        const DesignParams& params,
                                                        const SubproblemOptions& options = {});

}  // namespace regime_design
