#include "regime_design/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "regime_design/errors.hpp"

namespace regime_design {

namespace {

std::vector<ConflictEdge> resolve_edges(const std::vector<Demand>& demands,
                                        const std::vector<std::pair<std::string, std::string>>& ids) {
  std::unordered_map<std::string, int> index;
  for (int a = 0; a < static_cast<int>(demands.size()); ++a) index.emplace(demands[a].id, a);
  std::vector<ConflictEdge> edges;
  edges.reserve(ids.size());
  for (const auto& [u, v] : ids) {
    auto iu = index.find(u);
    auto iv = index.find(v);
    if (iu == index.end()) throw DomainError("conflict edge references unknown demand '" + u + "'");
    if (iv == index.end()) throw DomainError("conflict edge references unknown demand '" + v + "'");
    edges.push_back({iu->second, iv->second});
  }
  return edges;
}

}  // namespace

Instance::Instance(std::vector<Demand> demands, std::vector<Regime> regimes,
                   const std::vector<std::pair<std::string, std::string>>& conflicts,
                   double stability_margin, ValidationOptions options)
    : Instance(demands, std::move(regimes), resolve_edges(demands, conflicts), stability_margin,
               options) {}

Instance::Instance(std::vector<Demand> demands, std::vector<Regime> regimes,
                   std::vector<ConflictEdge> conflicts, double stability_margin,
                   ValidationOptions options)
    : demands_(std::move(demands)),
      regimes_(std::move(regimes)),
      edges_(std::move(conflicts)),
      epsilon_(stability_margin),
      options_(options) {
  validate(options);
}

void Instance::validate(const ValidationOptions& options) {
  if (!(epsilon_ > 0) || !std::isfinite(epsilon_))
    throw DomainError("stability margin must be positive and finite");
  if (regimes_.empty()) throw DomainError("instance needs at least one regime");

  const int R = num_regimes();
  arrival_.resize(R);
  weights_.resize(R);
  costs_.resize(R);
  for (int r = 0; r < R; ++r) {
    Regime& g = regimes_[r];
    g.index = r;
    if (!(g.arrival_rate >= 0) || !std::isfinite(g.arrival_rate))
      throw DomainError("regime " + std::to_string(r) + ": arrival rate must be >= 0");
    if (!(g.unit_cost >= 0) || !std::isfinite(g.unit_cost))
      throw DomainError("regime " + std::to_string(r) + ": unit cost must be >= 0");
    if (!(g.mixture_weight >= 0 && g.mixture_weight <= 1))
      throw DomainError("regime " + std::to_string(r) + ": mixture weight outside [0, 1]");
    arrival_[r] = g.arrival_rate;
    weights_[r] = g.mixture_weight;
    costs_[r] = g.unit_cost;
  }
  const double tol = options.mixture_tolerance;
  if (std::abs(weights_.sum() - 1.0) > tol)
    throw DomainError("mixture weights sum to " + std::to_string(weights_.sum()) + ", expected 1");
  const double total = arrival_.sum();
  if (total > 0) {
    for (int r = 0; r < R; ++r)
      if (std::abs(weights_[r] - arrival_[r] / total) > tol)
        throw DomainError("regime " + std::to_string(r) +
                          ": mixture weight is not proportional to the arrival rate");
  }

  const int n = num_demands();
  access_.resize(n);
  slack_.resize(n);
  index_.clear();
  for (int a = 0; a < n; ++a) {
    const Demand& d = demands_[a];
    if (!index_.emplace(d.id, a).second) throw DomainError("duplicate demand id '" + d.id + "'");
    if (!(d.access_time >= 0) || !std::isfinite(d.access_time))
      throw DomainError("demand " + d.id + ": access time must be >= 0");
    if (!(d.threshold >= d.access_time) || !std::isfinite(d.threshold))
      throw DomainError("demand " + d.id + ": threshold below access time");
    if (!(d.tolerance > 0 && d.tolerance <= 1))
      throw DomainError("demand " + d.id + ": tolerance must lie in (0, 1]");
    if (!(d.weight > 0) || !std::isfinite(d.weight))
      throw DomainError("demand " + d.id + ": weight must be positive");
    access_[a] = d.access_time;
    slack_[a] = d.slack();
  }

  for (auto& e : edges_) {
    if (e.first < 0 || e.first >= n || e.second < 0 || e.second >= n)
      throw DomainError("conflict edge index out of range");
    if (e.first == e.second)
      throw DomainError("conflict self-loop on demand '" + demands_[e.first].id + "'");
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  std::sort(edges_.begin(), edges_.end());
  if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
    throw DomainError("duplicate conflict edge");

  adjacency_.assign(n, {});
  for (const auto& e : edges_) {
    adjacency_[e.first].push_back(e.second);
    adjacency_[e.second].push_back(e.first);
  }
  for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());

  if (baseline_ && baseline_->size() != R)
    throw DimensionMismatch("baseline rates do not match the regime count");
}

std::optional<int> Instance::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Instance::uniform_tolerance() const noexcept {
  for (const auto& d : demands_)
    if (d.tolerance != demands_.front().tolerance) return false;
  return true;
}

Instance Instance::with_baseline_rates(Eigen::VectorXd rates) const {
  if (rates.size() != num_regimes())
    throw DimensionMismatch("baseline rates do not match the regime count");
  Instance copy = *this;
  copy.baseline_ = std::move(rates);
  return copy;
}

int required_protected(double coverage, int num_demands) {
  return static_cast<int>(std::ceil(coverage * num_demands - 1e-9));
}

int tail_count(double tail_fraction, int num_demands) {
  return static_cast<int>(std::floor((1.0 - tail_fraction) * num_demands + 1e-9));
}

void DesignParams::validate(int num_demands) const {
  if (!(coverage > 0 && coverage <= 1)) throw DomainError("coverage must lie in (0, 1]");
  if (!(tail_fraction >= 0 && tail_fraction < 1))
    throw DomainError("tail fraction must lie in [0, 1)");
  if (!(tail_threshold >= 0)) throw DomainError("tail threshold must be >= 0");
  if (!(congestion_weight >= 0) || !std::isfinite(congestion_weight))
    throw DomainError("congestion weight must be >= 0");
  if (num_demands > 0 && tail_count(tail_fraction, num_demands) < 1)
    throw DegenerateFraction("floor((1 - gamma) n) is zero for n = " + std::to_string(num_demands));
}

int count_protected(const Protection& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), true));
}

bool coverage_satisfied(const Instance& instance, const DesignParams& params, const Protection& s) {
  if (!params.weighted_coverage)
    return count_protected(s) >= required_protected(params.coverage, instance.num_demands());
  double total = 0, covered = 0;
  for (int a = 0; a < instance.num_demands(); ++a) {
    total += instance.demand(a).weight;
    if (s[a]) covered += instance.demand(a).weight;
  }
  return covered >= params.coverage * total * (1 - 1e-12);
}

bool conflicts_satisfied(const Instance& instance, const Protection& s) {
  for (const auto& e : instance.conflict_edges())
    if (s[e.first] && s[e.second]) return false;
  return true;
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Stability: return "stability";
    case ViolationKind::ServiceLevel: return "sla";
    case ViolationKind::Coverage: return "coverage";
    case ViolationKind::Conflict: return "conflict";
    case ViolationKind::TailRisk: return "cvar";
  }
  return "unknown";
}

}  // namespace regime_design
