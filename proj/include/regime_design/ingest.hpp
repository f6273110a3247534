#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "regime_design/model.hpp"

namespace regime_design {

/// Seconds since 1970-01-01 00:00:00, read as civil time without a zone.
using Timestamp = std::int64_t;

/// Accepts "MM/DD/YYYY hh:mm:ss AM|PM" and ISO "YYYY-MM-DD[T ]hh:mm[:ss]".
/// Returns nullopt when the text matches neither form.
[[nodiscard]] std::optional<Timestamp> parse_timestamp(std::string_view text);
/// "MM/DD/YYYY hh:mm:ss AM|PM", the open-data export form.
[[nodiscard]] std::string format_timestamp(Timestamp t);
[[nodiscard]] std::string format_iso(Timestamp t);

struct IncidentRecord {
  std::string incident_id;
  Timestamp occurred_at = 0;
  std::string borough;
  std::string call_type;
  std::string dispatch_area;
  Timestamp assigned_at = 0;
  Timestamp closed_at = 0;
  double travel_minutes = 0.0;

  [[nodiscard]] double sojourn_minutes() const { return (closed_at - assigned_at) / 60.0; }
  [[nodiscard]] double completion_minutes() const { return (closed_at - occurred_at) / 60.0; }
};

/// Header names of the eight fields. Defaults follow the NYC EMS incident dispatch export.
struct ColumnMap {
  std::string incident_id = "CAD_INCIDENT_ID";
  std::string occurred_at = "INCIDENT_DATETIME";
  std::string borough = "BOROUGH";
  std::string call_type = "INITIAL_CALL_TYPE";
  std::string dispatch_area = "INCIDENT_DISPATCH_AREA";
  std::string assigned_at = "FIRST_ASSIGNMENT_DATETIME";
  std::string closed_at = "INCIDENT_CLOSE_DATETIME";
  std::string travel = "INCIDENT_TRAVEL_TM_SECONDS_QY";
  /// Minutes per unit of the travel column.
  double travel_scale = 1.0 / 60.0;
};

struct ParseResult {
  std::vector<IncidentRecord> records;
  long rows = 0;
  /// Rows with a blank field, negative travel or out-of-order timestamps.
  long dropped = 0;
};

/// Throws IngestError for an empty file, a missing column or a malformed timestamp (file:line).
[[nodiscard]] ParseResult parse_incidents(const std::filesystem::path& path,
                                          const ColumnMap& columns = {});
[[nodiscard]] ParseResult parse_incidents(std::istream& in, const ColumnMap& columns = {},
                                          const std::string& source = "<stream>");

struct Profile {
  std::string name;
  double coverage = 0.95;   ///< beta
  double tolerance = 0.05;  ///< alpha
  double psi = 1.0;         ///< Gamma = psi * baseline CVaR
  double phi = 1.0;         ///< t* = phi * completion time
  double kappa = 0.1;

  /// Throws DomainError.
  void validate() const;
};

struct ScenarioWindow {
  std::string name;
  Timestamp start = 0;
  Timestamp end = 0;  ///< exclusive

  [[nodiscard]] double minutes() const { return (end - start) / 60.0; }
  [[nodiscard]] bool contains(Timestamp t) const { return t >= start && t < end; }
};

struct RegimeMap {
  std::vector<std::string> names;
  std::map<std::string, int> call_types;
  std::vector<double> unit_costs;  ///< empty means 1 per regime
  /// Drop records with unknown call types instead of failing.
  bool ignore_unmapped = false;

  [[nodiscard]] std::optional<int> regime_of(const std::string& call_type) const;
};

struct ConflictRule {
  double max_gap_seconds = 60.0;
  bool same_area = true;
};

/// Records of one borough (case-insensitive, empty = all) inside the window with a
/// mapped call type. Throws IngestError on an unmapped type unless the map ignores them.
[[nodiscard]] std::vector<IncidentRecord> select_records(const std::vector<IncidentRecord>& records,
                                                         const std::string& borough,
                                                         const ScenarioWindow& window,
                                                         const RegimeMap& regimes);

/// Demands are incidents; Lambda_r = count_r / window minutes, pi_r = count_r / total.
/// Throws IngestError when nothing is selected.
[[nodiscard]] Instance build_instance(const std::vector<IncidentRecord>& records,
                                      const std::string& borough, const ScenarioWindow& window,
                                      const RegimeMap& regimes, const Profile& profile,
                                      const ConflictRule& rule = {});

/// Index pairs (i < j) of records in conflict under the rule.
[[nodiscard]] std::vector<ConflictEdge> conflict_pairs(const std::vector<IncidentRecord>& records,
                                                       const ConflictRule& rule);

struct BaselineEstimate {
  Eigen::VectorXd mean_sojourn;  ///< s-hat, minutes
  Eigen::VectorXd arrival_rates;
  Eigen::VectorXd service_rates;  ///< 1 / s-hat + Lambda
  Eigen::VectorXd mean_service_time;  ///< 1 / mu-hat
  std::vector<long> observations;  ///< strictly positive sojourns used per regime
};

/// Uses every in-window record with a mapped call type; filter by borough first.
/// Throws IngestError naming a regime without a positive sojourn.
[[nodiscard]] BaselineEstimate estimate_baseline_rates(const std::vector<IncidentRecord>& records,
                                                       const RegimeMap& regimes,
                                                       const ScenarioWindow& window);

/// gamma = beta, except where floor((1 - beta) n) would be empty: then the tail is the
/// single largest value (gamma = 1 - 1/n).
[[nodiscard]] double profile_tail_fraction(const Profile& profile, int num_demands);

/// psi * CVaR at profile_tail_fraction over the baseline expectations.
[[nodiscard]] double resolve_gamma_threshold(const Eigen::VectorXd& baseline_expectations,
                                             const Profile& profile);

/// beta, gamma = profile_tail_fraction, Gamma, kappa.
[[nodiscard]] DesignParams design_params(const Profile& profile, double tail_threshold,
                                         int num_demands);

/// mu = mu-hat; demands protected where the service level holds at mu-hat.
/// Throws PreconditionError when the instance has no baseline rates.
[[nodiscard]] ServicePlan baseline_plan(const Instance& instance);

struct IngestConfig {
  std::filesystem::path data;  ///< resolved against the config directory
  ColumnMap columns;
  RegimeMap regimes;
  ConflictRule conflicts;
  std::vector<std::string> boroughs;
  std::vector<ScenarioWindow> windows;
  std::vector<Profile> profiles;
  /// Sweep targets; empty lists mean every configured borough, window or profile.
  struct Sweep {
    std::vector<std::string> boroughs, windows, profiles;
    std::vector<std::string> methods = {"benders", "compact"};
  } sweep;

  [[nodiscard]] const Profile& profile(const std::string& name) const;
  [[nodiscard]] const ScenarioWindow& window(const std::string& name) const;
};

/// Throws IngestError.
[[nodiscard]] IngestConfig ingest_config_from_json(const nlohmann::json& doc,
                                                   const std::filesystem::path& base = {});
[[nodiscard]] IngestConfig load_ingest_config(const std::filesystem::path& path);
[[nodiscard]] nlohmann::json to_json(const Profile& profile);

/// Deterministic stand-in for the open-data extract, in its column layout. Holds the
/// 2025-03-03 night window for the Bronx and Manhattan, a full year of Manhattan
/// calls with fixed per-regime sojourn means, plus rows that ingestion must drop.
void write_synthetic_extract(std::ostream& out);

}  // namespace regime_design
