#include <doctest.h>

#include <sstream>

#include "regime_design/errors.hpp"
#include "regime_design/evaluation.hpp"
#include "regime_design/ingest.hpp"

using namespace regime_design;

namespace {

const char* kHeader =
    "CAD_INCIDENT_ID,INCIDENT_DATETIME,INITIAL_CALL_TYPE,BOROUGH,INCIDENT_DISPATCH_AREA,"
    "FIRST_ASSIGNMENT_DATETIME,INCIDENT_CLOSE_DATETIME,INCIDENT_TRAVEL_TM_SECONDS_QY\n";

std::string row(const std::string& id, const std::string& occurred, const std::string& type,
                const std::string& area, const std::string& assigned, const std::string& closed,
                const std::string& travel, const std::string& borough = "BRONX") {
  return id + "," + occurred + "," + type + "," + borough + "," + area + "," + assigned + "," +
         closed + "," + travel + "\n";
}

ParseResult parse(const std::string& body) {
  std::istringstream in(kHeader + body);
  return parse_incidents(in, {}, "fixture.csv");
}

RegimeMap two_regimes() {
  RegimeMap m;
  m.names = {"CARD", "SICK"};
  m.call_types = {{"CARD", 0}, {"ARREST", 0}, {"SICK", 1}};
  return m;
}

ScenarioWindow window(const std::string& start, const std::string& end) {
  return {"w", *parse_timestamp(start), *parse_timestamp(end)};
}

Profile profile() {
  Profile p;
  p.name = "T";
  p.coverage = 0.5;
  p.tolerance = 0.1;
  return p;
}

}  // namespace

TEST_CASE("timestamps in both export forms") {
  const auto a = parse_timestamp("03/03/2025 11:59:30 PM");
  const auto b = parse_timestamp("2025-03-03T23:59:30");
  const auto c = parse_timestamp("2025-03-03 23:59");
  REQUIRE(a);
  CHECK(a == b);
  CHECK(*c == *b - 30);
  CHECK(*parse_timestamp("03/03/2025 12:00:00 AM") == *parse_timestamp("2025-03-03T00:00:00"));
  CHECK(*parse_timestamp("03/03/2025 12:00:00 PM") == *parse_timestamp("2025-03-03T12:00:00"));
  CHECK(*parse_timestamp("1970-01-02T00:00:00") == 86400);
  CHECK(*parse_timestamp("2024-03-01T00:00:00") - *parse_timestamp("2024-02-28T00:00:00") ==
        2 * 86400);  // leap year
  CHECK(format_timestamp(*a) == "03/03/2025 11:59:30 PM");
  CHECK(format_iso(*a) == "2025-03-03T23:59:30");
  for (const char* bad : {"", "yesterday", "13/01/2025 01:00:00 AM", "2025-02-30T00:00:00",
                          "03/03/2025 13:00:00 PM", "2025-03-03T24:10:00"})
    CHECK_FALSE(parse_timestamp(bad));
}

TEST_CASE("parsing keeps clean rows and counts dropped ones") {
  const ParseResult r = parse(
      row("1", "2025-03-03T00:00:00", "CARD", "B1", "2025-03-03T00:01:00",
          "2025-03-03T00:31:00", "300") +
      row("2", "2025-03-03T00:02:00", "SICK", "B1", "", "2025-03-03T00:40:00", "120") +
      row("3", "2025-03-03T00:03:00", "SICK", "B1", "2025-03-03T00:10:00",
          "2025-03-03T00:05:00", "60") +  // closed before assigned
      row("4", "2025-03-03T00:04:00", "SICK", "B1", "2025-03-03T00:05:00",
          "2025-03-03T00:35:00", "") +
      row("\"5\"", "03/03/2025 12:05:00 AM", "\"SICK\"", "\"B,2\"", "03/03/2025 12:06:00 AM",
          "03/03/2025 12:36:00 AM", "90"));
  CHECK(r.rows == 5);
  CHECK(r.dropped == 3);
  REQUIRE(r.records.size() == 2);
  const IncidentRecord& a = r.records[0];
  CHECK(a.incident_id == "1");
  CHECK(a.travel_minutes == doctest::Approx(5.0));
  CHECK(a.sojourn_minutes() == doctest::Approx(30.0));
  CHECK(a.completion_minutes() == doctest::Approx(31.0));
  CHECK(r.records[1].dispatch_area == "B,2");  // quoted comma
}

TEST_CASE("parsing errors carry file and line") {
  std::istringstream empty("");
  CHECK_THROWS_AS((void)parse_incidents(empty, {}, "empty.csv"), IngestError);
  std::istringstream headless("A,B,C\n1,2,3\n");
  CHECK_THROWS_AS((void)parse_incidents(headless, {}, "h.csv"), IngestError);
  try {
    (void)parse(row("1", "2025-03-03T00:00:00", "CARD", "B1", "2025-03-03T00:01:00",
                    "2025-03-03T00:31:00", "300") +
                row("2", "not a time", "CARD", "B1", "2025-03-03T00:01:00",
                    "2025-03-03T00:31:00", "300"));
    FAIL("expected IngestError");
  } catch (const IngestError& e) {
    CHECK(e.file() == "fixture.csv");
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS((void)parse_incidents(std::filesystem::path("/nonexistent/x.csv")), IngestError);

  // Header only: no records, no error.
  const ParseResult none = parse("");
  CHECK(none.rows == 0);
  CHECK(none.records.empty());
}

TEST_CASE("instances from records") {
  const ParseResult r = parse(
      row("1", "2025-03-03T00:00:00", "CARD", "B1", "2025-03-03T00:01:00",
          "2025-03-03T00:31:00", "300") +
      row("2", "2025-03-03T00:00:30", "SICK", "B1", "2025-03-03T00:02:00",
          "2025-03-03T00:20:00", "120") +  // 30 s after 1, same area
      row("3", "2025-03-03T00:01:31", "SICK", "B1", "2025-03-03T00:03:00",
          "2025-03-03T00:33:00", "600") +  // 61 s after 2
      row("4", "2025-03-03T00:01:40", "ARREST", "B2", "2025-03-03T00:03:00",
          "2025-03-03T00:33:00", "60") +  // near 3, other area
      row("5", "2025-03-03T01:00:00", "CARD", "B1", "2025-03-03T01:01:00",
          "2025-03-03T01:31:00", "60") +  // on the window end
      row("6", "2025-03-03T00:10:00", "CARD", "M1", "2025-03-03T00:11:00",
          "2025-03-03T00:41:00", "60", "MANHATTAN"));
  const ScenarioWindow w = window("2025-03-03T00:00:00", "2025-03-03T01:00:00");
  CHECK(w.minutes() == 60.0);
  CHECK(w.contains(w.start));
  CHECK_FALSE(w.contains(w.end));
  CHECK(std::string(r.records[2].incident_id) == "3");

  Profile p = profile();
  p.phi = 0.5;
  const Instance inst = build_instance(r.records, "bronx", w, two_regimes(), p);
  REQUIRE(inst.num_demands() == 4);
  CHECK(inst.demand(0).access_time == doctest::Approx(5.0));
  CHECK(inst.demand(0).threshold == doctest::Approx(15.5));  // 0.5 * 31 minutes
  CHECK(inst.demand(1).threshold == doctest::Approx(9.75));  // 0.5 * 19.5 minutes
  CHECK(inst.demand(2).threshold == doctest::Approx(0.5 * 1889.0 / 60.0));
  CHECK(inst.demand(0).tolerance == 0.1);
  REQUIRE(inst.conflict_edges().size() == 1);
  CHECK(inst.conflict_edges()[0] == ConflictEdge{0, 1});
  CHECK(inst.mixture_weights()[0] == doctest::Approx(0.5));
  CHECK(inst.arrival_rates()[1] == doctest::Approx(2.0 / 60.0));

  // Threshold clamps at the travel time when phi shrinks it below.
  p.phi = 0.1;
  const Instance tight = build_instance(r.records, "BRONX", w, two_regimes(), p);
  CHECK(tight.demand(2).threshold == doctest::Approx(10.0));
  CHECK(tight.demand(2).slack() == 0.0);

  ConflictRule across;
  across.same_area = false;
  across.max_gap_seconds = 61;
  CHECK(build_instance(r.records, "BRONX", w, two_regimes(), p, across).conflict_edges().size() == 3);
  CHECK(build_instance(r.records, "", w, two_regimes(), p).num_demands() == 5);
  CHECK_THROWS_AS((void)build_instance(r.records, "QUEENS", w, two_regimes(), p), IngestError);
}

TEST_CASE("unmapped call types fail unless ignored") {
  const ParseResult r = parse(row("1", "2025-03-03T00:00:00", "DRILL", "B1", "2025-03-03T00:01:00",
                                  "2025-03-03T00:31:00", "300"));
  const ScenarioWindow w = window("2025-03-03T00:00:00", "2025-03-03T01:00:00");
  RegimeMap m = two_regimes();
  CHECK_THROWS_AS((void)select_records(r.records, "", w, m), IngestError);
  m.ignore_unmapped = true;
  CHECK(select_records(r.records, "", w, m).empty());
  CHECK(m.regime_of("SICK") == 1);
  CHECK_FALSE(m.regime_of("DRILL"));
}

TEST_CASE("baseline service rates from sojourn means") {
  RegimeMap one;
  one.names = {"ALL"};
  one.call_types = {{"CARD", 0}};
  const ScenarioWindow w = window("2025-03-03T00:00:00", "2025-03-03T01:40:00");  // 100 min
  {
    const ParseResult r = parse(
        row("1", "2025-03-03T00:00:00", "CARD", "B1", "2025-03-03T00:01:00",
            "2025-03-03T00:11:00", "60") +
        row("2", "2025-03-03T00:20:00", "CARD", "B1", "2025-03-03T00:21:00",
            "2025-03-03T00:31:00", "60"));
    const BaselineEstimate e = estimate_baseline_rates(r.records, one, w);
    CHECK(e.mean_sojourn[0] == doctest::Approx(10.0));
    CHECK(e.arrival_rates[0] == doctest::Approx(0.02));
    CHECK(e.service_rates[0] == doctest::Approx(0.12));
    CHECK(e.mean_service_time[0] == doctest::Approx(1 / 0.12));
    CHECK(e.observations[0] == 2);
  }
  {
    const ParseResult r = parse(
        row("1", "2025-03-03T00:00:00", "CARD", "B1", "2025-03-03T00:01:00",
            "2025-03-03T00:11:00", "60") +
        row("2", "2025-03-03T00:20:00", "CARD", "B1", "2025-03-03T00:21:00",
            "2025-03-03T00:51:00", "60") +
        row("3", "2025-03-03T00:30:00", "CARD", "B1", "2025-03-03T00:31:00",
            "2025-03-03T00:31:00", "60"));  // zero sojourn: counted in Lambda only
    const BaselineEstimate e = estimate_baseline_rates(r.records, one, w);
    CHECK(e.mean_sojourn[0] == doctest::Approx(20.0));
    CHECK(e.arrival_rates[0] == doctest::Approx(0.03));
    CHECK(e.observations[0] == 2);
  }
  RegimeMap both = two_regimes();
  const ParseResult r = parse(row("1", "2025-03-03T00:00:00", "CARD", "B1",
                                  "2025-03-03T00:01:00", "2025-03-03T00:11:00", "60"));
  CHECK_THROWS_AS((void)estimate_baseline_rates(r.records, both, w), IngestError);
}

TEST_CASE("tail fraction and threshold from a profile") {
  Profile p = profile();
  p.coverage = 0.95;
  CHECK(profile_tail_fraction(p, 110) == 0.95);
  CHECK(profile_tail_fraction(p, 10) == doctest::Approx(0.9));  // floor(0.5) would be empty
  p.coverage = 1.0;
  CHECK(profile_tail_fraction(p, 4) == doctest::Approx(0.75));
  p.psi = 0.8;
  const Eigen::Vector4d expectations(10, 20, 30, 40);
  CHECK(resolve_gamma_threshold(expectations, p) == doctest::Approx(32.0));
  const DesignParams d = design_params(p, 32.0, 4);
  CHECK(d.coverage == 1.0);
  CHECK(d.tail_fraction == doctest::Approx(0.75));
  CHECK(d.tail_threshold == 32.0);
  CHECK(d.congestion_weight == p.kappa);
  p.tolerance = 0;
  CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("baseline plan protects demands met at the estimated rates") {
  const std::vector<Regime> R = {{0, "x", 1.0, 1.0, 1.0}};
  const Instance inst({{"a", 1, 5, 0.1, 1}, {"b", 1, 1.2, 0.1, 1}}, R, std::vector<ConflictEdge>{});
  CHECK_THROWS_AS((void)baseline_plan(inst), PreconditionError);
  const ServicePlan plan = baseline_plan(inst.with_baseline_rates(Eigen::VectorXd::Constant(1, 2.0)));
  CHECK(plan.method == "baseline");
  CHECK(plan.protected_demands == Protection{true, false});  // e^-4 <= 0.1 < e^-0.2
  CHECK_THROWS_AS((void)baseline_plan(inst.with_baseline_rates(Eigen::VectorXd::Constant(1, 0.5))),
                  UnstableRegimeError);
}

TEST_CASE("config documents") {
  const nlohmann::json doc = {
      {"data", "incidents.csv"},
      {"columns", {{"travel", "TRAVEL_MIN"}, {"travel_minutes_per_unit", 1.0}}},
      {"regimes", {{{"name", "A"}, {"call_types", {"X", "Y"}}, {"unit_cost", 2.0}},
                   {{"name", "B"}, {"call_types", {"Z"}}}}},
      {"conflicts", {{"max_gap_seconds", 30}}},
      {"boroughs", {"BRONX"}},
      {"windows", {{{"name", "night"}, {"start", "2025-03-03T00:00"}, {"end", "2025-03-03T06:00"}}}},
      {"profiles", {{{"name", "P"}, {"beta", 0.9}, {"alpha", 0.05}, {"psi", 0.9}}}},
      {"sweep", {{"methods", {"compact"}}}},
  };
  const IngestConfig cfg = ingest_config_from_json(doc, "/base");
  CHECK(cfg.data == std::filesystem::path("/base/incidents.csv"));
  CHECK(cfg.columns.travel == "TRAVEL_MIN");
  CHECK(cfg.columns.travel_scale == 1.0);
  CHECK(cfg.regimes.names == std::vector<std::string>{"A", "B"});
  CHECK(cfg.regimes.regime_of("Y") == 0);
  CHECK(cfg.regimes.unit_costs == std::vector<double>{2.0, 1.0});
  CHECK(cfg.conflicts.max_gap_seconds == 30.0);
  CHECK(cfg.window("night").minutes() == 360.0);
  CHECK(cfg.profile("P").coverage == 0.9);
  CHECK(cfg.profile("P").psi == 0.9);
  CHECK(cfg.sweep.methods == std::vector<std::string>{"compact"});
  CHECK_THROWS_AS((void)cfg.profile("Q"), IngestError);
  CHECK_THROWS_AS((void)cfg.window("day"), IngestError);

  nlohmann::json twice = doc;
  twice["regimes"][1]["call_types"] = {"X"};
  CHECK_THROWS_AS((void)ingest_config_from_json(twice), IngestError);
  nlohmann::json backwards = doc;
  backwards["windows"][0]["end"] = "2025-03-02T00:00";
  CHECK_THROWS_AS((void)ingest_config_from_json(backwards), IngestError);
  nlohmann::json bare = doc;
  bare.erase("regimes");
  CHECK_THROWS_AS((void)ingest_config_from_json(bare), IngestError);
}

TEST_CASE("shipped config loads") {
  const IngestConfig cfg =
      load_ingest_config(std::filesystem::path(REGIME_DESIGN_SOURCE_DIR) / "config" / "nyc_ems.json");
  CHECK(cfg.regimes.names.size() == 4);
  CHECK(cfg.windows.size() == 8);
  CHECK(cfg.profiles.size() == 6);
  CHECK(cfg.window("night").minutes() == 720.0);
}
