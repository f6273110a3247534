#include <array>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "regime_design/ingest.hpp"

namespace regime_design {

namespace {

constexpr std::array<const char*, 4> kCallTypes = {"CARDBR", "INJURY", "SICK", "UNC"};

struct Row {
  Timestamp occurred = 0;
  int regime = 0;
  std::string borough;
  std::string area;
  long delay_s = 60;    // occurred -> assigned
  long sojourn_s = 0;   // assigned -> closed
  long travel_s = 300;
  std::string call_type;  // overrides the regime's type when set
  bool blank_travel = false;
};

// Regime sequence with count_r occurrences each, spread evenly (largest deficit first).
std::vector<int> interleave(const std::array<long, 4>& counts) {
  long total = 0;
  for (long c : counts) total += c;
  std::vector<int> out;
  out.reserve(total);
  std::array<long, 4> used{};
  for (long i = 0; i < total; ++i) {
    int pick = 0;
    double best = -1e300;
    for (int r = 0; r < 4; ++r) {
      if (used[r] == counts[r]) continue;
      const double deficit = static_cast<double>(counts[r]) * (i + 1) / total - used[r];
      if (deficit > best) {
        best = deficit;
        pick = r;
      }
    }
    ++used[pick];
    out.push_back(pick);
  }
  return out;
}

// `pairs` conflicting pairs: row 2j + 1 moves 30 s after row 2j in the same area.
std::vector<Row> night_block(const std::string& borough, const std::string& prefix,
                             Timestamp start, long length_s, const std::array<long, 4>& counts,
                             int pairs) {
  const std::vector<int> regimes = interleave(counts);
  const long n = static_cast<long>(regimes.size());
  std::vector<Row> rows(n);
  for (long i = 0; i < n; ++i) {
    Row& r = rows[i];
    r.occurred = start + i * length_s / n;
    r.regime = regimes[i];
    r.borough = borough;
    r.area = prefix + std::to_string(1 + i % 4);
    r.delay_s = 30 + (i * 53) % 150;
    r.sojourn_s = 1200 + (i * 613) % 2400;
    r.travel_s = 240 + (i * 197) % 600;
  }
  for (int j = 0; j < pairs; ++j) {
    rows[2 * j + 1].occurred = rows[2 * j].occurred + 30;
    rows[2 * j + 1].area = rows[2 * j].area;
  }
  return rows;
}

}  // namespace

void write_synthetic_extract(std::ostream& out) {
  const Timestamp night_start = *parse_timestamp("2025-03-03T20:00:00");
  const Timestamp night_end = *parse_timestamp("2025-03-04T08:00:00");
  const Timestamp year_start = *parse_timestamp("2025-01-01T00:00:00");
  const Timestamp year_end = *parse_timestamp("2026-01-01T00:00:00");
  const long night_s = night_end - night_start;

  std::vector<Row> rows = night_block("BRONX", "B", night_start, night_s, {35, 27, 36, 12}, 3);
  const std::vector<Row> man_night =
      night_block("MANHATTAN", "M", night_start, night_s, {32, 26, 28, 15}, 2);
  const std::vector<Row> bk_night =
      night_block("BROOKLYN", "K", night_start + 7, night_s, {6, 5, 5, 4}, 1);

  // Manhattan outside the night window (with a 10 minute guard on either side).
  const std::array<long, 4> year_counts = {13136, 19320, 16515, 17809};
  std::array<long, 4> rest{};
  for (int r = 0; r < 4; ++r) rest[r] = year_counts[r];
  for (const auto& r : man_night) --rest[r.regime];
  const std::vector<int> rest_regimes = interleave(rest);
  const long m = static_cast<long>(rest_regimes.size());
  const Timestamp guard_lo = night_start - 600, guard_hi = night_end + 600;
  const long span = (year_end - year_start) - (guard_hi - guard_lo) - 120;
  std::vector<Row> man_rest(m);
  for (long k = 0; k < m; ++k) {
    Row& r = man_rest[k];
    Timestamp t = year_start + 60 + static_cast<Timestamp>(k) * span / m;
    if (t >= guard_lo) t += guard_hi - guard_lo;
    r.occurred = t;
    r.regime = rest_regimes[k];
    r.borough = "MANHATTAN";
    r.area = "M" + std::to_string(1 + k % 6);
    r.delay_s = 20 + k % 100;
    r.travel_s = 180 + (k * 131) % 720;
  }

  // Year-long mean sojourns chosen so that 1/(1/s + Lambda) hits the target mean
  // service times (minutes) with Lambda = count / 525600.
  const std::array<double, 4> service_time = {19.82, 14.05, 16.30, 14.18};
  const std::array<int, 4> zero_rows = {3, 0, 2, 0};
  for (int g = 0; g < 4; ++g) {
    const double lambda = year_counts[g] / 525600.0;
    const double sojourn = 1.0 / (1.0 / service_time[g] - lambda);
    const long positive = year_counts[g] - zero_rows[g];
    long remaining = std::lround(sojourn * 60.0 * positive);
    for (const auto& r : man_night)
      if (r.regime == g) remaining -= r.sojourn_s;
    std::vector<Row*> own;
    for (auto& r : man_rest)
      if (r.regime == g) own.push_back(&r);
    for (int z = 0; z < zero_rows[g]; ++z) own[z]->sojourn_s = 0;
    const long q = static_cast<long>(own.size()) - zero_rows[g];
    const long base = remaining / q, extra = remaining % q;
    for (long i = 0; i < q; ++i) {
      Row& r = *own[zero_rows[g] + i];
      r.sojourn_s = base + (i < extra ? 1 : 0);
      if (i + 1 < q || i % 2 == 1) {
        const long d = 60 * ((i / 2) % 9);
        r.sojourn_s += i % 2 == 0 ? d : -d;
      }
    }
  }

  rows.insert(rows.end(), man_night.begin(), man_night.end());
  rows.insert(rows.end(), bk_night.begin(), bk_night.end());
  rows.insert(rows.end(), man_rest.begin(), man_rest.end());

  // Rows ingestion must not count: a window-end Bronx call, an unmapped call type,
  // a blank travel time and a close before assignment.
  Row edge = rows.front();
  edge.occurred = night_end;
  rows.push_back(edge);
  Row drill = rows.front();
  drill.occurred = night_start + 3600 + 11;
  drill.area = "B9";
  drill.call_type = "DRILL";
  rows.push_back(drill);
  Row blank = man_night.front();
  blank.occurred = night_start + 7200 + 13;
  blank.area = "M9";
  blank.blank_travel = true;
  rows.push_back(blank);
  Row backwards = man_night.front();
  backwards.occurred = night_start + 10800 + 17;
  backwards.area = "M9";
  backwards.sojourn_s = -300;
  rows.push_back(backwards);

  out << "CAD_INCIDENT_ID,INCIDENT_DATETIME,INITIAL_CALL_TYPE,INITIAL_SEVERITY_LEVEL_CODE,"
         "FIRST_ASSIGNMENT_DATETIME,INCIDENT_TRAVEL_TM_SECONDS_QY,INCIDENT_CLOSE_DATETIME,"
         "BOROUGH,INCIDENT_DISPATCH_AREA,ZIPCODE\n";
  long id = 250000001;
  for (const auto& r : rows) {
    const Timestamp assigned = r.occurred + r.delay_s;
    out << id++ << ',' << format_timestamp(r.occurred) << ','
        << (r.call_type.empty() ? kCallTypes[r.regime] : r.call_type.c_str()) << ','
        << 1 + r.regime << ',' << format_timestamp(assigned) << ',';
    if (!r.blank_travel) out << r.travel_s;
    out << ',' << format_timestamp(assigned + r.sojourn_s) << ',' << r.borough << ','
        << r.area << ",\"10" << (400 + id % 90) << "\"\n";
  }
}

}  // namespace regime_design
