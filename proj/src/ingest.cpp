#include "regime_design/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>

#include "regime_design/errors.hpp"
#include "regime_design/evaluation.hpp"
#include "regime_design/performance.hpp"

namespace regime_design {

namespace {

using namespace std::chrono;

Timestamp to_timestamp(int y, int mo, int d, int h, int mi, int s) {
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) return -1;
  const sys_days days{ymd};
  return days.time_since_epoch().count() * 86400LL + h * 3600LL + mi * 60LL + s;
}

// Reads exactly `width` digits at pos (or 1..width when width is negative).
bool read_int(std::string_view t, std::size_t& pos, int width, int& out) {
  const std::size_t max = static_cast<std::size_t>(std::abs(width));
  std::size_t len = 0;
  while (pos + len < t.size() && len < max && std::isdigit(static_cast<unsigned char>(t[pos + len])))
    ++len;
  if (len == 0 || (width > 0 && len != max)) return false;
  std::from_chars(t.data() + pos, t.data() + pos + len, out);
  pos += len;
  return true;
}

bool expect(std::string_view t, std::size_t& pos, char c) {
  if (pos >= t.size() || t[pos] != c) return false;
  ++pos;
  return true;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

// One CSV record; quoted fields may contain separators, doubled quotes and newlines.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields, long& line) {
  fields.clear();
  std::string raw;
  if (!std::getline(in, raw)) return false;
  ++line;
  std::string cur;
  bool quoted = false;
  for (;;) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const char c = raw[i];
      if (quoted) {
        if (c == '"' && i + 1 < raw.size() && raw[i + 1] == '"') {
          cur += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          cur += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(cur));
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    if (!quoted) break;
    cur += '\n';
    if (!std::getline(in, raw)) break;
    ++line;
  }
  fields.push_back(std::move(cur));
  return true;
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  const std::string_view t = trim(text);
  std::size_t p = 0;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (t.size() >= 10 && t[4] == '-') {
    if (!read_int(t, p, 4, y) || !expect(t, p, '-') || !read_int(t, p, 2, mo) ||
        !expect(t, p, '-') || !read_int(t, p, 2, d))
      return std::nullopt;
    if (p < t.size()) {
      if (t[p] != 'T' && t[p] != ' ') return std::nullopt;
      ++p;
      if (!read_int(t, p, 2, h) || !expect(t, p, ':') || !read_int(t, p, 2, mi))
        return std::nullopt;
      if (p < t.size() && (!expect(t, p, ':') || !read_int(t, p, 2, s))) return std::nullopt;
      if (p < t.size() && t[p] == '.') {  // fractional seconds are truncated
        ++p;
        while (p < t.size() && std::isdigit(static_cast<unsigned char>(t[p]))) ++p;
      }
    }
  } else {
    if (!read_int(t, p, -2, mo) || !expect(t, p, '/') || !read_int(t, p, -2, d) ||
        !expect(t, p, '/') || !read_int(t, p, 4, y))
      return std::nullopt;
    if (p < t.size()) {
      if (!expect(t, p, ' ') || !read_int(t, p, -2, h) || !expect(t, p, ':') ||
          !read_int(t, p, 2, mi))
        return std::nullopt;
      if (p < t.size() && t[p] == ':' && (!expect(t, p, ':') || !read_int(t, p, 2, s)))
        return std::nullopt;
      while (p < t.size() && t[p] == ' ') ++p;
      const std::string suffix = upper(t.substr(p));
      if (suffix == "AM" || suffix == "PM") {
        if (h < 1 || h > 12) return std::nullopt;
        h = h % 12 + (suffix == "PM" ? 12 : 0);
        p = t.size();
      }
    }
  }
  if (p != t.size()) return std::nullopt;
  const Timestamp out = to_timestamp(y, mo, d, h, mi, s);
  if (out < 0) return std::nullopt;
  return out;
}

namespace {

struct Civil {
  int y, mo, d, h, mi, s;
};

Civil civil(Timestamp t) {
  const auto days = static_cast<int>(std::floor(static_cast<double>(t) / 86400.0));
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  const long rem = static_cast<long>(t - static_cast<Timestamp>(days) * 86400LL);
  return {static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month())),
          static_cast<int>(static_cast<unsigned>(ymd.day())), static_cast<int>(rem / 3600),
          static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60)};
}

}  // namespace

std::string format_timestamp(Timestamp t) {
  const Civil c = civil(t);
  const int h12 = c.h % 12 == 0 ? 12 : c.h % 12;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%02d/%02d/%04d %02d:%02d:%02d %s", c.mo, c.d, c.y, h12, c.mi, c.s,
                c.h < 12 ? "AM" : "PM");
  return buf;
}

std::string format_iso(Timestamp t) {
  const Civil c = civil(t);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d", c.y, c.mo, c.d, c.h, c.mi, c.s);
  return buf;
}

ParseResult parse_incidents(const std::filesystem::path& path, const ColumnMap& columns) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open incident file '" + path.string() + "'");
  return parse_incidents(in, columns, path.string());
}

ParseResult parse_incidents(std::istream& in, const ColumnMap& columns, const std::string& source) {
  ParseResult out;
  std::vector<std::string> fields;
  long line = 0;
  if (!read_csv_record(in, fields, line)) throw IngestError("empty file, no header row", source, 0);
  if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);

  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < fields.size(); ++i)
      if (trim(fields[i]) == name) return i;
    throw IngestError("missing column '" + name + "'", source, line);
  };
  const std::size_t c_id = column(columns.incident_id), c_occ = column(columns.occurred_at),
                    c_bor = column(columns.borough), c_type = column(columns.call_type),
                    c_area = column(columns.dispatch_area), c_asg = column(columns.assigned_at),
                    c_cls = column(columns.closed_at), c_trv = column(columns.travel);
  const std::size_t width =
      std::max({c_id, c_occ, c_bor, c_type, c_area, c_asg, c_cls, c_trv}) + 1;

  while (read_csv_record(in, fields, line)) {
    if (fields.size() == 1 && trim(fields[0]).empty()) continue;
    ++out.rows;
    if (fields.size() < width) {
      ++out.dropped;
      continue;
    }
    auto stamp = [&](std::size_t c, bool& blank) -> Timestamp {
      const std::string_view v = trim(fields[c]);
      blank = blank || v.empty();
      if (v.empty()) return 0;
      const auto t = parse_timestamp(v);
      if (!t) throw IngestError("malformed timestamp '" + std::string(v) + "'", source, line);
      return *t;
    };
    bool blank = false;
    IncidentRecord r;
    r.incident_id = std::string(trim(fields[c_id]));
    r.borough = std::string(trim(fields[c_bor]));
    r.call_type = std::string(trim(fields[c_type]));
    r.dispatch_area = std::string(trim(fields[c_area]));
    r.occurred_at = stamp(c_occ, blank);
    r.assigned_at = stamp(c_asg, blank);
    r.closed_at = stamp(c_cls, blank);
    const std::string_view tv = trim(fields[c_trv]);
    double travel = NAN;
    if (!tv.empty()) {
      const auto [ptr, ec] = std::from_chars(tv.data(), tv.data() + tv.size(), travel);
      if (ec != std::errc() || ptr != tv.data() + tv.size()) travel = NAN;
    }
    r.travel_minutes = travel * columns.travel_scale;
    const bool ordered = r.occurred_at <= r.assigned_at && r.assigned_at <= r.closed_at;
    if (blank || r.incident_id.empty() || !ordered || !std::isfinite(r.travel_minutes) ||
        r.travel_minutes < 0) {
      ++out.dropped;
      continue;
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

void Profile::validate() const {
  auto fail = [&](const std::string& what) {
    throw DomainError("profile " + name + ": " + what);
  };
  if (!(coverage > 0 && coverage <= 1)) fail("beta must lie in (0, 1]");
  if (!(tolerance > 0 && tolerance < 1)) fail("alpha must lie in (0, 1)");
  if (!(psi > 0) || !std::isfinite(psi)) fail("psi must be positive");
  if (!(phi > 0) || !std::isfinite(phi)) fail("phi must be positive");
  if (!(kappa >= 0) || !std::isfinite(kappa)) fail("kappa must be >= 0");
}

std::optional<int> RegimeMap::regime_of(const std::string& call_type) const {
  const auto it = call_types.find(call_type);
  if (it == call_types.end()) return std::nullopt;
  return it->second;
}

std::vector<IncidentRecord> select_records(const std::vector<IncidentRecord>& records,
                                           const std::string& borough,
                                           const ScenarioWindow& window,
                                           const RegimeMap& regimes) {
  if (!(window.end > window.start))
    throw IngestError("window " + window.name + " ends before it starts");
  const std::string want = upper(borough);
  std::vector<IncidentRecord> out;
  for (const auto& r : records) {
    if (!want.empty() && upper(r.borough) != want) continue;
    if (!window.contains(r.occurred_at)) continue;
    if (!regimes.regime_of(r.call_type)) {
      if (regimes.ignore_unmapped) continue;
      throw IngestError("incident " + r.incident_id + " has unmapped call type '" + r.call_type +
                        "'");
    }
    out.push_back(r);
  }
  return out;
}

std::vector<ConflictEdge> conflict_pairs(const std::vector<IncidentRecord>& records,
                                         const ConflictRule& rule) {
  const int n = static_cast<int>(records.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ra = records[a];
    const auto& rb = records[b];
    if (rule.same_area && ra.dispatch_area != rb.dispatch_area)
      return ra.dispatch_area < rb.dispatch_area;
    return ra.occurred_at != rb.occurred_at ? ra.occurred_at < rb.occurred_at : a < b;
  });
  std::vector<ConflictEdge> edges;
  for (int i = 0; i < n; ++i) {
    const auto& ri = records[order[i]];
    for (int j = i + 1; j < n; ++j) {
      const auto& rj = records[order[j]];
      if (rule.same_area && rj.dispatch_area != ri.dispatch_area) break;
      if (static_cast<double>(rj.occurred_at - ri.occurred_at) > rule.max_gap_seconds) break;
      edges.push_back({std::min(order[i], order[j]), std::max(order[i], order[j])});
    }
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

Instance build_instance(const std::vector<IncidentRecord>& records, const std::string& borough,
                        const ScenarioWindow& window, const RegimeMap& regimes,
                        const Profile& profile, const ConflictRule& rule) {
  profile.validate();
  const std::vector<IncidentRecord> chosen = select_records(records, borough, window, regimes);
  if (chosen.empty())
    throw IngestError("no incidents for " + (borough.empty() ? std::string("all boroughs") : borough) +
                      " in window " + window.name);
  const int R = static_cast<int>(regimes.names.size());
  std::vector<long> counts(R, 0);
  std::vector<Demand> demands;
  demands.reserve(chosen.size());
  for (const auto& r : chosen) {
    const int k = *regimes.regime_of(r.call_type);
    if (k < 0 || k >= R) throw IngestError("call type " + r.call_type + " maps outside the regimes");
    ++counts[k];
    Demand d;
    d.id = r.incident_id;
    d.access_time = r.travel_minutes;
    // Completion scaled by phi can fall below the travel time; the threshold is clamped there.
    d.threshold = std::max(profile.phi * r.completion_minutes(), d.access_time);
    d.tolerance = profile.tolerance;
    demands.push_back(std::move(d));
  }
  const double total = static_cast<double>(chosen.size());
  std::vector<Regime> reg(R);
  for (int k = 0; k < R; ++k) {
    reg[k].index = k;
    reg[k].name = regimes.names[k];
    reg[k].arrival_rate = counts[k] / window.minutes();
    reg[k].mixture_weight = counts[k] / total;
    reg[k].unit_cost = regimes.unit_costs.empty() ? 1.0 : regimes.unit_costs.at(k);
  }
  return Instance(std::move(demands), std::move(reg), conflict_pairs(chosen, rule));
}

BaselineEstimate estimate_baseline_rates(const std::vector<IncidentRecord>& records,
                                         const RegimeMap& regimes, const ScenarioWindow& window) {
  const int R = static_cast<int>(regimes.names.size());
  std::vector<long> counts(R, 0);
  BaselineEstimate out;
  out.observations.assign(R, 0);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(R);
  for (const auto& r : records) {
    if (!window.contains(r.occurred_at)) continue;
    const auto k = regimes.regime_of(r.call_type);
    if (!k) continue;
    ++counts[*k];
    const double s = r.sojourn_minutes();
    if (s > 0 && std::isfinite(s)) {
      sum[*k] += s;
      ++out.observations[*k];
    }
  }
  out.mean_sojourn.resize(R);
  out.arrival_rates.resize(R);
  for (int k = 0; k < R; ++k) {
    if (out.observations[k] == 0)
      throw IngestError("regime " + regimes.names[k] + " has no positive sojourn in window " +
                        window.name);
    out.mean_sojourn[k] = sum[k] / out.observations[k];
    out.arrival_rates[k] = counts[k] / window.minutes();
  }
  out.service_rates = out.mean_sojourn.cwiseInverse() + out.arrival_rates;
  out.mean_service_time = out.service_rates.cwiseInverse();
  return out;
}

double profile_tail_fraction(const Profile& profile, int num_demands) {
  if (num_demands < 1) throw DomainError("tail fraction needs at least one demand");
  if (profile.coverage < 1 && tail_count(profile.coverage, num_demands) >= 1)
    return profile.coverage;
  return 1.0 - 1.0 / num_demands;
}

double resolve_gamma_threshold(const Eigen::VectorXd& baseline_expectations,
                               const Profile& profile) {
  if (baseline_expectations.size() == 0) throw DomainError("baseline expectations are empty");
  const int n = static_cast<int>(baseline_expectations.size());
  return profile.psi * cvar_of_values(baseline_expectations, profile_tail_fraction(profile, n));
}

DesignParams design_params(const Profile& profile, double tail_threshold, int num_demands) {
  profile.validate();
  DesignParams p;
  p.coverage = profile.coverage;
  p.tail_fraction = profile_tail_fraction(profile, num_demands);
  p.tail_threshold = tail_threshold;
  p.congestion_weight = profile.kappa;
  return p;
}

ServicePlan baseline_plan(const Instance& instance) {
  if (!instance.baseline_rates())
    throw PreconditionError("instance carries no baseline service rates");
  ServicePlan plan;
  plan.method = "baseline";
  plan.service_rates = *instance.baseline_rates();
  require_stable(plan.service_rates, instance.arrival_rates());
  plan.protected_demands.assign(instance.num_demands(), false);
  for (int a = 0; a < instance.num_demands(); ++a) {
    const Demand& d = instance.demand(a);
    plan.protected_demands[a] =
        d.sla_trivial() || sla_lhs(d, instance.regimes(), plan.service_rates) <= d.tolerance;
  }
  plan.feasible = false;
  return plan;
}

const Profile& IngestConfig::profile(const std::string& name) const {
  for (const auto& p : profiles)
    if (p.name == name) return p;
  throw IngestError("unknown profile '" + name + "'");
}

const ScenarioWindow& IngestConfig::window(const std::string& name) const {
  for (const auto& w : windows)
    if (w.name == name) return w;
  throw IngestError("unknown window '" + name + "'");
}

IngestConfig ingest_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base) {
  IngestConfig cfg;
  try {
    if (doc.contains("data")) {
      std::filesystem::path p = doc.at("data").get<std::string>();
      cfg.data = p.is_relative() && !base.empty() ? base / p : p;
    }
    if (doc.contains("columns")) {
      const auto& c = doc.at("columns");
      ColumnMap& m = cfg.columns;
      m.incident_id = c.value("incident_id", m.incident_id);
      m.occurred_at = c.value("occurred_at", m.occurred_at);
      m.borough = c.value("borough", m.borough);
      m.call_type = c.value("call_type", m.call_type);
      m.dispatch_area = c.value("dispatch_area", m.dispatch_area);
      m.assigned_at = c.value("assigned_at", m.assigned_at);
      m.closed_at = c.value("closed_at", m.closed_at);
      m.travel = c.value("travel", m.travel);
      m.travel_scale = c.value("travel_minutes_per_unit", m.travel_scale);
    }
    const auto& regs = doc.at("regimes");
    for (const auto& r : regs) {
      const int k = static_cast<int>(cfg.regimes.names.size());
      cfg.regimes.names.push_back(r.at("name").get<std::string>());
      cfg.regimes.unit_costs.push_back(r.value("unit_cost", 1.0));
      for (const auto& t : r.at("call_types")) {
        if (!cfg.regimes.call_types.emplace(t.get<std::string>(), k).second)
          throw IngestError("call type " + t.get<std::string>() + " mapped twice");
      }
    }
    if (cfg.regimes.names.empty()) throw IngestError("config lists no regimes");
    cfg.regimes.ignore_unmapped = doc.value("ignore_unmapped_call_types", false);
    if (doc.contains("conflicts")) {
      cfg.conflicts.max_gap_seconds = doc["conflicts"].value("max_gap_seconds", 60.0);
      cfg.conflicts.same_area = doc["conflicts"].value("same_area", true);
    }
    cfg.boroughs = doc.value("boroughs", std::vector<std::string>{});
    for (const auto& w : doc.value("windows", nlohmann::json::array())) {
      ScenarioWindow sw;
      sw.name = w.at("name").get<std::string>();
      const auto s = parse_timestamp(w.at("start").get<std::string>());
      const auto e = parse_timestamp(w.at("end").get<std::string>());
      if (!s || !e) throw IngestError("window " + sw.name + " has a malformed timestamp");
      sw.start = *s;
      sw.end = *e;
      if (!(sw.end > sw.start)) throw IngestError("window " + sw.name + " ends before it starts");
      cfg.windows.push_back(sw);
    }
    for (const auto& p : doc.value("profiles", nlohmann::json::array())) {
      Profile pr;
      pr.name = p.at("name").get<std::string>();
      pr.coverage = p.at("beta").get<double>();
      pr.tolerance = p.at("alpha").get<double>();
      pr.psi = p.value("psi", pr.psi);
      pr.phi = p.value("phi", pr.phi);
      pr.kappa = p.value("kappa", 0.1);
      pr.validate();
      cfg.profiles.push_back(pr);
    }
    if (doc.contains("sweep")) {
      const auto& sw = doc.at("sweep");
      cfg.sweep.boroughs = sw.value("boroughs", cfg.sweep.boroughs);
      cfg.sweep.windows = sw.value("windows", cfg.sweep.windows);
      cfg.sweep.profiles = sw.value("profiles", cfg.sweep.profiles);
      cfg.sweep.methods = sw.value("methods", cfg.sweep.methods);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(std::string("bad ingest config: ") + e.what());
  } catch (const DomainError& e) {
    throw IngestError(std::string("bad ingest config: ") + e.what());
  }
  return cfg;
}

IngestConfig load_ingest_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open config '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IngestError(std::string("config is not JSON: ") + e.what(), path.string());
  }
  return ingest_config_from_json(doc, path.parent_path());
}

nlohmann::json to_json(const Profile& p) {
  return {{"name", p.name}, {"beta", p.coverage}, {"alpha", p.tolerance},
          {"psi", p.psi},   {"phi", p.phi},       {"kappa", p.kappa}};
}

}  // namespace regime_design
