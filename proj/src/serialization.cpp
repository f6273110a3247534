#include "regime_design/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "regime_design/errors.hpp"

namespace regime_design {

using nlohmann::json;

namespace {

void require_format(const json& doc, const char* format) {
  if (!doc.is_object() || doc.value("format", "") != format)
    throw DomainError(std::string("document is not a ") + format + " file");
  const int version = doc.value("version", 0);
  if (version != kFormatVersion)
    throw DomainError(std::string(format) + ": unsupported version " + std::to_string(version));
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json to_json(const Instance& instance) {
  json doc;
  doc["format"] = kInstanceFormat;
  doc["version"] = kFormatVersion;
  doc["stability_margin"] = instance.stability_margin();
  doc["mixture_tolerance"] = instance.validation_options().mixture_tolerance;

  json regimes = json::array();
  for (const auto& g : instance.regimes())
    regimes.push_back({{"index", g.index},
                       {"name", g.name},
                       {"arrival_rate", g.arrival_rate},
                       {"mixture_weight", g.mixture_weight},
                       {"unit_cost", g.unit_cost}});
  doc["regimes"] = std::move(regimes);

  json demands = json::array();
  for (const auto& d : instance.demands())
    demands.push_back({{"id", d.id},
                       {"access_time", d.access_time},
                       {"threshold", d.threshold},
                       {"tolerance", d.tolerance},
                       {"weight", d.weight}});
  doc["demands"] = std::move(demands);

  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& e : instance.conflict_edges()) {
    std::string u = instance.demand(e.first).id, v = instance.demand(e.second).id;
    if (v < u) std::swap(u, v);
    edges.emplace_back(std::move(u), std::move(v));
  }
  std::sort(edges.begin(), edges.end());
  json jedges = json::array();
  for (auto& [u, v] : edges) jedges.push_back(json::array({u, v}));
  doc["conflict_edges"] = std::move(jedges);

  if (const auto& base = instance.baseline_rates())
    doc["baseline_rates"] = std::vector<double>(base->data(), base->data() + base->size());
  return doc;
}

Instance instance_from_json(const json& doc, ValidationOptions options) {
  require_format(doc, kInstanceFormat);
  if (doc.contains("mixture_tolerance"))
    options.mixture_tolerance =
        std::max(options.mixture_tolerance, doc.at("mixture_tolerance").get<double>());

  std::vector<Regime> regimes;
  for (const auto& j : doc.at("regimes")) {
    Regime g;
    g.index = j.value("index", static_cast<int>(regimes.size()));
    g.name = j.value("name", "");
    g.arrival_rate = j.at("arrival_rate").get<double>();
    g.mixture_weight = j.at("mixture_weight").get<double>();
    g.unit_cost = j.value("unit_cost", 1.0);
    regimes.push_back(std::move(g));
  }
  std::vector<Demand> demands;
  for (const auto& j : doc.at("demands")) {
    Demand d;
    d.id = j.at("id").get<std::string>();
    d.access_time = j.at("access_time").get<double>();
    d.threshold = j.at("threshold").get<double>();
    d.tolerance = j.at("tolerance").get<double>();
    d.weight = j.value("weight", 1.0);
    demands.push_back(std::move(d));
  }
  std::vector<std::pair<std::string, std::string>> edges;
  if (doc.contains("conflict_edges"))
    for (const auto& e : doc.at("conflict_edges"))
      edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());

  Instance instance(std::move(demands), std::move(regimes), edges,
                    doc.value("stability_margin", kDefaultStabilityMargin), options);
  if (doc.contains("baseline_rates")) {
    const auto v = doc.at("baseline_rates").get<std::vector<double>>();
    return instance.with_baseline_rates(Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()));
  }
  return instance;
}

json to_json(const Instance& instance, const ServicePlan& plan) {
  json doc;
  doc["format"] = kPlanFormat;
  doc["version"] = kFormatVersion;
  doc["method"] = plan.method;
  doc["feasible"] = plan.feasible;
  doc["objective_value"] = number_or_null(plan.objective_value);
  doc["service_rates"] = std::vector<double>(plan.service_rates.data(),
                                             plan.service_rates.data() + plan.service_rates.size());
  json ids = json::array();
  for (int a = 0; a < static_cast<int>(plan.protected_demands.size()); ++a)
    if (plan.protected_demands[a]) ids.push_back(instance.demand(a).id);
  doc["protected"] = std::move(ids);
  return doc;
}

ServicePlan plan_from_json(const json& doc, const Instance& instance) {
  require_format(doc, kPlanFormat);
  ServicePlan plan;
  plan.method = doc.value("method", "");
  plan.feasible = doc.value("feasible", false);
  const auto& obj = doc.at("objective_value");
  plan.objective_value = obj.is_null() ? std::numeric_limits<double>::infinity() : obj.get<double>();
  const auto rates = doc.at("service_rates").get<std::vector<double>>();
  if (static_cast<int>(rates.size()) != instance.num_regimes())
    throw DimensionMismatch("plan has " + std::to_string(rates.size()) + " service rates for " +
                            std::to_string(instance.num_regimes()) + " regimes");
  plan.service_rates = Eigen::Map<const Eigen::VectorXd>(rates.data(), rates.size());
  plan.protected_demands.assign(instance.num_demands(), false);
  for (const auto& j : doc.at("protected")) {
    const auto id = j.get<std::string>();
    const auto a = instance.index_of(id);
    if (!a) throw DimensionMismatch("plan protects unknown demand '" + id + "'");
    plan.protected_demands[*a] = true;
  }
  return plan;
}

json to_json(const DesignParams& params) {
  return {{"coverage", params.coverage},
          {"tail_fraction", params.tail_fraction},
          {"tail_threshold", params.tail_threshold},
          {"congestion_weight", params.congestion_weight},
          {"weighted_coverage", params.weighted_coverage}};
}

DesignParams params_from_json(const json& doc) {
  DesignParams p;
  p.coverage = doc.value("coverage", p.coverage);
  p.tail_fraction = doc.value("tail_fraction", p.tail_fraction);
  if (doc.contains("tail_threshold") && !doc.at("tail_threshold").is_null())
    p.tail_threshold = doc.at("tail_threshold").get<double>();
  p.congestion_weight = doc.value("congestion_weight", p.congestion_weight);
  p.weighted_coverage = doc.value("weighted_coverage", p.weighted_coverage);
  return p;
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& doc) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::string content_hash(const json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace regime_design
