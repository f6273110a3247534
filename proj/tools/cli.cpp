#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "regime_design/cone.hpp"
#include "regime_design/evaluation.hpp"
#include "regime_design/exact_solvers.hpp"
#include "regime_design/ingest.hpp"
#include "regime_design/poly.hpp"
#include "regime_design/report.hpp"
#include "regime_design/serialization.hpp"
#include "regime_design/simulator.hpp"

#ifndef REGIME_DESIGN_VERSION
#define REGIME_DESIGN_VERSION "unknown"
#endif

namespace regime_design::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Infeasible: return kExitInfeasible;
    case ErrorKind::Precondition: return kExitPrecondition;
    case ErrorKind::Limit: return kExitLimit;
    case ErrorKind::Other: break;
  }
  return kExitOther;
}

LogLevel log_level() {
  const char* env = std::getenv("REGIME_DESIGN_LOG");
  const std::string v = env ? env : "";
  if (v == "error") return LogLevel::Error;
  if (v == "info") return LogLevel::Info;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Warn;
}

void log(LogLevel level, const std::string& message) {
  static std::mutex mu;
  static const LogLevel threshold = log_level();
  if (level > threshold) return;
  static constexpr const char* names[] = {"error", "warn", "info", "debug"};
  std::lock_guard lock(mu);
  std::cerr << "regime-design: " << names[static_cast<int>(level)] << ": " << message << '\n';
}

std::string slug(const std::string& text) {
  std::string out;
  bool gap = false;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-') {
      if (gap && !out.empty()) out += '_';
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      gap = false;
    } else {
      gap = true;
    }
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& argv) {
    doc_["command"] = std::move(command);
    doc_["argv"] = argv;
    doc_["tool_version"] = REGIME_DESIGN_VERSION;
    doc_["started_at"] = utc_now();
    doc_["outputs"] = json::array();
  }

  json& operator[](const char* key) { return doc_[key]; }
  void output(const fs::path& file) { doc_["outputs"].push_back(file.filename().string()); }

  void write(const fs::path& dir) {
    doc_["finished_at"] = utc_now();
    write_json(dir / "manifest.json", doc_);
  }

 private:
  json doc_;
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void prepare_dir(const fs::path& dir) {
  if (dir.empty()) throw DomainError("--out is required");
  fs::create_directories(dir);
}

std::string instance_hash(const Instance& instance) { return content_hash(to_json(instance)); }

// ---------------------------------------------------------------------------
// Ingestion shared by ingest and sweep.

struct Source {
  IngestConfig config;
  ParseResult parsed;
  std::string data_label;
};

Source load_source(const DataSource& src) {
  Source s;
  s.config = load_ingest_config(src.config);
  if (src.synthetic) {
    std::stringstream buf;
    write_synthetic_extract(buf);
    s.parsed = parse_incidents(buf, s.config.columns, "<synthetic>");
    s.data_label = "synthetic";
  } else {
    const fs::path data = src.data ? *src.data : s.config.data;
    if (data.empty()) throw IngestError("no incident data: set \"data\" in the config or --data");
    s.parsed = parse_incidents(data, s.config.columns);
    s.data_label = data.string();
  }
  log(LogLevel::Info, "parsed " + std::to_string(s.parsed.rows) + " rows, dropped " +
                          std::to_string(s.parsed.dropped));
  return s;
}

std::vector<std::string> pick(const std::vector<std::string>& requested,
                              const std::vector<std::string>& fallback,
                              const std::vector<std::string>& all) {
  if (!requested.empty()) return requested;
  if (!fallback.empty()) return fallback;
  return all;
}

template <typename T>
std::vector<std::string> names_of(const std::vector<T>& items) {
  std::vector<std::string> out;
  for (const auto& i : items) out.push_back(i.name);
  return out;
}

struct Prepared {
  Instance instance;
  DesignParams params;
  bool has_baseline = false;
  std::string warning;
};

// One (borough, window, profile) instance with mu-hat attached and Gamma resolved.
Prepared prepare(const Source& src, const std::string& borough, const ScenarioWindow& window,
                 const Profile& profile) {
  const IngestConfig& cfg = src.config;
  Instance inst = build_instance(src.parsed.records, borough, window, cfg.regimes, profile,
                                 cfg.conflicts);
  const int n = inst.num_demands();
  std::string warning;
  bool has_baseline = false;
  double gamma_threshold = kUnboundedTail;
  try {
    const auto chosen = select_records(src.parsed.records, borough, window, cfg.regimes);
    const BaselineEstimate est = estimate_baseline_rates(chosen, cfg.regimes, window);
    inst = inst.with_baseline_rates(est.service_rates);
    has_baseline = true;
    gamma_threshold =
        resolve_gamma_threshold(expected_responses(inst, est.service_rates), profile);
  } catch (const IngestError& e) {
    warning = std::string("no baseline rates, tail threshold left unbounded: ") + e.what();
  }
  return {std::move(inst), design_params(profile, gamma_threshold, n), has_baseline, warning};
}

template <typename Fn>
void run_pool(std::size_t count, int jobs, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < count;) fn(i);
  };
  const int width = std::clamp(jobs, 1, std::max(1, static_cast<int>(count)));
  std::vector<std::thread> pool;
  for (int t = 1; t < width; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Solving shared by solve and sweep.

struct Outcome {
  ServicePlan plan;
  SolveStatus status = SolveStatus::Infeasible;
  double lower_bound = 0.0;
  long work = 0;  ///< Benders iterations, B&B nodes or enumerated points
  double wall_ms = 0.0;
  std::optional<BendersState> benders;
};

Outcome run_method(const Instance& inst, const DesignParams& params, const std::string& method,
                   double gap, int max_iter, int jobs) {
  Outcome o;
  const auto start = Clock::now();
  if (method == "benders") {
    BendersOptions opt;
    opt.gap_tol = gap;
    opt.max_iter = max_iter;
    BendersResult r = benders_solve(inst, params, opt);
    o.plan = r.plan;
    o.status = r.state.status;
    o.lower_bound = r.state.lower_bound;
    o.work = r.state.iterations;
    o.benders = std::move(r.state);
  } else if (method == "compact") {
    CompactOptions opt;
    opt.gap_tol = gap;
    const CompactResult r = compact_solve(inst, params, opt);
    o.plan = r.plan;
    o.status = r.status;
    o.lower_bound = r.lower_bound;
    o.work = r.nodes;
  } else if (method == "poly") {
    o.plan = solve_conflict_free_uniform(inst, params);
    o.status = o.plan.feasible ? SolveStatus::Optimal : SolveStatus::Infeasible;
    o.lower_bound = o.plan.objective_value;
    o.work = 1;
  } else if (method == "enum") {
    EnumerateOptions opt;
    opt.threads = jobs;
    const EnumerateResult r = enumerate_solve(inst, params, opt);
    o.plan = r.plan;
    o.status = r.status;
    o.lower_bound = r.plan.objective_value;
    o.work = r.evaluated;
  } else {
    throw DomainError("unknown method '" + method + "' (benders, compact, poly, enum)");
  }
  o.wall_ms = ms_since(start);
  return o;
}

int status_exit(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return kExitOk;
    case SolveStatus::Infeasible: return kExitInfeasible;
    case SolveStatus::LimitReached: return kExitLimit;
  }
  return kExitOther;
}

json plan_document(const Instance& inst, const Outcome& o) {
  json doc = to_json(inst, o.plan);
  doc["status"] = to_string(o.status);
  doc["lower_bound"] = std::isfinite(o.lower_bound) ? json(o.lower_bound) : json(nullptr);
  doc["instance_hash"] = instance_hash(inst);
  doc["manifest"] = "manifest.json";
  return doc;
}

// Writes plan.json, iterations.csv (Benders) and program.txt into dir.
void write_solution(const fs::path& dir, const Instance& inst, const DesignParams& params,
                    const Outcome& o, Manifest& m) {
  write_json(dir / "plan.json", plan_document(inst, o));
  m.output(dir / "plan.json");
  if (o.benders) {
    auto out = open_out(dir / "iterations.csv");
    write_iteration_csv(*o.benders, out);
    m.output(dir / "iterations.csv");
  }
  if (o.plan.feasible) {
    auto out = open_out(dir / "program.txt");
    dump_program(build_subproblem(inst, params, o.plan.protected_demands), out);
    m.output(dir / "program.txt");
  }
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    log(LogLevel::Error, e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    log(LogLevel::Error, e.what());
    return kExitOther;
  }
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_ingest(const IngestArgs& args, const std::vector<std::string>& argv) {
  return guarded([&] {
    prepare_dir(args.out);
    const Source src = load_source(args.source);
    const IngestConfig& cfg = src.config;
    const auto boroughs = pick(args.source.boroughs, {}, cfg.boroughs);
    const auto windows = pick(args.source.windows, {}, names_of(cfg.windows));
    const auto profiles = pick(args.source.profiles, {}, names_of(cfg.profiles));
    if (boroughs.empty()) throw IngestError("no boroughs configured");

    struct Cell {
      std::string borough, window;
      std::string status = "ok";
      int demands = 0, edges = 0;
      Eigen::VectorXd weights, rates;
      std::vector<std::pair<std::string, json>> files;  // name, document
    };
    std::vector<Cell> cells;
    for (const auto& b : boroughs)
      for (const auto& w : windows) {
        Cell c;
        c.borough = b;
        c.window = w;
        cells.push_back(std::move(c));
      }

    run_pool(cells.size(), args.jobs, [&](std::size_t i) {
      Cell& c = cells[i];
      const ScenarioWindow& window = cfg.window(c.window);
      for (const auto& pname : profiles) {
        const Profile& profile = cfg.profile(pname);
        try {
          Prepared p = prepare(src, c.borough, window, profile);
          if (!p.warning.empty()) log(LogLevel::Warn, c.borough + "/" + c.window + ": " + p.warning);
          c.demands = p.instance.num_demands();
          c.edges = static_cast<int>(p.instance.conflict_edges().size());
          c.weights = p.instance.mixture_weights();
          c.rates = p.instance.arrival_rates();
          const std::string stem = slug(c.borough) + "_" + slug(c.window) + "_" + slug(pname);
          json params = to_json(p.params);
          params["profile"] = to_json(profile);
          c.files.emplace_back(stem + ".instance.json", to_json(p.instance));
          c.files.emplace_back(stem + ".params.json", std::move(params));
        } catch (const IngestError& e) {
          c.status = "empty";
          log(LogLevel::Warn, c.borough + "/" + c.window + ": " + e.what());
          break;
        }
      }
    });

    Manifest m("ingest", argv);
    m["config"] = fs::absolute(args.source.config).string();
    m["data"] = src.data_label;
    m["rows"] = src.parsed.rows;
    m["dropped_rows"] = src.parsed.dropped;
    json hashes = json::object();
    auto summary = open_out(args.out / "summary.csv");
    summary.precision(10);
    summary << "borough,window,status,demands,edges";
    for (const auto& r : cfg.regimes.names) summary << ",pi_" << r;
    for (const auto& r : cfg.regimes.names) summary << ",lambda_" << r;
    summary << '\n';
    for (const auto& c : cells) {
      summary << '"' << c.borough << "\"," << c.window << ',' << c.status << ',' << c.demands
              << ',' << c.edges;
      const auto R = static_cast<Eigen::Index>(cfg.regimes.names.size());
      for (Eigen::Index r = 0; r < R; ++r)
        summary << ',' << (c.status == "ok" ? c.weights[r] : 0.0);
      for (Eigen::Index r = 0; r < R; ++r)
        summary << ',' << (c.status == "ok" ? c.rates[r] : 0.0);
      summary << '\n';
      for (const auto& [name, doc] : c.files) {
        write_json(args.out / name, doc);
        m.output(args.out / name);
        if (name.ends_with(".instance.json")) hashes[name] = content_hash(doc);
      }
    }
    m.output(args.out / "summary.csv");
    m["instance_hashes"] = std::move(hashes);
    m.write(args.out);
    return kExitOk;
  });
}

int cmd_solve(const SolveArgs& args, const std::vector<std::string>& argv) {
  return guarded([&] {
    prepare_dir(args.out);
    const Instance inst = instance_from_json(read_json(args.instance));
    const DesignParams params = params_from_json(read_json(args.params));
    const Outcome o = run_method(inst, params, args.method, args.gap, args.max_iter, args.jobs);
    log(LogLevel::Info, args.method + ": " + to_string(o.status) + " objective " +
                            std::to_string(o.plan.objective_value));
    Manifest m("solve", argv);
    m["config"] = fs::absolute(args.params).string();
    m["instance"] = fs::absolute(args.instance).string();
    m["instance_hash"] = instance_hash(inst);
    m["method"] = args.method;
    m["parameters"] = to_json(params);
    m["gap"] = args.gap;
    m["max_iter"] = args.max_iter;
    m["seed"] = args.seed;
    m["status"] = to_string(o.status);
    m["wall_ms"] = o.wall_ms;
    write_solution(args.out, inst, params, o, m);
    m.write(args.out);
    return status_exit(o.status);
  });
}

int cmd_simulate(const SimulateArgs& args, const std::vector<std::string>& argv) {
  return guarded([&] {
    prepare_dir(args.out);
    const Instance inst = instance_from_json(read_json(args.instance));
    const ServicePlan plan = plan_from_json(read_json(args.plan), inst);
    SimulationOptions opt;
    opt.grid_points = args.grid_points;
    opt.discrete_event = args.discrete_event;
    opt.threads = args.jobs;
    const SimulationResult res = simulate(inst, plan, args.samples, args.seed, {}, opt);

    Manifest m("simulate", argv);
    m["config"] = nullptr;
    m["instance"] = fs::absolute(args.instance).string();
    m["instance_hash"] = instance_hash(inst);
    m["plan"] = fs::absolute(args.plan).string();
    m["samples"] = args.samples;
    m["seed"] = args.seed;
    m["max_cdf_gap"] = res.max_cdf_gap;
    {
      auto out = open_out(args.out / "simulation.csv");
      write_simulation_csv(res, out);
      m.output(args.out / "simulation.csv");
    }
    auto out = open_out(args.out / "demands.csv");
    out.precision(12);
    out << "demand_id,empirical_mean,analytic_mean,analytic_sd,sla_hit_rate,analytic_sla,"
           "max_cdf_gap\n";
    for (const auto& d : res.demands)
      out << d.id << ',' << d.empirical_mean << ',' << d.analytic_mean << ',' << d.analytic_sd
          << ',' << d.sla_hit_rate << ',' << d.analytic_sla << ',' << d.max_cdf_gap << '\n';
    m.output(args.out / "demands.csv");
    m.write(args.out);
    return kExitOk;
  });
}

int cmd_report(const ReportArgs& args, const std::vector<std::string>& argv) {
  return guarded([&] {
    prepare_dir(args.out);
    const Instance inst = instance_from_json(read_json(args.instance));
    const DesignParams params = params_from_json(read_json(args.params));
    const std::string hash = instance_hash(inst);
    auto load_plan = [&](const fs::path& path) {
      const json doc = read_json(path);
      if (doc.contains("instance_hash") && doc["instance_hash"] != hash)
        throw PreconditionError("plan " + path.string() + " was computed on a different instance");
      return plan_from_json(doc, inst);
    };
    const ServicePlan base =
        args.baseline == "baseline" ? baseline_plan(inst) : load_plan(args.baseline);
    const ServicePlan opt = load_plan(args.optimal);
    const DeviationReport rep = deviation_report(inst, params, base, opt);

    Manifest m("report", argv);
    m["config"] = fs::absolute(args.params).string();
    m["instance"] = fs::absolute(args.instance).string();
    m["instance_hash"] = hash;
    m["parameters"] = to_json(params);
    {
      auto out = open_out(args.out / "deviation.csv");
      std::string label = args.instance.stem().string();
      if (label.ends_with(".instance")) label.resize(label.size() - 9);
      write_deviation_csv(rep, label, out);
      m.output(args.out / "deviation.csv");
    }
    auto out = open_out(args.out / "paired.csv");
    write_paired_csv(rep, out);
    m.output(args.out / "paired.csv");
    m.write(args.out);
    return kExitOk;
  });
}

int cmd_sweep(const SweepArgs& args, const std::vector<std::string>& argv) {
  return guarded([&] {
    prepare_dir(args.out);
    const Source src = load_source(args.source);
    const IngestConfig& cfg = src.config;
    const auto boroughs = pick(args.source.boroughs, cfg.sweep.boroughs, cfg.boroughs);
    const auto windows = pick(args.source.windows, cfg.sweep.windows, names_of(cfg.windows));
    const auto profiles = pick(args.source.profiles, cfg.sweep.profiles, names_of(cfg.profiles));
    const auto methods = pick(args.methods, cfg.sweep.methods, {"benders"});

    struct Run {
      std::string borough, window, profile, method;
      std::string status = "error", error;
      int demands = 0, edges = 0;
      double objective = 0, lower_bound = 0, wall_ms = 0;
      long work = 0;
      std::optional<DeviationReport> deviation;
    };
    struct Task {
      std::string borough, window, profile;
      std::vector<Run> runs;
    };
    std::vector<Task> tasks;
    for (const auto& b : boroughs)
      for (const auto& w : windows)
        for (const auto& p : profiles) tasks.push_back({b, w, p, {}});

    fs::create_directories(args.out / "runs");
    run_pool(tasks.size(), args.jobs, [&](std::size_t i) {
      Task& t = tasks[i];
      std::optional<Prepared> prep;
      std::string failure;
      try {
        prep = prepare(src, t.borough, cfg.window(t.window), cfg.profile(t.profile));
        if (prep->instance.num_demands() > args.max_demands)
          failure = "skipped: " + std::to_string(prep->instance.num_demands()) +
                    " demands exceed --max-demands";
      } catch (const std::exception& e) {
        failure = e.what();
      }
      for (const auto& method : methods) {
        Run r;
        r.borough = t.borough;
        r.window = t.window;
        r.profile = t.profile;
        r.method = method;
        if (prep) {
          r.demands = prep->instance.num_demands();
          r.edges = static_cast<int>(prep->instance.conflict_edges().size());
        }
        if (!failure.empty()) {
          r.error = failure;
          t.runs.push_back(std::move(r));
          continue;
        }
        try {
          const Outcome o = run_method(prep->instance, prep->params, method, args.gap,
                                       args.max_iter, 1);
          r.status = to_string(o.status);
          r.objective = o.plan.objective_value;
          r.lower_bound = o.lower_bound;
          r.wall_ms = o.wall_ms;
          r.work = o.work;
          const fs::path dir = args.out / "runs" /
                               (slug(t.borough) + "_" + slug(t.window) + "_" + slug(t.profile) +
                                "_" + method);
          fs::create_directories(dir);
          Manifest m("sweep", argv);
          m["config"] = fs::absolute(args.source.config).string();
          m["instance_hash"] = instance_hash(prep->instance);
          m["method"] = method;
          m["parameters"] = to_json(prep->params);
          m["seed"] = args.seed;
          m["status"] = r.status;
          write_json(dir / "instance.json", to_json(prep->instance));
          m.output(dir / "instance.json");
          write_solution(dir, prep->instance, prep->params, o, m);
          if (o.plan.feasible && prep->has_baseline)
            r.deviation = deviation_report(prep->instance, prep->params,
                                           baseline_plan(prep->instance), o.plan);
          m.write(dir);
        } catch (const std::exception& e) {
          r.error = e.what();
        }
        if (!r.error.empty()) log(LogLevel::Warn, t.borough + "/" + t.window + "/" + t.profile +
                                                      "/" + method + ": " + r.error);
        t.runs.push_back(std::move(r));
      }
    });

    Manifest m("sweep", argv);
    m["config"] = fs::absolute(args.source.config).string();
    m["data"] = src.data_label;
    m["methods"] = methods;
    m["gap"] = args.gap;
    m["max_iter"] = args.max_iter;
    m["seed"] = args.seed;
    auto out = open_out(args.out / "aggregate.csv");
    out.precision(12);
    out << "borough,window,profile,method,status,demands,edges,objective,lower_bound,wall_ms,"
           "work,response_mean_pct,cvar_pct,utilization_pct,cost_pct,error\n";
    for (const auto& t : tasks)
      for (const auto& r : t.runs) {
        out << '"' << r.borough << "\"," << r.window << ',' << r.profile << ',' << r.method << ','
            << r.status << ',' << r.demands << ',' << r.edges << ',' << r.objective << ','
            << r.lower_bound << ',' << r.wall_ms << ',' << r.work;
        if (r.deviation) {
          out << ',' << r.deviation->row("response_mean").relative_change_pct << ','
              << r.deviation->row("cvar").relative_change_pct << ','
              << r.deviation->row("mean_utilization").relative_change_pct << ','
              << r.deviation->row("capacity_cost").relative_change_pct;
        } else {
          out << ",,,,";
        }
        std::string err = r.error;
        std::replace(err.begin(), err.end(), '"', '\'');
        out << ",\"" << err << "\"\n";
      }
    {
      auto dev = open_out(args.out / "deviations.csv");
      bool header = true;
      for (const auto& t : tasks)
        for (const auto& r : t.runs)
          if (r.deviation) {
            write_deviation_csv(*r.deviation,
                                r.borough + "/" + r.window + "/" + r.profile + "/" + r.method,
                                dev, header);
            header = false;
          }
      m.output(args.out / "deviations.csv");
    }
    m.output(args.out / "aggregate.csv");
    m.write(args.out);
    return kExitOk;
  });
}

}  // namespace regime_design::cli
