#include "rblo/experiment.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "rblo/dataio.hpp"
#include "rblo/fdcheck.hpp"
#include "rblo/rng.hpp"
#include "rblo/trace_io.hpp"

namespace rblo::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSummarySchema = "rblo.run_summary/1";
constexpr const char* kBenchSchema = "rblo.bench_summary/1";

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

json real_or_null(std::optional<double> v) {
  return v && std::isfinite(*v) ? json(*v) : json(nullptr);
}

}  // namespace

/* ---------------------------------------------------------------------- */

void ExperimentConfig::validate() const {
  solver.validate();
  if (outer_iters && *outer_iters < 0) throw ConfigError("outer_iters must be >= 0");
  if (knn < 1) throw ConfigError("knn must be >= 1");
  if (!(lambda > 0.0)) throw ConfigError("lambda must be > 0");
  if (clusters < 0) throw ConfigError("clusters must be >= 0");
  if (coupling != "independent" && coupling != "joint") throw ConfigError("coupling must be independent or joint");
  if (init != "random" && init != "spectral") throw ConfigError("init must be random or spectral");
  if (kmeans_restarts < 1) throw ConfigError("kmeans_restarts must be >= 1");
  if (kmeans_max_iters < 1) throw ConfigError("kmeans_max_iters must be >= 1");
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (out_dir.empty()) throw ConfigError("out must not be empty");
  if (k1_list.empty() || k2_list.empty()) throw ConfigError("k1_list and k2_list must not be empty");
  for (int v : k1_list)
    if (v < 0) throw ConfigError("k1_list entries must be >= 0");
  for (int v : k2_list)
    if (v < 1) throw ConfigError("k2_list entries must be >= 1");
  if (data_dir.empty() && synth.empty()) throw ConfigError("either data or synth must be given");
  if (!synth.empty()) (void)dataio::SynthSpec::parse(synth);
}

json ExperimentConfig::to_json() const {
  json j;
  j["variant"] = lower(rblo::to_string(solver.variant));
  j["mu"] = solver.mu;
  j["k1"] = solver.k1;
  j["k2"] = solver.k2;
  j["s_u"] = solver.s_u;
  j["s_l"] = solver.s_l;
  j["lambda_outer"] = solver.lambda_outer;
  j["outer"] = outer_iters ? json(*outer_iters) : json(nullptr);
  j["beta_floor"] = solver.beta_floor;
  j["bb_s_min"] = solver.bb_clamp.s_min;
  j["bb_s_max"] = solver.bb_clamp.s_max;
  j["hypergrad_mode"] = rblo::to_string(solver.hypergrad_mode);
  j["retraction_adjoint"] = rblo::to_string(solver.retraction_adjoint);
  j["tol_outer"] = solver.tol_outer;
  j["bb_inverse"] = solver.bb_inverse;
  j["warm_start"] = solver.warm_start;
  j["seed"] = solver.seed;
  j["data"] = data_dir;
  j["synth"] = synth;
  j["knn"] = knn;
  j["lambda"] = lambda;
  j["clusters"] = clusters;
  j["coupling"] = coupling;
  j["init"] = init;
  j["raw_counts"] = raw_counts;
  j["macro_f1"] = macro_f1;
  j["normalize_rows"] = normalize_rows;
  j["kmeans_restarts"] = kmeans_restarts;
  j["kmeans_max_iters"] = kmeans_max_iters;
  j["runs"] = runs;
  j["out"] = out_dir;
  j["k1_list"] = k1_list;
  j["k2_list"] = k2_list;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  for (const auto& [key, v] : doc.items()) {
    try {
      if (key == "variant") c.solver.variant = parse_variant(v.get<std::string>());
      else if (key == "mu") c.solver.mu = v.get<double>();
      else if (key == "k1") c.solver.k1 = v.get<int>();
      else if (key == "k2") c.solver.k2 = v.get<int>();
      else if (key == "s_u") c.solver.s_u = v.get<double>();
      else if (key == "s_l") c.solver.s_l = v.get<double>();
      else if (key == "lambda_outer") c.solver.lambda_outer = v.get<double>();
      else if (key == "outer") c.outer_iters = v.is_null() ? std::nullopt : std::optional<int>(v.get<int>());
      else if (key == "beta_floor") c.solver.beta_floor = v.get<double>();
      else if (key == "bb_s_min") c.solver.bb_clamp.s_min = v.get<double>();
      else if (key == "bb_s_max") c.solver.bb_clamp.s_max = v.get<double>();
      else if (key == "hypergrad_mode") c.solver.hypergrad_mode = parse_hypergrad_mode(v.get<std::string>());
      else if (key == "retraction_adjoint")
        c.solver.retraction_adjoint = parse_retraction_adjoint(v.get<std::string>());
      else if (key == "tol_outer") c.solver.tol_outer = v.get<double>();
      else if (key == "bb_inverse") c.solver.bb_inverse = v.get<bool>();
      else if (key == "warm_start") c.solver.warm_start = v.get<bool>();
      else if (key == "seed") c.solver.seed = v.get<std::uint64_t>();
      else if (key == "data") c.data_dir = v.get<std::string>();
      else if (key == "synth") c.synth = v.get<std::string>();
      else if (key == "knn") c.knn = v.get<int>();
      else if (key == "lambda") c.lambda = v.get<double>();
      else if (key == "clusters") c.clusters = v.get<int>();
      else if (key == "coupling") c.coupling = v.get<std::string>();
      else if (key == "init") c.init = v.get<std::string>();
      else if (key == "raw_counts") c.raw_counts = v.get<bool>();
      else if (key == "macro_f1") c.macro_f1 = v.get<bool>();
      else if (key == "normalize_rows") c.normalize_rows = v.get<bool>();
      else if (key == "kmeans_restarts") c.kmeans_restarts = v.get<int>();
      else if (key == "kmeans_max_iters") c.kmeans_max_iters = v.get<int>();
      else if (key == "runs") c.runs = v.get<int>();
      else if (key == "out") c.out_dir = v.get<std::string>();
      else if (key == "k1_list") c.k1_list = v.get<std::vector<int>>();
      else if (key == "k2_list") c.k2_list = v.get<std::vector<int>>();
      else throw ConfigError("unknown config key '" + key + "'");
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  return c;
}

/* ---------------------------------------------------------------------- */

Workload prepare(const ExperimentConfig& config, ManifoldMode mode) {
  Workload w;
  w.mode = mode;
  if (!config.data_dir.empty()) {
    dataio::LoadOptions load;
    load.raw_counts = config.raw_counts;
    const auto data = dataio::load_3sources(config.data_dir, load);
    mvhsc::MvhscInstance inst;
    for (const auto& view : data.views) {
      inst.thetas.push_back(mvhsc::build_theta(view.features, config.knn));
      inst.view_names.push_back(view.name);
    }
    inst.lambda = config.lambda;
    inst.knn = config.knn;
    inst.k = config.clusters > 0 ? config.clusters : data.labels.c;
    inst.coupling = config.coupling == "joint" ? mvhsc::Coupling::joint : mvhsc::Coupling::independent;
    inst.validate();
    w.problems = mvhsc::make_problems(inst, mode);
    w.n_x = w.n_y = inst.n();
    w.k = inst.k;
    w.labels = data.labels;
    w.clusters = data.labels.c;
    w.instance = std::move(inst);
    return w;
  }
  auto spec = dataio::SynthSpec::parse(config.synth);
  spec.manifold = mode;
  auto synth = dataio::synth_bilevel(spec);
  if (synth.instance) {
    auto& inst = *synth.instance;
    inst.coupling = config.coupling == "joint" ? mvhsc::Coupling::joint : mvhsc::Coupling::independent;
    w.problems = mvhsc::make_problems(inst, mode);
    w.n_x = w.n_y = inst.n();
    w.k = inst.k;
    w.labels = synth.labels;
    w.clusters = synth.labels->c;
    w.instance = std::move(inst);
  } else {
    w.problems.push_back(std::move(synth.problem));
    w.n_x = spec.n_x;
    w.n_y = spec.n_y;
    w.k = spec.k;
  }
  return w;
}

std::pair<Mat, std::vector<Mat>> initial_points(const ExperimentConfig& config, const Workload& workload,
                                                std::uint64_t seed) {
  std::vector<Mat> y0;
  if (config.init == "spectral" && workload.instance) {
    const auto& inst = *workload.instance;
    Mat x0 = mvhsc::spectral_embedding(inst.thetas[inst.consensus].theta, workload.k);
    for (const auto& view : mvhsc::coupled_views(inst)) y0.push_back(mvhsc::spectral_embedding(*view.theta, workload.k));
    return {std::move(x0), std::move(y0)};
  }
  Rng rx(Rng::derive(seed, 0));
  Mat x0 = random_point(workload.n_x, workload.k, rx).data();
  for (std::size_t v = 0; v < workload.problems.size(); ++v) {
    Rng ry(Rng::derive(seed, v + 1));
    y0.push_back(random_point(workload.n_y, workload.k, ry).data());
  }
  return {std::move(x0), std::move(y0)};
}

json evaluate(const ExperimentConfig& config, const Workload& workload, const Mat& x, std::uint64_t seed) {
  json m = {{"acc", nullptr}, {"nmi", nullptr}, {"ari", nullptr}, {"f1", nullptr}};
  if (config.macro_f1) m["macro_f1"] = nullptr;
  if (!workload.labels || !x.allFinite()) return m;
  const int c = config.clusters > 0 ? config.clusters : workload.clusters;
  clustering::KMeansOptions opts;
  opts.restarts = config.kmeans_restarts;
  opts.max_iters = config.kmeans_max_iters;
  opts.normalize_rows = config.normalize_rows;
  // The embedding is the column space of x; orthonormalize iterates of the Euclidean variants.
  Mat frame;
  try {
    frame = frame::thin_qr(x).q;
  } catch (const DegenerateRetractionError&) {
    return m;
  }
  const auto pred = clustering::kmeans(frame, c, Rng::derive(seed, 0x6b6d65616e73ULL), opts).labels;
  const auto& truth = *workload.labels;
  m["acc"] = clustering::accuracy(pred, truth);
  m["nmi"] = clustering::nmi(pred, truth);
  m["ari"] = clustering::ari(pred, truth);
  m["f1"] = clustering::pairwise_f1(pred, truth);
  if (config.macro_f1) m["macro_f1"] = clustering::matched_macro_f1(pred, truth);
  return m;
}

RunOutcome execute(const ExperimentConfig& config, const Workload& workload, Variant variant, std::uint64_t seed,
                   int outer_iters) {
  SolverConfig sc = config.solver;
  sc.variant = variant;
  sc.seed = seed;
  sc.outer_iters = outer_iters;
  RunOutcome out;
  const auto [x0, y0] = initial_points(config, workload, seed);
  const auto start = std::chrono::steady_clock::now();
  try {
    auto result = solve(workload.problems, sc, x0, y0);
    out.ok = true;
    out.trace = std::move(result.trace);
    out.x = std::move(result.x);
  } catch (const SolveAborted& e) {
    out.error = e.what();
    out.trace = e.partial_trace();
  } catch (const Error& e) {
    out.error = e.what();
  }
  out.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (out.ok) {
    if (!out.trace.outer.empty()) out.ul_dval = out.trace.outer.back().ul_dval;
    else if (outer_iters == 0) {
      double bound = 0.0, value = 0.0;
      bool bounded = true;
      for (std::size_t v = 0; v < workload.problems.size(); ++v) {
        const auto& p = workload.problems[v];
        if (!p.ul_bound) bounded = false;
        else bound += *p.ul_bound;
        value += p.ul_value(x0, y0[v]);
      }
      if (bounded) out.ul_dval = bound - value;
    }
    out.metrics = evaluate(config, workload, out.ok ? out.x : x0, seed);
  } else {
    out.metrics = evaluate(config, workload, Mat(), seed);
  }
  return out;
}

int run_concurrency() {
  int threads = omp_get_max_threads();
  if (const char* env = std::getenv("RBLO_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) threads = std::min(threads, cap);
  }
  return std::max(1, threads);
}

/* ---------------------------------------------------------------------- */
namespace {

json summary_json(const ExperimentConfig& config, Variant variant, std::uint64_t seed, int outer_iters,
                  const RunOutcome& r) {
  json cfg = config.to_json();
  cfg["variant"] = lower(rblo::to_string(variant));
  cfg["seed"] = seed;
  cfg["outer"] = outer_iters;
  json fin = {{"ul_value", nullptr}, {"ul_dval", real_or_null(r.ul_dval)}, {"ll_value", nullptr},
              {"ll_residual", nullptr}, {"hypergrad_norm", nullptr}};
  if (!r.trace.outer.empty()) {
    const auto& last = r.trace.outer.back();
    fin["ul_value"] = last.ul_value;
    fin["ll_value"] = last.ll_final_value;
    fin["ll_residual"] = last.ll_residual;
    fin["hypergrad_norm"] = last.hypergrad_norm;
  }
  json s;
  s["schema"] = kSummarySchema;
  s["variant"] = lower(rblo::to_string(variant));
  s["seed"] = seed;
  s["config"] = cfg;
  s["outer_iterations"] = r.trace.outer.size();
  s["final"] = fin;
  s["metrics"] = r.metrics;
  s["wall_time_ms"] = r.wall_time_ms;
  s["status"] = r.ok ? "ok" : "failed";
  if (!r.ok) s["error"] = r.error;
  return s;
}

void write_trace(const RunTrace& trace, const fs::path& dir, const std::string& prefix) {
  trace_io::write_inner_csv(trace, dir / (prefix + "trace.csv"));
  trace_io::write_outer_csv(trace, dir / (prefix + "outer.csv"));
}

std::optional<double> metric(const json& m, const char* key) {
  if (!m.contains(key) || m.at(key).is_null()) return std::nullopt;
  return m.at(key).get<double>();
}

struct Stats {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std = std::numeric_limits<double>::quiet_NaN();
  double median = std::numeric_limits<double>::quiet_NaN();
  std::size_t count = 0;
};

Stats stats(std::vector<double> v) {
  Stats s;
  s.count = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  double sq = 0.0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  // Sample standard deviation; zero for a single run.
  s.std = v.size() > 1 ? std::sqrt(sq / static_cast<double>(v.size() - 1)) : 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  s.median = v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
  return s;
}

std::string cell(const Stats& s) {
  if (s.count == 0) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g ± %.2g", s.mean, s.std);
  return buf;
}

json stats_json(const Stats& s) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"mean", num(s.mean)}, {"std", num(s.std)}, {"median", num(s.median)}, {"count", s.count}};
}

std::string csv_real(std::optional<double> v) { return v && std::isfinite(*v) ? trace_io::format_real(*v) : ""; }

}  // namespace

/* ---------------------------------------------------------------------- */

int cmd_run(const ExperimentConfig& config, std::ostream& out) {
  config.validate();
  const int outer = config.outer_iters.value_or(200);
  const Variant variant = config.solver.variant;
  const auto workload = prepare(config, variant_mode(variant));
  const auto r = execute(config, workload, variant, config.solver.seed, outer);
  const fs::path dir(config.out_dir);
  fs::create_directories(dir);
  write_trace(r.trace, dir, "");
  trace_io::write_json(summary_json(config, variant, config.solver.seed, outer, r), dir / "summary.json");
  out << rblo::to_string(variant) << " seed " << config.solver.seed << ": " << (r.ok ? "ok" : "failed: " + r.error)
      << ", " << r.trace.outer.size() << " outer iterations, UL Dval "
      << (r.ul_dval ? trace_io::format_real(*r.ul_dval) : "n/a") << ", " << r.wall_time_ms << " ms\n";
  out << "artifacts written to " << dir.string() << "\n";
  return r.ok ? 0 : 1;
}

int cmd_bench(const ExperimentConfig& config, std::ostream& out) {
  config.validate();
  const int outer = config.outer_iters.value_or(100);
  const int runs = config.runs;
  std::vector<Workload> workloads;
  for (Variant v : kVariants) workloads.push_back(prepare(config, variant_mode(v)));

  const int jobs = runs * 4;
  std::vector<RunOutcome> results(static_cast<std::size_t>(jobs));
#pragma omp parallel for schedule(dynamic, 1) num_threads(run_concurrency())
  for (int j = 0; j < jobs; ++j) {
    const int run = j / 4, vi = j % 4;
    results[j] = execute(config, workloads[vi], kVariants[vi], config.solver.seed + static_cast<std::uint64_t>(run),
                         outer);
  }

  const fs::path dir(config.out_dir);
  fs::create_directories(dir / "traces");
  bool all_ok = true;
  {
    std::ofstream csv(dir / "bench_runs.csv");
    csv << "run,seed,variant,status,time_ms,ul_dval,acc,nmi,ari,f1\n";
    for (int j = 0; j < jobs; ++j) {
      const auto& r = results[j];
      all_ok = all_ok && r.ok;
      csv << j / 4 << ',' << config.solver.seed + static_cast<std::uint64_t>(j / 4) << ','
          << rblo::to_string(kVariants[j % 4]) << ',' << (r.ok ? "ok" : "failed") << ','
          << trace_io::format_real(r.wall_time_ms) << ',' << csv_real(r.ok ? r.ul_dval : std::nullopt);
      for (const char* key : {"acc", "nmi", "ari", "f1"}) csv << ',' << csv_real(metric(r.metrics, key));
      csv << '\n';
    }
  }
  for (int vi = 0; vi < 4; ++vi) {
    const std::string prefix = lower(rblo::to_string(kVariants[vi])) + "_";
    write_trace(results[vi].trace, dir / "traces", prefix);
  }

  // Table rows × variant columns over successful runs.
  std::vector<std::array<Stats, 6>> table(4);
  json per_variant = json::object();
  for (int vi = 0; vi < 4; ++vi) {
    std::array<std::vector<double>, 6> cols;
    int failures = 0;
    for (int run = 0; run < runs; ++run) {
      const auto& r = results[run * 4 + vi];
      if (!r.ok) {
        ++failures;
        continue;
      }
      cols[0].push_back(r.wall_time_ms / 1000.0);
      if (r.ul_dval) cols[1].push_back(*r.ul_dval);
      int c = 2;
      for (const char* key : {"acc", "nmi", "ari", "f1"}) {
        if (auto m = metric(r.metrics, key)) cols[c].push_back(*m);
        ++c;
      }
    }
    json row = json::object();
    for (int i = 0; i < 6; ++i) {
      table[vi][i] = stats(cols[i]);
      row[kTableRows[i]] = stats_json(table[vi][i]);
    }
    row["failures"] = failures;
    per_variant[rblo::to_string(kVariants[vi])] = row;
  }
  {
    std::ofstream csv(dir / "bench_table.csv");
    csv << "metric";
    for (Variant v : kVariants) csv << ',' << rblo::to_string(v) << "_mean," << rblo::to_string(v) << "_std";
    csv << '\n';
    for (int i = 0; i < 6; ++i) {
      csv << kTableRows[i];
      for (int vi = 0; vi < 4; ++vi) {
        auto num = [](double v) { return std::isfinite(v) ? trace_io::format_real(v) : std::string(); };
        csv << ',' << num(table[vi][i].mean) << ',' << num(table[vi][i].std);
      }
      csv << '\n';
    }
  }
  std::ostringstream txt;
  txt << std::left << std::setw(10) << "Metric";
  for (Variant v : kVariants) txt << std::setw(24) << rblo::to_string(v);
  txt << '\n';
  for (int i = 0; i < 6; ++i) {
    txt << std::setw(10) << kTableRows[i];
    // setw counts bytes; pad manually because "±" is two bytes.
    for (int vi = 0; vi < 4; ++vi) {
      std::string s = cell(table[vi][i]);
      const std::size_t glyphs = s.size() - (s.find("±") != std::string::npos ? 1 : 0);
      txt << s << std::string(glyphs < 24 ? 24 - glyphs : 1, ' ');
    }
    txt << '\n';
  }
  {
    std::ofstream f(dir / "bench_table.txt");
    f << txt.str();
  }
  json summary;
  summary["schema"] = kBenchSchema;
  json cfg = config.to_json();
  cfg["outer"] = outer;
  summary["config"] = cfg;
  summary["runs"] = runs;
  summary["seeds"] = {config.solver.seed, config.solver.seed + static_cast<std::uint64_t>(runs - 1)};
  summary["variants"] = per_variant;
  summary["status"] = all_ok ? "ok" : "partial";
  trace_io::write_json(summary, dir / "bench_summary.json");

  out << txt.str();
  if (!all_ok) out << "some runs failed; see bench_runs.csv\n";
  return all_ok ? 0 : 1;
}

int cmd_sweep(const ExperimentConfig& config, std::ostream& out) {
  config.validate();
  const int outer = config.outer_iters.value_or(100);
  const Variant variant = config.solver.variant;
  const auto workload = prepare(config, variant_mode(variant));
  std::vector<std::pair<int, int>> grid;
  for (int k1 : config.k1_list)
    for (int k2 : config.k2_list) grid.emplace_back(k1, k2);
  std::vector<RunOutcome> results(grid.size());
  const int cells = static_cast<int>(grid.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(run_concurrency())
  for (int i = 0; i < cells; ++i) {
    ExperimentConfig c = config;
    c.solver.k1 = grid[i].first;
    c.solver.k2 = grid[i].second;
    results[i] = execute(c, workload, variant, config.solver.seed, outer);
  }
  const fs::path dir(config.out_dir);
  fs::create_directories(dir);
  std::ofstream index(dir / "sweep_index.csv");
  index << "k1,k2,seed,status,final_ul_value,final_ul_dval,inner_csv,outer_csv\n";
  bool all_ok = true;
  for (int i = 0; i < cells; ++i) {
    const auto& r = results[i];
    all_ok = all_ok && r.ok;
    const std::string prefix = "k1_" + std::to_string(grid[i].first) + "_k2_" + std::to_string(grid[i].second) + "_";
    write_trace(r.trace, dir, prefix);
    std::optional<double> ul;
    if (!r.trace.outer.empty()) ul = r.trace.outer.back().ul_value;
    index << grid[i].first << ',' << grid[i].second << ',' << config.solver.seed << ',' << (r.ok ? "ok" : "failed")
          << ',' << csv_real(ul) << ',' << csv_real(r.ul_dval) << ',' << prefix << "trace.csv," << prefix
          << "outer.csv\n";
    out << "K1=" << grid[i].first << " K2=" << grid[i].second << ": " << (r.ok ? "ok" : "failed: " + r.error)
        << ", UL Dval " << (r.ul_dval ? trace_io::format_real(*r.ul_dval) : "n/a") << '\n';
  }
  return all_ok ? 0 : 1;
}

int cmd_check(const ExperimentConfig& config, std::ostream& out) {
  fdcheck::CheckOptions opts;
  opts.seed = config.solver.seed;
  opts.corrupt_gradient = config.corrupt_gradient;
  const auto rows = fdcheck::run_check_suite(opts);
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  out << std::left << std::setw(static_cast<int>(width + 2)) << "check" << std::setw(14) << "max_rel_err"
      << std::setw(12) << "tolerance" << "result\n";
  bool ok = true;
  for (const auto& r : rows) {
    ok = ok && r.pass;
    char err[32], tol[32];
    std::snprintf(err, sizeof err, "%.3e", r.max_rel_err);
    std::snprintf(tol, sizeof tol, "%.1e", r.tolerance);
    out << std::setw(static_cast<int>(width + 2)) << r.name << std::setw(14) << err << std::setw(12) << tol
        << (r.pass ? "PASS" : "FAIL") << '\n';
  }
  out << (ok ? "all checks passed\n" : "some checks FAILED\n");
  return ok ? 0 : 1;
}

}  // namespace rblo::experiment
