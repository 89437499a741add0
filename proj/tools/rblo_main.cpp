#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rblo/experiment.hpp"
#include "rblo/trace_io.hpp"

using rblo::experiment::ExperimentConfig;

namespace {

/// Flags that were given on the command line; applied on top of the config file.
struct Overrides {
  std::optional<std::string> variant, data, synth, out, coupling, init, hypergrad_mode, retraction_adjoint;
  std::optional<int> outer, k1, k2, runs, knn, clusters, kmeans_restarts;
  std::optional<double> mu, lambda, lambda_outer, s_u, s_l, tol_outer;
  std::optional<std::uint64_t> seed;
  std::vector<int> k1_list, k2_list;
  bool raw_counts = false, macro_f1 = false, no_normalize_rows = false, bb_inverse = false, cold_start = false;
  bool corrupt_gradient = false;
};

void add_flags(CLI::App& app, Overrides& o, std::string& config_path) {
  app.add_option("--config", config_path, "Flat JSON config file; flags override its keys");
  app.add_option("--variant", o.variant, "bda | bdag | b3da | fbda");
  auto* data = app.add_option("--data", o.data, "3sources data directory");
  auto* synth = app.add_option("--synth", o.synth, "Synthetic spec, e.g. grassmann_trace:n=30,k=3,seed=1");
  data->excludes(synth);
  app.add_option("--outer", o.outer, "Outer iterations");
  app.add_option("--k1", o.k1, "BB-phase length");
  app.add_option("--k2", o.k2, "Diminishing-phase length");
  app.add_option("--mu", o.mu, "Aggregation weight in (0,1)");
  app.add_option("--lambda", o.lambda, "MVHSC coupling weight");
  app.add_option("--lambda-outer", o.lambda_outer, "UL step size");
  app.add_option("--s-u", o.s_u, "UL base step size");
  app.add_option("--s-l", o.s_l, "LL base step size");
  app.add_option("--tol-outer", o.tol_outer, "Early-stop tolerance on UL value changes (0 disables)");
  app.add_option("--seed", o.seed, "Base seed");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--runs", o.runs, "Repetitions for bench");
  app.add_option("--knn", o.knn, "Hyperedge neighbourhood size");
  app.add_option("--clusters", o.clusters, "Embedding dimension and k-means clusters (0: number of classes)");
  app.add_option("--coupling", o.coupling, "independent | joint");
  app.add_option("--init", o.init, "random | spectral");
  app.add_option("--hypergrad-mode", o.hypergrad_mode, "reverse_sweep | truncated");
  app.add_option("--retraction-adjoint", o.retraction_adjoint, "exact | projection");
  app.add_option("--kmeans-restarts", o.kmeans_restarts, "k-means restarts");
  app.add_option("--k1-list", o.k1_list, "Sweep grid values of K1")->delimiter(',');
  app.add_option("--k2-list", o.k2_list, "Sweep grid values of K2")->delimiter(',');
  app.add_flag("--raw-counts", o.raw_counts, "Use raw term counts instead of TF-IDF");
  app.add_flag("--macro-f1", o.macro_f1, "Also report matched macro-F1");
  app.add_flag("--no-normalize-rows", o.no_normalize_rows, "Cluster embedding rows without L2 normalization");
  app.add_flag("--bb-inverse", o.bb_inverse, "Use the inverse BB quotient");
  app.add_flag("--cold-start", o.cold_start, "Restart every inner loop from y0");
  app.add_flag("--corrupt-gradient", o.corrupt_gradient)->group("");
}

ExperimentConfig build_config(const std::string& config_path, const Overrides& o) {
  nlohmann::json doc = nlohmann::json::object();
  if (!config_path.empty()) doc = rblo::trace_io::read_json(config_path);
  auto set = [&](const char* key, const auto& value) {
    if (value) doc[key] = *value;
  };
  set("variant", o.variant);
  set("data", o.data);
  set("synth", o.synth);
  set("out", o.out);
  set("coupling", o.coupling);
  set("init", o.init);
  set("hypergrad_mode", o.hypergrad_mode);
  set("retraction_adjoint", o.retraction_adjoint);
  set("outer", o.outer);
  set("k1", o.k1);
  set("k2", o.k2);
  set("runs", o.runs);
  set("knn", o.knn);
  set("clusters", o.clusters);
  set("kmeans_restarts", o.kmeans_restarts);
  set("mu", o.mu);
  set("lambda", o.lambda);
  set("lambda_outer", o.lambda_outer);
  set("s_u", o.s_u);
  set("s_l", o.s_l);
  set("tol_outer", o.tol_outer);
  set("seed", o.seed);
  if (o.data) doc.erase("synth");
  if (o.synth) doc.erase("data");
  if (!o.k1_list.empty()) doc["k1_list"] = o.k1_list;
  if (!o.k2_list.empty()) doc["k2_list"] = o.k2_list;
  if (o.raw_counts) doc["raw_counts"] = true;
  if (o.macro_f1) doc["macro_f1"] = true;
  if (o.no_normalize_rows) doc["normalize_rows"] = false;
  if (o.bb_inverse) doc["bb_inverse"] = true;
  if (o.cold_start) doc["warm_start"] = false;
  auto config = ExperimentConfig::from_json(doc);
  config.corrupt_gradient = o.corrupt_gradient;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riemannian bilevel optimization for multi-view hypergraph spectral clustering"};
  app.require_subcommand(1);
  std::string config_path;
  Overrides o;
  using Command = int (*)(const ExperimentConfig&, std::ostream&);
  Command command = nullptr;
  const std::pair<const char*, Command> commands[] = {
      {"run", rblo::experiment::cmd_run},
      {"bench", rblo::experiment::cmd_bench},
      {"sweep", rblo::experiment::cmd_sweep},
      {"check", rblo::experiment::cmd_check},
  };
  const char* help[] = {"One solve with trace, summary and clustering metrics",
                        "Repeated runs of all four variants and the summary table",
                        "Grid over (K1, K2) with shared seeds", "Finite-difference validation suite"};
  for (int i = 0; i < 4; ++i) {
    auto* sub = app.add_subcommand(commands[i].first, help[i]);
    add_flags(*sub, o, config_path);
    sub->callback([&command, c = commands[i].second] { command = c; });
  }
  CLI11_PARSE(app, argc, argv);
  try {
    const auto config = build_config(config_path, o);
    return command(config, std::cout);
  } catch (const rblo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const rblo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
