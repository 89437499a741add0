#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rblo/bilevel.hpp"
#include "rblo/clustering.hpp"
#include "rblo/mvhsc.hpp"

namespace rblo::experiment {

/// Everything a command needs. Serialized as a flat JSON object whose keys
/// mirror the command-line flags; that object is echoed into every artifact.
struct ExperimentConfig {
  SolverConfig solver;
  std::optional<int> outer_iters;  // command default when absent (run 200, bench/sweep 100)
  std::string data_dir;            // 3sources directory
  std::string synth;               // synthetic spec, used when data_dir is empty
  int knn = 10;
  double lambda = 1.0;             // MVHSC coupling weight
  int clusters = 0;                // 0: number of ground-truth classes
  std::string coupling = "independent";
  std::string init = "random";     // random | spectral
  bool raw_counts = false;
  bool macro_f1 = false;           // also report matched macro-F1
  bool normalize_rows = true;
  int kmeans_restarts = 10;
  int kmeans_max_iters = 300;
  int runs = 100;
  std::string out_dir = "out";
  std::vector<int> k1_list{10, 20};
  std::vector<int> k2_list{10, 20};
  bool corrupt_gradient = false;   // check-suite negative control

  /// Throws ConfigError naming the offending key.
  void validate() const;
  nlohmann::json to_json() const;
  /// Unknown keys are rejected with ConfigError.
  static ExperimentConfig from_json(const nlohmann::json& doc);
};

/// Problems and evaluation data shared by every run of one configuration.
struct Workload {
  std::vector<BilevelProblem> problems;
  ManifoldMode mode = ManifoldMode::riemannian;
  Eigen::Index n_x = 0, n_y = 0;
  int k = 0;
  std::optional<clustering::LabelVector> labels;
  int clusters = 0;
  std::optional<mvhsc::MvhscInstance> instance;
};

/// Loads or generates the workload for the variant's manifold mode.
Workload prepare(const ExperimentConfig& config, ManifoldMode mode);

struct RunOutcome {
  bool ok = false;
  std::string error;
  RunTrace trace;
  Mat x;
  std::optional<double> ul_dval;
  nlohmann::json metrics;  // acc, nmi, ari, f1 (null without labels)
  double wall_time_ms = 0.0;
};

/// Initial points for a seed: Haar-random frames, or spectral embeddings when
/// config.init == "spectral" and an MVHSC instance is available.
std::pair<Mat, std::vector<Mat>> initial_points(const ExperimentConfig& config, const Workload& workload,
                                                std::uint64_t seed);

/// One solve plus k-means evaluation of the final consensus.
RunOutcome execute(const ExperimentConfig& config, const Workload& workload, Variant variant, std::uint64_t seed,
                   int outer_iters);

/// Clustering metrics of an embedding (rows of an orthonormalized x).
nlohmann::json evaluate(const ExperimentConfig& config, const Workload& workload, const Mat& x,
                        std::uint64_t seed);

/// Number of concurrent runs: RBLO_THREADS when set, else the OpenMP maximum.
int run_concurrency();

// Commands. Exit codes: 0 success, 1 run or check failure (artifacts still written).
int cmd_run(const ExperimentConfig& config, std::ostream& out);
int cmd_bench(const ExperimentConfig& config, std::ostream& out);
int cmd_sweep(const ExperimentConfig& config, std::ostream& out);
int cmd_check(const ExperimentConfig& config, std::ostream& out);

/// Table 1 layout: rows Time, UL Dval, ACC, NMI, ARI, F1; columns BDA, BDAG, B3DA, FBDA.
inline constexpr const char* kTableRows[] = {"Time", "UL Dval", "ACC", "NMI", "ARI", "F1"};
inline constexpr Variant kVariants[] = {Variant::BDA, Variant::BDAG, Variant::B3DA, Variant::FBDA};

}  // namespace rblo::experiment
