#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "rblo/bilevel.hpp"
#include "rblo/clustering.hpp"
#include "rblo/mvhsc.hpp"

namespace rblo::dataio {

struct View {
  std::string name;
  Mat features;  // n × d_v
};

struct MultiViewDataset {
  std::vector<View> views;
  clustering::LabelVector labels;
  std::vector<std::string> class_names;
  std::vector<long> doc_ids;  // ascending, shared by every view
  /// (view, document row) pairs whose term set was empty; their feature rows are zero.
  std::vector<std::pair<std::string, Eigen::Index>> empty_documents;

  Eigen::Index n() const { return static_cast<Eigen::Index>(doc_ids.size()); }
};

struct LoadOptions {
  bool raw_counts = false;  // skip TF-IDF, keep counts (rows are still L2-normalized)
  std::vector<std::string> sources{"bbc", "guardian", "reuters"};
};

/// Reads <dir>/3sources_<source>.{mtx,terms,docs} and <dir>/3sources.disjoint.clist.
MultiViewDataset load_3sources(const std::filesystem::path& dir, const LoadOptions& options = {});

/// Sparse coordinate entries of a MatrixMarket "coordinate real general" file.
struct Triplets {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<Eigen::Triplet<double>> entries;  // 0-indexed
};
Triplets read_matrix_market(const std::filesystem::path& path);

/// Term-count rows → TF-IDF with idf = ln((1 + N)/(1 + df)) + 1, rows L2-normalized.
Mat tfidf(const Mat& counts);

/* ---------------------------------------------------------------------- */

enum class SynthMode { euclidean_quadratic, grassmann_trace };

struct SynthSpec {
  SynthMode mode = SynthMode::euclidean_quadratic;
  int n_x = 4;
  int n_y = 6;
  int k = 2;
  double cond = 10.0;  // condition number of Q
  double noise = 0.0;  // b = A x_b + noise·N(0, I); zero keeps b in range(A)
  bool identity_a = false;
  bool zero_b = false;
  int views = 3;  // grassmann_trace: consensus + (views − 1) auxiliaries
  double lambda = 1.0;
  std::uint64_t seed = 1;
  ManifoldMode manifold = ManifoldMode::euclidean;

  /// "mode:key=value,key=value" e.g. "euclidean_quadratic:nx=4,ny=6,k=2,cond=10,seed=3".
  static SynthSpec parse(const std::string& text);
  std::string to_string() const;
};

/// A generated problem with its closed-form oracle where one exists.
struct SynthProblem {
  BilevelProblem problem;
  SynthSpec spec;
  // euclidean_quadratic
  Mat a, b, q;
  std::function<Mat(const Mat&)> ll_solution;   // S(x) = {A x}
  std::function<double(const Mat&)> phi;        // φ(x) = F(x, A x)
  std::optional<Mat> x_star, y_star;
  double ll_min = 0.0;                           // min_y f(x, y) for every x
  // grassmann_trace
  std::optional<mvhsc::MvhscInstance> instance;
  std::optional<clustering::LabelVector> labels;
};

SynthProblem synth_bilevel(const SynthSpec& spec);

}  // namespace rblo::dataio
