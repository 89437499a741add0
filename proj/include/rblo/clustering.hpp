#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "rblo/rng.hpp"

namespace rblo::clustering {

/// Class ids in [0, c).
struct LabelVector {
  std::vector<int> labels;
  int c = 0;

  LabelVector() = default;
  /// Validates every id against c; throws DomainError otherwise.
  LabelVector(std::vector<int> labels, int c);
  std::size_t size() const { return labels.size(); }
};

struct KMeansOptions {
  int restarts = 10;
  int max_iters = 300;
  bool normalize_rows = true;
};

struct KMeansResult {
  LabelVector labels;
  double inertia = 0.0;
  int best_restart = 0;
};

/// Best-inertia Lloyd clustering over k-means++ restarts. Restart r draws from
/// Rng(Rng::derive(seed, r)); ties in inertia go to the lowest restart index,
/// ties in assignment to the lowest centroid index. An emptied cluster is
/// re-seeded at the point farthest from its current centroid (lowest index on ties).
KMeansResult kmeans(const Eigen::MatrixXd& points, int c, std::uint64_t seed, const KMeansOptions& options = {});

/// Fraction of agreeing labels under the best class matching (Hungarian).
double accuracy(const LabelVector& pred, const LabelVector& truth);
/// Mutual information over the arithmetic mean of entropies (natural log).
/// 1 for identical partitions; 0 when either entropy vanishes and the partitions differ.
double nmi(const LabelVector& pred, const LabelVector& truth);
double ari(const LabelVector& pred, const LabelVector& truth);
/// F1 over co-clustered pairs.
double pairwise_f1(const LabelVector& pred, const LabelVector& truth);
/// Macro-averaged F1 over truth classes under the F1-maximizing class matching.
double matched_macro_f1(const LabelVector& pred, const LabelVector& truth);

/// Minimum-cost perfect assignment on a square matrix; result[row] = column.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

}  // namespace rblo::clustering
