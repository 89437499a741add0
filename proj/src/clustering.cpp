#include "rblo/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rblo/errors.hpp"
#include "rblo/kernels.hpp"

namespace rblo::clustering {

LabelVector::LabelVector(std::vector<int> l, int classes) : labels(std::move(l)), c(classes) {
  if (c < 1) throw DomainError("LabelVector: need at least one class");
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] < 0 || labels[i] >= c)
      throw DomainError("LabelVector: label " + std::to_string(labels[i]) + " at " + std::to_string(i) +
                        " outside [0, " + std::to_string(c) + ")");
}

/* ---------------------------------------------------------------------- */
namespace {

using Eigen::MatrixXd;

struct Lloyd {
  std::vector<int> labels;
  double inertia = 0.0;
};

MatrixXd plus_plus_init(const MatrixXd& pts, int c, Rng& rng) {
  const Eigen::Index n = pts.rows();
  MatrixXd centers(c, pts.cols());
  centers.row(0) = pts.row(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd d2 = (pts.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int j = 1; j < c; ++j) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc > target && d2(i) > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    }
    centers.row(j) = pts.row(pick);
    d2 = d2.cwiseMin((pts.rowwise() - centers.row(j)).rowwise().squaredNorm());
  }
  return centers;
}

Lloyd lloyd(const MatrixXd& pts, int c, Rng& rng, int max_iters) {
  MatrixXd centers = plus_plus_init(pts, c, rng);
  std::vector<int> labels;
  kernels::Assignment a;
  for (int it = 0; it < max_iters; ++it) {
    a = kernels::nearest_centroid(pts, centers, kernels::Exec::serial);
    const bool stable = it > 0 && a.label == labels;
    labels = a.label;
    if (stable) break;

    MatrixXd sums = MatrixXd::Zero(c, pts.cols());
    std::vector<int> counts(static_cast<std::size_t>(c), 0);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      sums.row(labels[i]) += pts.row(i);
      ++counts[labels[i]];
    }
    for (int j = 0; j < c; ++j) {
      if (counts[j] > 0) {
        centers.row(j) = sums.row(j) / counts[j];
      } else {
        // Empty cluster: move it to the point farthest from its own centroid.
        Eigen::Index far = 0;
        a.sq_dist.maxCoeff(&far);
        centers.row(j) = pts.row(far);
        a.sq_dist(far) = 0.0;
      }
    }
  }
  a = kernels::nearest_centroid(pts, centers, kernels::Exec::serial);
  return {a.label, a.sq_dist.sum()};
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int c, std::uint64_t seed, const KMeansOptions& options) {
  const Eigen::Index n = points.rows();
  if (c < 1 || c > n) throw DomainError("kmeans: need 1 <= c <= n, got c=" + std::to_string(c));
  if (options.restarts < 1 || options.max_iters < 1) throw DomainError("kmeans: restarts and max_iters must be >= 1");
  const MatrixXd pts = options.normalize_rows ? kernels::row_normalize(points) : points;

  std::vector<Lloyd> runs(static_cast<std::size_t>(options.restarts));
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < options.restarts; ++r) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(r)));
    runs[r] = lloyd(pts, c, rng, options.max_iters);
  }
  int best = 0;
  for (int r = 1; r < options.restarts; ++r)
    if (runs[r].inertia < runs[best].inertia) best = r;
  return {LabelVector(runs[best].labels, c), runs[best].inertia, best};
}

/* ---------------------------------------------------------------------- */
std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw DimensionError("hungarian: cost matrix must be square");
  // Potentials formulation, 1-indexed with a sentinel column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) assignment[p[j] - 1] = j - 1;
  return assignment;
}

/* ---------------------------------------------------------------------- */
namespace {

struct Table {
  Eigen::MatrixXd counts;  // pred class × truth class
  Eigen::VectorXd pred_sizes;
  Eigen::VectorXd truth_sizes;
  double n = 0.0;
};

Table contingency(const LabelVector& pred, const LabelVector& truth) {
  if (pred.size() != truth.size())
    throw DimensionError("metrics: label vectors differ in length (" + std::to_string(pred.size()) + " vs " +
                         std::to_string(truth.size()) + ")");
  Table t;
  t.counts = Eigen::MatrixXd::Zero(pred.c, truth.c);
  for (std::size_t i = 0; i < pred.size(); ++i) t.counts(pred.labels[i], truth.labels[i]) += 1.0;
  t.pred_sizes = t.counts.rowwise().sum();
  t.truth_sizes = t.counts.colwise().sum().transpose();
  t.n = static_cast<double>(pred.size());
  return t;
}

double pairs(double m) { return 0.5 * m * (m - 1.0); }

/// Same partition up to relabeling: each nonempty row and column of the table has one nonzero cell.
bool same_partition(const Table& t) {
  for (Eigen::Index i = 0; i < t.counts.rows(); ++i)
    if ((t.counts.row(i).array() > 0.0).count() > 1) return false;
  for (Eigen::Index j = 0; j < t.counts.cols(); ++j)
    if ((t.counts.col(j).array() > 0.0).count() > 1) return false;
  return true;
}

double entropy(const Eigen::VectorXd& sizes, double n) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < sizes.size(); ++i)
    if (sizes(i) > 0.0) h -= (sizes(i) / n) * std::log(sizes(i) / n);
  return h;
}

std::vector<int> best_matching(const Table& t) {
  const Eigen::Index m = std::max(t.counts.rows(), t.counts.cols());
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(m, m);
  cost.topLeftCorner(t.counts.rows(), t.counts.cols()) = -t.counts;
  return hungarian(cost);
}

}  // namespace

double accuracy(const LabelVector& pred, const LabelVector& truth) {
  const Table t = contingency(pred, truth);
  if (t.n == 0.0) return 1.0;
  const auto match = best_matching(t);
  double agree = 0.0;
  for (Eigen::Index i = 0; i < t.counts.rows(); ++i)
    if (match[i] < t.counts.cols()) agree += t.counts(i, match[i]);
  return agree / t.n;
}

double nmi(const LabelVector& pred, const LabelVector& truth) {
  const Table t = contingency(pred, truth);
  if (t.n == 0.0) return 1.0;
  const double hp = entropy(t.pred_sizes, t.n);
  const double ht = entropy(t.truth_sizes, t.n);
  if (hp == 0.0 || ht == 0.0) return same_partition(t) ? 1.0 : 0.0;
  double mi = 0.0;
  for (Eigen::Index i = 0; i < t.counts.rows(); ++i)
    for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
      const double nij = t.counts(i, j);
      if (nij > 0.0) mi += (nij / t.n) * std::log(t.n * nij / (t.pred_sizes(i) * t.truth_sizes(j)));
    }
  return std::clamp(mi / (0.5 * (hp + ht)), 0.0, 1.0);
}

double ari(const LabelVector& pred, const LabelVector& truth) {
  const Table t = contingency(pred, truth);
  double index = 0.0;
  for (Eigen::Index i = 0; i < t.counts.size(); ++i) index += pairs(t.counts.data()[i]);
  double sum_pred = 0.0, sum_truth = 0.0;
  for (Eigen::Index i = 0; i < t.pred_sizes.size(); ++i) sum_pred += pairs(t.pred_sizes(i));
  for (Eigen::Index j = 0; j < t.truth_sizes.size(); ++j) sum_truth += pairs(t.truth_sizes(j));
  const double total = pairs(t.n);
  if (total == 0.0) return 1.0;
  const double expected = sum_pred * sum_truth / total;
  const double max_index = 0.5 * (sum_pred + sum_truth);
  if (max_index == expected) return same_partition(t) ? 1.0 : 0.0;
  return (index - expected) / (max_index - expected);
}

double pairwise_f1(const LabelVector& pred, const LabelVector& truth) {
  const Table t = contingency(pred, truth);
  double together = 0.0, pred_pairs = 0.0, truth_pairs = 0.0;
  for (Eigen::Index i = 0; i < t.counts.size(); ++i) together += pairs(t.counts.data()[i]);
  for (Eigen::Index i = 0; i < t.pred_sizes.size(); ++i) pred_pairs += pairs(t.pred_sizes(i));
  for (Eigen::Index j = 0; j < t.truth_sizes.size(); ++j) truth_pairs += pairs(t.truth_sizes(j));
  if (pred_pairs == 0.0 && truth_pairs == 0.0) return 1.0;
  if (pred_pairs == 0.0 || truth_pairs == 0.0 || together == 0.0) return 0.0;
  const double precision = together / pred_pairs;
  const double recall = together / truth_pairs;
  return 2.0 * precision * recall / (precision + recall);
}

double matched_macro_f1(const LabelVector& pred, const LabelVector& truth) {
  const Table t = contingency(pred, truth);
  // Classes are matched to maximize the summed per-class F1.
  const Eigen::Index m = std::max(t.counts.rows(), t.counts.cols());
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < t.counts.rows(); ++i)
    for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
      const double denom = t.pred_sizes(i) + t.truth_sizes(j);
      if (denom > 0.0) cost(i, j) = -2.0 * t.counts(i, j) / denom;
    }
  const auto match = hungarian(cost);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) sum -= cost(i, match[i]);
  int classes = 0;
  for (Eigen::Index j = 0; j < t.counts.cols(); ++j) classes += t.truth_sizes(j) > 0.0;
  return classes == 0 ? 1.0 : sum / classes;
}

}  // namespace rblo::clustering
