#include "rblo/kernels.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <omp.h>

#include "rblo/errors.hpp"

namespace rblo::kernels {

namespace {

std::vector<Eigen::Index> knn_row(const Eigen::MatrixXd& rows, Eigen::Index i, int knn) {
  const Eigen::Index n = rows.rows();
  std::vector<double> sim(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) sim[j] = rows.row(i).dot(rows.row(j));
  std::vector<Eigen::Index> order;
  order.reserve(static_cast<std::size_t>(n - 1));
  for (Eigen::Index j = 0; j < n; ++j)
    if (j != i) order.push_back(j);
  auto better = [&](Eigen::Index a, Eigen::Index b) {
    return sim[a] > sim[b] || (sim[a] == sim[b] && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + knn, order.end(), better);
  order.resize(static_cast<std::size_t>(knn));
  return order;
}

void assign_point(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, Eigen::Index i,
                  Assignment& out) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = (points.row(i) - centroids.row(c)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  out.label[i] = best;
  out.sq_dist(i) = best_d;
}

}  // namespace

std::vector<std::vector<Eigen::Index>> knn_cosine(const Eigen::MatrixXd& rows, int knn, Exec exec) {
  const Eigen::Index n = rows.rows();
  if (knn < 1 || knn > n - 1)
    throw DomainError("knn_cosine: knn must lie in [1, n-1], got " + std::to_string(knn));
  std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(n));
  if (exec == Exec::serial) {
    for (Eigen::Index i = 0; i < n; ++i) out[i] = knn_row(rows, i, knn);
  } else {
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) out[i] = knn_row(rows, i, knn);
  }
  return out;
}

Assignment nearest_centroid(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, Exec exec) {
  if (points.cols() != centroids.cols())
    throw DimensionError("nearest_centroid: point and centroid widths differ");
  const Eigen::Index n = points.rows();
  Assignment out{std::vector<int>(static_cast<std::size_t>(n)), Eigen::VectorXd(n)};
  if (exec == Exec::serial) {
    for (Eigen::Index i = 0; i < n; ++i) assign_point(points, centroids, i, out);
  } else {
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) assign_point(points, centroids, i, out);
  }
  return out;
}

Eigen::MatrixXd row_normalize(const Eigen::MatrixXd& m, Exec exec) {
  Eigen::MatrixXd out = m;
  auto normalize = [&](Eigen::Index i) {
    const double norm = out.row(i).norm();
    if (norm > 0.0) out.row(i) /= norm;
  };
  if (exec == Exec::serial) {
    for (Eigen::Index i = 0; i < out.rows(); ++i) normalize(i);
  } else {
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < out.rows(); ++i) normalize(i);
  }
  return out;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace rblo::kernels
