#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version and a serial
// reference with the same per-row arithmetic, so the two agree bit for bit;
// tests compare them and bench/ times them.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace rblo::kernels {

enum class Exec { serial, parallel };

/// Indices of the `knn` rows most cosine-similar to each row (self excluded),
/// sorted by decreasing similarity, ties broken by lower index. Rows are
/// expected to be L2-normalized so the dot product is the cosine.
std::vector<std::vector<Eigen::Index>> knn_cosine(const Eigen::MatrixXd& rows, int knn,
                                                  Exec exec = Exec::parallel);

struct Assignment {
  std::vector<int> label;
  Eigen::VectorXd sq_dist;  // squared distance to the chosen centroid
};

/// Nearest centroid (squared Euclidean) per point, ties to the lowest centroid index.
Assignment nearest_centroid(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,
                            Exec exec = Exec::parallel);

/// Rows scaled to unit L2 norm; all-zero rows are left at zero.
Eigen::MatrixXd row_normalize(const Eigen::MatrixXd& m, Exec exec = Exec::parallel);

/// Number of OpenMP threads available to parallel kernels.
int max_threads();

}  // namespace rblo::kernels
