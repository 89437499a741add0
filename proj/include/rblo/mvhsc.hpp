#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rblo/bilevel.hpp"

namespace rblo::mvhsc {

/// Normalized hypergraph operator Θ = D_v^{-1/2} H W D_e^{-1} Hᵀ D_v^{-1/2}.
/// Symmetric, PSD and of spectral norm at most one.
struct HypergraphOperator {
  Mat theta;
  Eigen::Index n() const { return theta.rows(); }
};

/// kNN hyperedges (vertex i plus its `knn` most cosine-similar rows), unit weights.
/// `features` must have unit-norm rows; a zero row is an isolated vertex.
HypergraphOperator build_theta(const Mat& features, int knn);

/// One auxiliary view coupled to the consensus variable.
struct CoupledView {
  std::shared_ptr<const Mat> theta;
  double lambda = 1.0;

  static CoupledView of(Mat theta, double lambda);
};

enum class Coupling { independent, joint };

struct MvhscInstance {
  std::vector<HypergraphOperator> thetas;
  std::vector<std::string> view_names;
  int consensus = 0;
  double lambda = 1.0;
  int k = 2;
  int knn = 10;
  Coupling coupling = Coupling::independent;

  Eigen::Index n() const { return thetas.empty() ? 0 : thetas.front().n(); }
  std::vector<int> auxiliary_views() const;
  /// Throws ConfigError when views disagree on n or k > n.
  void validate() const;
};

// Objectives on orthonormal frames (trace form).
double ll_value(const CoupledView& view, const Mat& x, const Mat& y);
double ul_value(const CoupledView& view, const Mat& x, const Mat& y);
/// Riemannian gradients: project_tangent(y, 2(Θ + λxxᵀ)y) and project_tangent(x, 2λ yyᵀx).
TangentVector ll_grad_y(const CoupledView& view, const ManifoldPoint& x, const ManifoldPoint& y);
TangentVector ul_grad_x(const CoupledView& view, const ManifoldPoint& x, const ManifoldPoint& y);

// Ambient second-order products of the trace form.
Mat hvp_yy_ll(const CoupledView& view, const Mat& x, const Mat& y, const Mat& v);
Mat hvp_yy_ul(const CoupledView& view, const Mat& x, const Mat& y, const Mat& v);
Mat hvp_xy_ll(const CoupledView& view, const Mat& x, const Mat& y, const Mat& u);
Mat hvp_xy_ul(const CoupledView& view, const Mat& x, const Mat& y, const Mat& u);

/// λ·k, the maximum of ul_value over orthonormal frames.
double ul_bound(double lambda, int k);

/// Scale-invariant extension used by the Euclidean variants: every tr(yᵀAy)
/// on frames becomes tr(P_y A) with P_y = y (yᵀy)⁻¹ yᵀ, which agrees with the
/// trace form on orthonormal frames and stays bounded off the manifold.
namespace projector_form {
double value(const Mat& y, const Mat& a);
/// 2 (A y − y W M) W with W = (yᵀy)⁻¹, M = yᵀAy.
Mat grad(const Mat& y, const Mat& a);
Mat hvp(const Mat& y, const Mat& a, const Mat& v);
/// Symmetric C with ⟨grad(y, A), u⟩ = tr(A C) for every symmetric A.
Mat cross(const Mat& y, const Mat& u);
Mat projector(const Mat& y);
}  // namespace projector_form

/// Bilevel problem for one coupled view (maximization, ul_bound = λk).
BilevelProblem make_problem(const CoupledView& view, int k, ManifoldMode mode);

/// One problem per auxiliary view (independent coupling) or a single problem on
/// the mean auxiliary operator (joint coupling).
std::vector<CoupledView> coupled_views(const MvhscInstance& instance);
std::vector<BilevelProblem> make_problems(const MvhscInstance& instance, ManifoldMode mode);

/// Top-k eigenvectors of Θ (descending eigenvalues).
Mat spectral_embedding(const Mat& theta, int k);

// Portable instance file: "RBLOINST", u64 LE header length, JSON header, then
// each view's n×n Θ as float64 little-endian, row-major.
void write_instance(const std::filesystem::path& path, const MvhscInstance& instance);
MvhscInstance read_instance(const std::filesystem::path& path);

}  // namespace rblo::mvhsc
