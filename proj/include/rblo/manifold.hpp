#pragma once

#include <memory>

#include <Eigen/Core>

#include "rblo/rng.hpp"

namespace rblo {

inline constexpr double kOrthonormalityTol = 1e-10;
inline constexpr double kHorizontalityTol = 1e-8;
inline constexpr double kRetractionRankTol = 1e-12;

/// ‖MᵀM − I‖_F.
double orthonormality_error(const Eigen::MatrixXd& m);

/// Raw-matrix geometry shared by the typed API and the solver hot loops.
namespace frame {

/// (I − X Xᵀ) A, evaluated as A − X (Xᵀ A).
Eigen::MatrixXd project(const Eigen::MatrixXd& x, const Eigen::MatrixXd& a);

/// Thin QR factors of an n×k matrix with diag(R) > 0.
struct ThinQr {
  Eigen::MatrixXd q;  // n×k, orthonormal columns
  Eigen::MatrixXd r;  // k×k, upper triangular, positive diagonal
};

/// Throws DegenerateRetractionError if some |r_ii| < kRetractionRankTol.
ThinQr thin_qr(const Eigen::MatrixXd& z);

/// Adjoint of the differential of Z ↦ qf(Z) at Z = QR, applied to W.
///
/// With dQ = Q ρ(Qᵀ dZ R⁻¹) + (I − QQᵀ) dZ R⁻¹, ρ(C) = tril₋(C) − tril₋(C)ᵀ,
/// the adjoint is  Q tril₋(B − Bᵀ) R⁻ᵀ + (I − QQᵀ) W R⁻ᵀ  with B = QᵀW.
Eigen::MatrixXd qf_adjoint(const ThinQr& qr, const Eigen::MatrixXd& w);

}  // namespace frame

/// n×k matrix with orthonormal columns: a point on St(k, n), read as a
/// representative of its span on Gr(k, n). Immutable; copies share storage.
class ManifoldPoint {
 public:
  /// Validates orthonormality to kOrthonormalityTol; throws DomainError otherwise.
  explicit ManifoldPoint(Eigen::MatrixXd data);

  const Eigen::MatrixXd& data() const noexcept { return *data_; }
  Eigen::Index n() const noexcept { return data_->rows(); }
  Eigen::Index k() const noexcept { return data_->cols(); }

  /// True when both refer to the same stored frame or hold identical entries.
  bool same_as(const ManifoldPoint& other) const;

 private:
  std::shared_ptr<const Eigen::MatrixXd> data_;
};

/// Horizontal tangent vector (XᵀV = 0) at a base point.
class TangentVector {
 public:
  /// Validates shape and horizontality to kHorizontalityTol.
  TangentVector(ManifoldPoint base, Eigen::MatrixXd data);

  static TangentVector zero(const ManifoldPoint& base);

  const ManifoldPoint& base() const noexcept { return base_; }
  const Eigen::MatrixXd& data() const noexcept { return data_; }

  TangentVector scaled(double alpha) const;
  double norm() const { return data_.norm(); }

 private:
  struct Unchecked {};
  TangentVector(ManifoldPoint base, Eigen::MatrixXd data, Unchecked);
  friend TangentVector project_tangent(const ManifoldPoint&, const Eigen::MatrixXd&);

  ManifoldPoint base_;
  Eigen::MatrixXd data_;
};

TangentVector project_tangent(const ManifoldPoint& x, const Eigen::MatrixXd& a);

/// qf(X + V) with positive-diagonal sign convention. R_X(0) returns X itself.
ManifoldPoint qr_retract(const ManifoldPoint& x, const TangentVector& v);

/// Embedded trace metric trace(VᵀW); both vectors must share a base point.
double inner(const TangentVector& v, const TangentVector& w);

/// Projection transport: project_tangent(to, V.data). Not isometric, never expands.
TangentVector transport(const ManifoldPoint& from, const ManifoldPoint& to, const TangentVector& v);

/// Projection distance ‖XXᵀ − YYᵀ‖_F / √2.
double subspace_distance(const ManifoldPoint& x, const ManifoldPoint& y);

/// Q-factor of an n×k standard-normal matrix (Haar-distributed on the Stiefel manifold).
ManifoldPoint random_point(Eigen::Index n, Eigen::Index k, Rng& rng);

}  // namespace rblo
