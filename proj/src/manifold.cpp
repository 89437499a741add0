#include "rblo/manifold.hpp"

#include <cmath>
#include <string>

#include <Eigen/QR>

#include "rblo/errors.hpp"

namespace rblo {

namespace {

std::string shape(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(what) + ": shape " + shape(a) + " vs " + shape(b));
}

}  // namespace

double orthonormality_error(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd gram = m.transpose() * m;
  return (gram - Eigen::MatrixXd::Identity(m.cols(), m.cols())).norm();
}

/* ---------------------------------------------------------------------- */
namespace frame {

Eigen::MatrixXd project(const Eigen::MatrixXd& x, const Eigen::MatrixXd& a) {
  require_same_shape(x, a, "project");
  return a - x * (x.transpose() * a);
}

ThinQr thin_qr(const Eigen::MatrixXd& z) {
  const Eigen::Index n = z.rows();
  const Eigen::Index k = z.cols();
  if (k < 1 || n < k) throw DimensionError("thin_qr: need n >= k >= 1, got " + shape(z));

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
  ThinQr out;
  out.q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
  out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < k; ++i) {
    const double rii = out.r(i, i);
    if (!(std::abs(rii) >= kRetractionRankTol))
      throw DegenerateRetractionError("QR retraction: |r_" + std::to_string(i) + std::to_string(i) +
                                      "| = " + std::to_string(std::abs(rii)) + " below rank tolerance");
    if (rii < 0.0) {
      out.q.col(i) *= -1.0;
      out.r.row(i) *= -1.0;
    }
  }
  return out;
}

Eigen::MatrixXd qf_adjoint(const ThinQr& qr, const Eigen::MatrixXd& w) {
  require_same_shape(qr.q, w, "qf_adjoint");
  const Eigen::MatrixXd b = qr.q.transpose() * w;
  Eigen::MatrixXd skew = b - b.transpose();
  skew.triangularView<Eigen::Upper>().setZero();
  // Solve (·) R⁻ᵀ as a right triangular solve: M R⁻ᵀ = (R⁻¹ Mᵀ)ᵀ.
  const Eigen::MatrixXd inner_part = qr.q * skew + (w - qr.q * b);
  return qr.r.triangularView<Eigen::Upper>().solve(inner_part.transpose()).transpose();
}

}  // namespace frame

/* ---------------------------------------------------------------------- */
ManifoldPoint::ManifoldPoint(Eigen::MatrixXd data) {
  if (data.cols() < 1 || data.rows() < data.cols())
    throw DimensionError("ManifoldPoint: need n >= k >= 1, got " + shape(data));
  const double err = orthonormality_error(data);
  if (!(err <= kOrthonormalityTol))
    throw DomainError("ManifoldPoint: columns not orthonormal (error " + std::to_string(err) + ")");
  data_ = std::make_shared<const Eigen::MatrixXd>(std::move(data));
}

bool ManifoldPoint::same_as(const ManifoldPoint& other) const {
  if (data_ == other.data_) return true;
  return data_->rows() == other.data_->rows() && data_->cols() == other.data_->cols() &&
         *data_ == *other.data_;
}

TangentVector::TangentVector(ManifoldPoint base, Eigen::MatrixXd data)
    : base_(std::move(base)), data_(std::move(data)) {
  require_same_shape(base_.data(), data_, "TangentVector");
  const double err = (base_.data().transpose() * data_).norm();
  if (!(err <= kHorizontalityTol))
    throw DomainError("TangentVector: not horizontal (|X^T V| = " + std::to_string(err) + ")");
}

TangentVector::TangentVector(ManifoldPoint base, Eigen::MatrixXd data, Unchecked)
    : base_(std::move(base)), data_(std::move(data)) {}

TangentVector TangentVector::zero(const ManifoldPoint& base) {
  return TangentVector(base, Eigen::MatrixXd::Zero(base.n(), base.k()), Unchecked{});
}

TangentVector TangentVector::scaled(double alpha) const {
  return TangentVector(base_, alpha * data_, Unchecked{});
}

/* ---------------------------------------------------------------------- */
TangentVector project_tangent(const ManifoldPoint& x, const Eigen::MatrixXd& a) {
  return TangentVector(x, frame::project(x.data(), a), TangentVector::Unchecked{});
}

ManifoldPoint qr_retract(const ManifoldPoint& x, const TangentVector& v) {
  if (!v.base().same_as(x)) throw DomainError("qr_retract: tangent vector based elsewhere");
  if (v.data().isZero(0.0)) return x;
  return ManifoldPoint(frame::thin_qr(x.data() + v.data()).q);
}

double inner(const TangentVector& v, const TangentVector& w) {
  if (!v.base().same_as(w.base())) throw DomainError("inner: tangent vectors at different base points");
  return (v.data().array() * w.data().array()).sum();
}

TangentVector transport(const ManifoldPoint& from, const ManifoldPoint& to, const TangentVector& v) {
  if (!v.base().same_as(from)) throw DomainError("transport: tangent vector not based at source point");
  require_same_shape(from.data(), to.data(), "transport");
  return project_tangent(to, v.data());
}

double subspace_distance(const ManifoldPoint& x, const ManifoldPoint& y) {
  require_same_shape(x.data(), y.data(), "subspace_distance");
  const Eigen::MatrixXd diff =
      x.data() * x.data().transpose() - y.data() * y.data().transpose();
  return diff.norm() / std::sqrt(2.0);
}

ManifoldPoint random_point(Eigen::Index n, Eigen::Index k, Rng& rng) {
  if (k < 1 || n < k)
    throw DimensionError("random_point: need n >= k >= 1, got n=" + std::to_string(n) +
                         " k=" + std::to_string(k));
  return ManifoldPoint(frame::thin_qr(rng.normal_matrix(n, k)).q);
}

}  // namespace rblo
