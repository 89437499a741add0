#include "rblo/mvhsc.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "rblo/errors.hpp"
#include "rblo/kernels.hpp"

namespace rblo::mvhsc {

/* ---------------------------------------------------------------------- */
HypergraphOperator build_theta(const Mat& features, int knn) {
  const Eigen::Index n = features.rows();
  if (n < 2) throw ConstructionError("build_theta: need at least two vertices");
  if (knn < 1 || knn > n - 1)
    throw ConstructionError("build_theta: knn must lie in [1, n-1], got " + std::to_string(knn));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = features.row(i).norm();
    if (norm == 0.0)
      throw ConstructionError("build_theta: vertex " + std::to_string(i) + " is isolated (empty feature row)");
    if (std::abs(norm - 1.0) > 1e-8)
      throw DomainError("build_theta: row " + std::to_string(i) + " is not L2-normalized");
  }

  // Column e of H is the hyperedge spawned by vertex e.
  const auto neighbors = kernels::knn_cosine(features, knn);
  Mat h = Mat::Zero(n, n);
  for (Eigen::Index e = 0; e < n; ++e) {
    h(e, e) = 1.0;
    for (Eigen::Index j : neighbors[e]) h(j, e) = 1.0;
  }
  const Eigen::VectorXd edge_deg = h.colwise().sum().transpose();
  const Eigen::VectorXd vertex_deg = h.rowwise().sum();
  for (Eigen::Index i = 0; i < n; ++i)
    if (vertex_deg(i) <= 0.0) throw ConstructionError("build_theta: vertex " + std::to_string(i) + " has zero degree");

  // Θ = M Mᵀ with M = D_v^{-1/2} H D_e^{-1/2}, which makes it PSD by construction.
  const Mat m = vertex_deg.cwiseSqrt().cwiseInverse().asDiagonal() * h *
                edge_deg.cwiseSqrt().cwiseInverse().asDiagonal();
  HypergraphOperator out;
  out.theta = m * m.transpose();
  out.theta = 0.5 * (out.theta + out.theta.transpose()).eval();
  return out;
}

CoupledView CoupledView::of(Mat theta, double lambda) {
  return {std::make_shared<const Mat>(std::move(theta)), lambda};
}

std::vector<int> MvhscInstance::auxiliary_views() const {
  std::vector<int> aux;
  for (int v = 0; v < static_cast<int>(thetas.size()); ++v)
    if (v != consensus) aux.push_back(v);
  return aux;
}

void MvhscInstance::validate() const {
  if (thetas.size() < 2) throw ConfigError("MvhscInstance: need a consensus view and at least one auxiliary view");
  if (consensus < 0 || consensus >= static_cast<int>(thetas.size()))
    throw ConfigError("MvhscInstance: consensus index out of range");
  for (const auto& t : thetas)
    if (t.theta.rows() != n() || t.theta.cols() != n()) throw ConfigError("MvhscInstance: views disagree on n");
  if (k < 1 || k > n()) throw ConfigError("MvhscInstance: need 1 <= k <= n");
  if (!(lambda > 0.0)) throw ConfigError("MvhscInstance: lambda must be positive");
}

/* ---------------------------------------------------------------------- */
namespace {

void require_shapes(const Mat& theta, const Mat& x, const Mat& y) {
  if (x.rows() != theta.rows() || y.rows() != theta.rows() || x.cols() != y.cols())
    throw DimensionError("mvhsc: x, y must both be n x k with n matching the operator");
}

}  // namespace

double ll_value(const CoupledView& view, const Mat& x, const Mat& y) {
  require_shapes(*view.theta, x, y);
  return (y.transpose() * (*view.theta) * y).trace() + view.lambda * (y.transpose() * x).squaredNorm();
}

double ul_value(const CoupledView& view, const Mat& x, const Mat& y) {
  require_shapes(*view.theta, x, y);
  return view.lambda * (y.transpose() * x).squaredNorm();
}

namespace {

Mat egrad_y_ll_trace(const CoupledView& view, const Mat& x, const Mat& y) {
  return 2.0 * ((*view.theta) * y + view.lambda * x * (x.transpose() * y));
}

Mat egrad_y_ul_trace(const CoupledView& view, const Mat& x, const Mat& y) {
  return 2.0 * view.lambda * x * (x.transpose() * y);
}

Mat egrad_x_ul_trace(const CoupledView& view, const Mat& x, const Mat& y) {
  return 2.0 * view.lambda * y * (y.transpose() * x);
}

}  // namespace

TangentVector ll_grad_y(const CoupledView& view, const ManifoldPoint& x, const ManifoldPoint& y) {
  require_shapes(*view.theta, x.data(), y.data());
  return project_tangent(y, egrad_y_ll_trace(view, x.data(), y.data()));
}

TangentVector ul_grad_x(const CoupledView& view, const ManifoldPoint& x, const ManifoldPoint& y) {
  require_shapes(*view.theta, x.data(), y.data());
  return project_tangent(x, egrad_x_ul_trace(view, x.data(), y.data()));
}

Mat hvp_yy_ll(const CoupledView& view, const Mat& x, const Mat& /*y*/, const Mat& v) {
  return 2.0 * ((*view.theta) * v + view.lambda * x * (x.transpose() * v));
}

Mat hvp_yy_ul(const CoupledView& view, const Mat& x, const Mat& /*y*/, const Mat& v) {
  return 2.0 * view.lambda * x * (x.transpose() * v);
}

Mat hvp_xy_ll(const CoupledView& view, const Mat& x, const Mat& y, const Mat& u) {
  // ∂/∂x tr(λ xxᵀ (y uᵀ + u yᵀ)) = 2λ (y uᵀ + u yᵀ) x
  return 2.0 * view.lambda * (y * (u.transpose() * x) + u * (y.transpose() * x));
}

Mat hvp_xy_ul(const CoupledView& view, const Mat& x, const Mat& y, const Mat& u) {
  // F is the coupling term of f, so its mixed derivative coincides.
  return hvp_xy_ll(view, x, y, u);
}

double ul_bound(double lambda, int k) { return lambda * static_cast<double>(k); }

/* ---------------------------------------------------------------------- */
namespace projector_form {

namespace {
Mat gram_inverse(const Mat& y) {
  const Mat gram = y.transpose() * y;
  Eigen::LLT<Mat> llt(gram);
  if (llt.info() != Eigen::Success) throw DegenerateRetractionError("projector form: frame lost rank");
  return llt.solve(Mat::Identity(gram.rows(), gram.cols()));
}
}  // namespace

Mat projector(const Mat& y) { return y * gram_inverse(y) * y.transpose(); }

double value(const Mat& y, const Mat& a) {
  return (gram_inverse(y) * (y.transpose() * a * y)).trace();
}

Mat grad(const Mat& y, const Mat& a) {
  const Mat w = gram_inverse(y);
  const Mat ay = a * y;
  const Mat m = y.transpose() * ay;
  return 2.0 * (ay - y * (w * m)) * w;
}

Mat hvp(const Mat& y, const Mat& a, const Mat& v) {
  const Mat w = gram_inverse(y);
  const Mat ay = a * y;
  const Mat av = a * v;
  const Mat m = y.transpose() * ay;
  const Mat dw = -w * (v.transpose() * y + y.transpose() * v) * w;
  const Mat dm = v.transpose() * ay + y.transpose() * av;
  const Mat residual = ay - y * (w * m);
  const Mat d_residual = av - v * (w * m) - y * (dw * m) - y * (w * dm);
  return 2.0 * (d_residual * w + residual * dw);
}

Mat cross(const Mat& y, const Mat& u) {
  const Mat w = gram_inverse(y);
  // C = 2 y W uᵀ (I − P_y)
  const Mat ywut = y * w * u.transpose();
  const Mat c = 2.0 * (ywut - ywut * projector(y));
  return 0.5 * (c + c.transpose());
}

}  // namespace projector_form

/* ---------------------------------------------------------------------- */
BilevelProblem make_problem(const CoupledView& view, int k, ManifoldMode mode) {
  BilevelProblem p;
  p.manifold_mode = mode;
  p.sense = Sense::maximize;
  p.ul_bound = ul_bound(view.lambda, k);

  if (mode == ManifoldMode::riemannian) {
    p.ll_value = [view](const Mat& x, const Mat& y) { return ll_value(view, x, y); };
    p.ul_value = [view](const Mat& x, const Mat& y) { return ul_value(view, x, y); };
    p.egrad_y_ll = [view](const Mat& x, const Mat& y) { return egrad_y_ll_trace(view, x, y); };
    p.egrad_y_ul = [view](const Mat& x, const Mat& y) { return egrad_y_ul_trace(view, x, y); };
    p.egrad_x_ul = [view](const Mat& x, const Mat& y) { return egrad_x_ul_trace(view, x, y); };
    p.hvp_yy_ll = [view](const Mat& x, const Mat& y, const Mat& v) { return hvp_yy_ll(view, x, y, v); };
    p.hvp_yy_ul = [view](const Mat& x, const Mat& y, const Mat& v) { return hvp_yy_ul(view, x, y, v); };
    p.hvp_xy_ll = [view](const Mat& x, const Mat& y, const Mat& u) { return hvp_xy_ll(view, x, y, u); };
    p.hvp_xy_ul = [view](const Mat& x, const Mat& y, const Mat& u) { return hvp_xy_ul(view, x, y, u); };
    return p;
  }

  namespace pf = projector_form;
  const double lam = view.lambda;
  auto ll_op = [view, lam](const Mat& x) -> Mat { return *view.theta + lam * pf::projector(x); };
  auto ul_op = [lam](const Mat& x) -> Mat { return lam * pf::projector(x); };
  p.ll_value = [ll_op](const Mat& x, const Mat& y) { return pf::value(y, ll_op(x)); };
  p.ul_value = [ul_op](const Mat& x, const Mat& y) { return pf::value(y, ul_op(x)); };
  p.egrad_y_ll = [ll_op](const Mat& x, const Mat& y) { return pf::grad(y, ll_op(x)); };
  p.egrad_y_ul = [ul_op](const Mat& x, const Mat& y) { return pf::grad(y, ul_op(x)); };
  p.egrad_x_ul = [lam](const Mat& x, const Mat& y) { return pf::grad(x, lam * pf::projector(y)); };
  p.hvp_yy_ll = [ll_op](const Mat& x, const Mat& y, const Mat& v) { return pf::hvp(y, ll_op(x), v); };
  p.hvp_yy_ul = [ul_op](const Mat& x, const Mat& y, const Mat& v) { return pf::hvp(y, ul_op(x), v); };
  // Both objectives depend on x only through λ P_x, so the mixed terms agree.
  auto mixed = [lam](const Mat& x, const Mat& y, const Mat& u) -> Mat {
    return lam * pf::grad(x, pf::cross(y, u));
  };
  p.hvp_xy_ll = mixed;
  p.hvp_xy_ul = mixed;
  return p;
}

std::vector<CoupledView> coupled_views(const MvhscInstance& instance) {
  instance.validate();
  std::vector<CoupledView> views;
  const auto aux = instance.auxiliary_views();
  if (instance.coupling == Coupling::joint) {
    Mat mean = Mat::Zero(instance.n(), instance.n());
    for (int v : aux) mean += instance.thetas[v].theta;
    mean /= static_cast<double>(aux.size());
    views.push_back(CoupledView::of(std::move(mean), instance.lambda));
  } else {
    for (int v : aux) views.push_back(CoupledView::of(instance.thetas[v].theta, instance.lambda));
  }
  return views;
}

std::vector<BilevelProblem> make_problems(const MvhscInstance& instance, ManifoldMode mode) {
  std::vector<BilevelProblem> problems;
  for (const auto& view : coupled_views(instance)) problems.push_back(make_problem(view, instance.k, mode));
  return problems;
}

Mat spectral_embedding(const Mat& theta, int k) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(theta);
  if (eig.info() != Eigen::Success) throw NumericalFailure("spectral_embedding: eigensolver failed", 0);
  const Eigen::Index n = theta.rows();
  // Eigenvalues ascend; take the last k columns in descending order.
  Mat out(n, k);
  for (int j = 0; j < k; ++j) out.col(j) = eig.eigenvectors().col(n - 1 - j);
  return out;
}

/* ---------------------------------------------------------------------- */
namespace {

constexpr char kMagic[8] = {'R', 'B', 'L', 'O', 'I', 'N', 'S', 'T'};

template <typename T>
void put_le(std::ostream& os, T value) {
  auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  os.write(reinterpret_cast<const char*>(bits.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& is, const std::string& what) {
  std::array<unsigned char, sizeof(T)> bits{};
  if (!is.read(reinterpret_cast<char*>(bits.data()), sizeof(T)))
    throw FormatError("instance file truncated while reading " + what);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_instance(const std::filesystem::path& path, const MvhscInstance& instance) {
  instance.validate();
  nlohmann::json header = {
      {"format", "rblo-instance"},
      {"version", 1},
      {"n", instance.n()},
      {"k", instance.k},
      {"lambda", instance.lambda},
      {"consensus", instance.consensus},
      {"coupling", instance.coupling == Coupling::joint ? "joint" : "independent"},
      {"views", instance.view_names},
      {"construction", {{"method", "knn_hyperedge"}, {"knn", instance.knn}}},
      {"layout", "float64-le-row-major"},
  };
  if (instance.view_names.size() != instance.thetas.size())
    throw ConfigError("write_instance: one name per view required");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  const std::string text = header.dump();
  os.write(kMagic, sizeof kMagic);
  put_le<std::uint64_t>(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : instance.thetas)
    for (Eigen::Index i = 0; i < t.n(); ++i)
      for (Eigen::Index j = 0; j < t.n(); ++j) put_le<double>(os, t.theta(i, j));
  if (!os) throw IoError("write failed for " + path.string());
}

MvhscInstance read_instance(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw FormatError(path.string() + ": bad magic, not an instance file");
  const auto len = get_le<std::uint64_t>(is, "header length");
  if (len > (1u << 24)) throw FormatError(path.string() + ": implausible header length");
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) throw FormatError(path.string() + ": truncated header");

  MvhscInstance inst;
  Eigen::Index n = 0;
  try {
    const auto header = nlohmann::json::parse(text);
    if (header.at("format") != "rblo-instance" || header.at("version") != 1)
      throw FormatError(path.string() + ": unsupported format/version");
    n = header.at("n").get<Eigen::Index>();
    inst.k = header.at("k").get<int>();
    inst.lambda = header.at("lambda").get<double>();
    inst.consensus = header.at("consensus").get<int>();
    inst.coupling = header.value("coupling", "independent") == "joint" ? Coupling::joint : Coupling::independent;
    inst.view_names = header.at("views").get<std::vector<std::string>>();
    inst.knn = header.at("construction").value("knn", 10);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": bad header: " + e.what());
  }
  for (std::size_t v = 0; v < inst.view_names.size(); ++v) {
    HypergraphOperator op{Mat(n, n)};
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) op.theta(i, j) = get_le<double>(is, "view " + inst.view_names[v]);
    inst.thetas.push_back(std::move(op));
  }
  inst.validate();
  return inst;
}

}  // namespace rblo::mvhsc
