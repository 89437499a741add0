#include "rblo/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "rblo/errors.hpp"
#include "rblo/kernels.hpp"
#include "rblo/rng.hpp"

namespace rblo::dataio {

namespace fs = std::filesystem;

namespace {

std::ifstream open_or_throw(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> read_lines(const fs::path& path) {
  auto in = open_or_throw(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

long parse_id(const std::string& token, const fs::path& path, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const long id = std::stol(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return id;
  } catch (const std::exception&) {
    throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad document id '" + token + "'");
  }
}

}  // namespace

/* ---------------------------------------------------------------------- */
Triplets read_matrix_market(const fs::path& path) {
  auto in = open_or_throw(path);
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) -> FormatError {
    return FormatError(path.string() + ":" + std::to_string(line_no) + ": " + msg);
  };

  if (!std::getline(in, line)) {
    line_no = 1;
    throw fail("empty file, expected MatrixMarket banner");
  }
  ++line_no;
  {
    std::istringstream banner(line);
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    std::transform(format.begin(), format.end(), format.begin(), ::tolower);
    std::transform(field.begin(), field.end(), field.begin(), ::tolower);
    std::transform(symmetry.begin(), symmetry.end(), symmetry.begin(), ::tolower);
    if (tag != "%%MatrixMarket" || format != "coordinate" || (field != "real" && field != "integer") ||
        symmetry != "general")
      throw fail("expected '%%MatrixMarket matrix coordinate real general' banner");
  }

  Triplets out;
  long long nnz = -1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '%') continue;
    std::istringstream size_line(t);
    long long r = 0, c = 0;
    if (!(size_line >> r >> c >> nnz) || r < 0 || c < 0 || nnz < 0) throw fail("malformed size line '" + t + "'");
    out.rows = r;
    out.cols = c;
    break;
  }
  if (nnz < 0) throw fail("missing size line");

  out.entries.reserve(static_cast<std::size_t>(nnz));
  for (long long e = 0; e < nnz; ++e) {
    if (!std::getline(in, line)) throw fail("expected " + std::to_string(nnz) + " entries, found " + std::to_string(e));
    ++line_no;
    std::istringstream entry(line);
    long long i = 0, j = 0;
    double v = 0.0;
    if (!(entry >> i >> j >> v)) throw fail("malformed entry '" + trim(line) + "'");
    if (i < 1 || i > out.rows || j < 1 || j > out.cols) throw fail("entry index out of range");
    out.entries.emplace_back(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1), v);
  }
  return out;
}

Mat tfidf(const Mat& counts) {
  const double n_docs = static_cast<double>(counts.rows());
  Mat out = counts;
  for (Eigen::Index t = 0; t < counts.cols(); ++t) {
    const double df = static_cast<double>((counts.col(t).array() > 0.0).count());
    out.col(t) *= std::log((1.0 + n_docs) / (1.0 + df)) + 1.0;
  }
  return kernels::row_normalize(out);
}

/* ---------------------------------------------------------------------- */
MultiViewDataset load_3sources(const fs::path& dir, const LoadOptions& options) {
  struct RawView {
    std::string name;
    std::vector<long> docs;
    Triplets counts;  // terms × docs
  };
  std::vector<RawView> raw;
  std::set<long> known;
  for (const auto& source : options.sources) {
    RawView v;
    v.name = source;
    const fs::path stem = dir / ("3sources_" + source);
    const auto doc_lines = read_lines(fs::path(stem).concat(".docs"));
    for (std::size_t i = 0; i < doc_lines.size(); ++i)
      v.docs.push_back(parse_id(doc_lines[i], fs::path(stem).concat(".docs"), i + 1));
    const auto terms = read_lines(fs::path(stem).concat(".terms"));
    v.counts = read_matrix_market(fs::path(stem).concat(".mtx"));
    if (v.counts.rows != static_cast<Eigen::Index>(terms.size()) ||
        v.counts.cols != static_cast<Eigen::Index>(v.docs.size()))
      throw FormatError(fs::path(stem).concat(".mtx").string() + ": shape " + std::to_string(v.counts.rows) + "x" +
                        std::to_string(v.counts.cols) + " disagrees with " + std::to_string(terms.size()) +
                        " terms and " + std::to_string(v.docs.size()) + " documents");
    known.insert(v.docs.begin(), v.docs.end());
    raw.push_back(std::move(v));
  }

  // Documents present in every view, ascending by id.
  std::vector<long> shared(raw.front().docs.begin(), raw.front().docs.end());
  std::sort(shared.begin(), shared.end());
  for (std::size_t v = 1; v < raw.size(); ++v) {
    std::vector<long> other = raw[v].docs;
    std::sort(other.begin(), other.end());
    std::vector<long> both;
    std::set_intersection(shared.begin(), shared.end(), other.begin(), other.end(), std::back_inserter(both));
    shared = std::move(both);
  }
  if (shared.empty()) throw FormatError(dir.string() + ": no document is present in every view");
  std::map<long, Eigen::Index> row_of;
  for (std::size_t i = 0; i < shared.size(); ++i) row_of[shared[i]] = static_cast<Eigen::Index>(i);
  const Eigen::Index n = static_cast<Eigen::Index>(shared.size());

  MultiViewDataset ds;
  ds.doc_ids = shared;
  for (const auto& v : raw) {
    Mat counts = Mat::Zero(n, v.counts.rows);
    for (const auto& e : v.counts.entries) {
      const auto it = row_of.find(v.docs[static_cast<std::size_t>(e.col())]);
      if (it != row_of.end()) counts(it->second, e.row()) += e.value();
    }
    for (Eigen::Index i = 0; i < n; ++i)
      if (counts.row(i).isZero(0.0)) ds.empty_documents.emplace_back(v.name, i);
    ds.views.push_back({v.name, options.raw_counts ? kernels::row_normalize(counts) : tfidf(counts)});
  }

  const fs::path clist = dir / "3sources.disjoint.clist";
  const auto lines = read_lines(clist);
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto colon = lines[li].find(':');
    if (colon == std::string::npos)
      throw FormatError(clist.string() + ":" + std::to_string(li + 1) + ": expected 'label: id,id,...'");
    const int cls = static_cast<int>(ds.class_names.size());
    ds.class_names.push_back(trim(lines[li].substr(0, colon)));
    std::istringstream ids(lines[li].substr(colon + 1));
    std::string token;
    while (std::getline(ids, token, ',')) {
      token = trim(token);
      if (token.empty()) continue;
      const long id = parse_id(token, clist, li + 1);
      if (!known.count(id))
        throw FormatError(clist.string() + ":" + std::to_string(li + 1) + ": unknown document " + token);
      const auto it = row_of.find(id);
      if (it == row_of.end()) continue;  // present in some views only
      if (labels[it->second] != -1 && labels[it->second] != cls)
        throw FormatError(clist.string() + ": document " + token + " carries two labels");
      labels[it->second] = cls;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i)
    if (labels[i] < 0) throw FormatError(clist.string() + ": document " + std::to_string(shared[i]) + " has no label");
  ds.labels = clustering::LabelVector(std::move(labels), static_cast<int>(ds.class_names.size()));
  return ds;
}

/* ---------------------------------------------------------------------- */
SynthSpec SynthSpec::parse(const std::string& text) {
  SynthSpec spec;
  const auto colon = text.find(':');
  const std::string mode = text.substr(0, colon);
  if (mode == "euclidean_quadratic") spec.mode = SynthMode::euclidean_quadratic;
  else if (mode == "grassmann_trace") spec.mode = SynthMode::grassmann_trace, spec.manifold = ManifoldMode::riemannian;
  else throw ConfigError("synth: unknown mode '" + mode + "'");
  if (colon == std::string::npos) return spec;

  std::istringstream rest(text.substr(colon + 1));
  std::string kv;
  while (std::getline(rest, kv, ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("synth: expected key=value, got '" + kv + "'");
    const std::string key = trim(kv.substr(0, eq));
    const std::string val = trim(kv.substr(eq + 1));
    try {
      if (key == "nx") spec.n_x = std::stoi(val);
      else if (key == "ny") spec.n_y = std::stoi(val);
      else if (key == "n") spec.n_x = spec.n_y = std::stoi(val);
      else if (key == "k") spec.k = std::stoi(val);
      else if (key == "cond") spec.cond = std::stod(val);
      else if (key == "noise") spec.noise = std::stod(val);
      else if (key == "a") spec.identity_a = (val == "identity");
      else if (key == "b") spec.zero_b = (val == "zero");
      else if (key == "views") spec.views = std::stoi(val);
      else if (key == "lambda") spec.lambda = std::stod(val);
      else if (key == "seed") spec.seed = std::stoull(val);
      else if (key == "manifold") spec.manifold = val == "riemannian" ? ManifoldMode::riemannian : ManifoldMode::euclidean;
      else throw ConfigError("synth: unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ConfigError("synth: bad value for '" + key + "'");
    }
  }
  return spec;
}

std::string SynthSpec::to_string() const {
  std::ostringstream os;
  os.precision(17);
  if (mode == SynthMode::euclidean_quadratic) {
    os << "euclidean_quadratic:nx=" << n_x << ",ny=" << n_y << ",k=" << k << ",cond=" << cond << ",noise=" << noise
       << ",a=" << (identity_a ? "identity" : "random") << ",b=" << (zero_b ? "zero" : "random");
  } else {
    os << "grassmann_trace:n=" << n_y << ",k=" << k << ",views=" << views << ",lambda=" << lambda;
  }
  os << ",seed=" << seed << ",manifold=" << rblo::to_string(manifold);
  return os.str();
}

namespace {

SynthProblem quadratic(const SynthSpec& spec) {
  if (spec.n_x < 1 || spec.n_y < 1 || spec.k < 1) throw DimensionError("synth: dimensions must be positive");
  if (spec.identity_a && spec.n_x != spec.n_y) throw DimensionError("synth: a=identity needs nx == ny");
  if (!(spec.cond >= 1.0)) throw ConfigError("synth: cond must be >= 1");
  Rng rng(spec.seed);
  SynthProblem out;
  out.spec = spec;
  const int nx = spec.n_x, ny = spec.n_y, k = spec.k;

  out.a = spec.identity_a ? Mat(Mat::Identity(ny, nx)) : Mat(rng.normal_matrix(ny, nx) / std::sqrt(double(ny)));
  // Q = U diag(λ) Uᵀ with λ log-spaced on [1/cond, 1].
  const Mat u = frame::thin_qr(rng.normal_matrix(ny, ny)).q;
  Eigen::VectorXd eig(ny);
  for (int i = 0; i < ny; ++i)
    eig(i) = ny == 1 ? 1.0 : std::pow(spec.cond, -static_cast<double>(i) / (ny - 1));
  out.q = u * eig.asDiagonal() * u.transpose();
  out.q = 0.5 * (out.q + out.q.transpose()).eval();
  if (spec.zero_b) {
    out.b = Mat::Zero(ny, k);
  } else {
    out.b = out.a * rng.normal_matrix(nx, k);
    if (spec.noise > 0.0) out.b += spec.noise * rng.normal_matrix(ny, k);
  }

  const Mat a = out.a, b = out.b, q = out.q;
  BilevelProblem& p = out.problem;
  p.manifold_mode = spec.manifold;
  p.sense = Sense::minimize;
  p.ll_value = [a, q](const Mat& x, const Mat& y) {
    const Mat r = y - a * x;
    return 0.5 * (r.transpose() * q * r).trace();
  };
  p.ul_value = [b](const Mat&, const Mat& y) { return 0.5 * (y - b).squaredNorm(); };
  p.egrad_y_ll = [a, q](const Mat& x, const Mat& y) -> Mat { return q * (y - a * x); };
  p.egrad_y_ul = [b](const Mat&, const Mat& y) -> Mat { return y - b; };
  p.egrad_x_ul = [](const Mat& x, const Mat&) -> Mat { return Mat::Zero(x.rows(), x.cols()); };
  p.hvp_yy_ll = [q](const Mat&, const Mat&, const Mat& v) -> Mat { return q * v; };
  p.hvp_yy_ul = [](const Mat&, const Mat&, const Mat& v) -> Mat { return v; };
  p.hvp_xy_ll = [a, q](const Mat&, const Mat&, const Mat& u) -> Mat { return -a.transpose() * (q * u); };
  p.hvp_xy_ul = [](const Mat& x, const Mat&, const Mat&) -> Mat { return Mat::Zero(x.rows(), x.cols()); };

  out.ll_solution = [a](const Mat& x) -> Mat { return a * x; };
  out.phi = [a, b](const Mat& x) { return 0.5 * (a * x - b).squaredNorm(); };
  if (spec.manifold == ManifoldMode::euclidean) {
    Eigen::ColPivHouseholderQR<Mat> ls(a);
    if (ls.rank() == nx) {
      out.x_star = ls.solve(b);
      out.y_star = a * *out.x_star;
    }
  }
  return out;
}

Mat planted_theta(const std::vector<int>& labels, int k, double noise, Rng& rng) {
  const Eigen::Index n = static_cast<Eigen::Index>(labels.size());
  Mat g = noise * rng.normal_matrix(n, n);
  for (Eigen::Index i = 0; i < n; ++i) g(i, labels[i]) += 1.0;
  Mat theta = g * g.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> eig(theta, Eigen::EigenvaluesOnly);
  theta /= eig.eigenvalues().maxCoeff();
  (void)k;
  return 0.5 * (theta + theta.transpose());
}

SynthProblem grassmann(const SynthSpec& spec) {
  const int n = spec.n_y;
  if (spec.k < 1 || spec.k > n) throw DimensionError("synth: need 1 <= k <= n");
  if (spec.views < 2) throw ConfigError("synth: grassmann_trace needs at least two views");
  Rng rng(spec.seed);
  SynthProblem out;
  out.spec = spec;
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[i] = i % spec.k;

  mvhsc::MvhscInstance inst;
  inst.k = spec.k;
  inst.lambda = spec.lambda;
  inst.knn = 0;
  for (int v = 0; v < spec.views; ++v) {
    inst.thetas.push_back({planted_theta(labels, spec.k, 0.35, rng)});
    inst.view_names.push_back("synth" + std::to_string(v));
  }
  inst.validate();
  out.problem = mvhsc::make_problem(mvhsc::coupled_views(inst).front(), spec.k, spec.manifold);
  out.labels = clustering::LabelVector(labels, spec.k);
  out.instance = std::move(inst);
  return out;
}

}  // namespace

SynthProblem synth_bilevel(const SynthSpec& spec) {
  return spec.mode == SynthMode::euclidean_quadratic ? quadratic(spec) : grassmann(spec);
}

}  // namespace rblo::dataio
