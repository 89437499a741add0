#include "rblo/bilevel.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace rblo {

/* ---------------------------------------------------------------------- */
std::string to_string(Variant v) {
  switch (v) {
    case Variant::BDA: return "BDA";
    case Variant::BDAG: return "BDAG";
    case Variant::B3DA: return "B3DA";
    case Variant::FBDA: return "FBDA";
  }
  return "?";
}

std::string to_string(Phase p) { return p == Phase::bb ? "bb" : "dim"; }
std::string to_string(ManifoldMode m) { return m == ManifoldMode::riemannian ? "riemannian" : "euclidean"; }
std::string to_string(HypergradMode m) {
  return m == HypergradMode::reverse_sweep ? "reverse_sweep" : "truncated";
}
std::string to_string(RetractionAdjoint r) { return r == RetractionAdjoint::exact ? "exact" : "projection"; }

Variant parse_variant(const std::string& s) {
  if (s == "bda" || s == "BDA") return Variant::BDA;
  if (s == "bdag" || s == "BDAG") return Variant::BDAG;
  if (s == "b3da" || s == "B3DA") return Variant::B3DA;
  if (s == "fbda" || s == "FBDA") return Variant::FBDA;
  throw ConfigError("unknown variant '" + s + "' (expected bda|bdag|b3da|fbda)");
}

HypergradMode parse_hypergrad_mode(const std::string& s) {
  if (s == "reverse_sweep") return HypergradMode::reverse_sweep;
  if (s == "truncated") return HypergradMode::truncated;
  throw ConfigError("unknown hypergrad_mode '" + s + "'");
}

RetractionAdjoint parse_retraction_adjoint(const std::string& s) {
  if (s == "exact") return RetractionAdjoint::exact;
  if (s == "projection") return RetractionAdjoint::projection;
  throw ConfigError("unknown retraction_adjoint '" + s + "'");
}

ManifoldMode variant_mode(Variant v) {
  return (v == Variant::BDAG || v == Variant::FBDA) ? ManifoldMode::riemannian : ManifoldMode::euclidean;
}

bool variant_uses_bb(Variant v) { return v == Variant::B3DA || v == Variant::FBDA; }

void SolverConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError("SolverConfig: " + msg); };
  if (!(mu > 0.0 && mu < 1.0)) fail("mu must lie in (0,1)");
  if (k1 < 0) fail("k1 must be >= 0");
  if (k2 < 1) fail("k2 must be >= 1");
  if (!(s_u > 0.0) || !std::isfinite(s_u)) fail("s_u must be positive");
  if (!(s_l > 0.0) || !std::isfinite(s_l)) fail("s_l must be positive");
  if (!(lambda_outer > 0.0) || !std::isfinite(lambda_outer)) fail("lambda_outer must be positive");
  if (outer_iters < 0) fail("outer_iters must be >= 0");
  if (!(beta_floor > 0.0 && beta_floor <= 1.0)) fail("beta_floor must lie in (0,1]");
  if (!(bb_clamp.s_min > 0.0 && bb_clamp.s_min <= bb_clamp.s_max)) fail("bb_clamp needs 0 < s_min <= s_max");
  if (!(tol_outer >= 0.0)) fail("tol_outer must be >= 0");
}

/* ---------------------------------------------------------------------- */
namespace {

double sign_of(const BilevelProblem& p) { return p.sense == Sense::maximize ? -1.0 : 1.0; }

bool all_finite(const Mat& m) { return m.allFinite(); }

/// Descent-sense Euclidean gradients in y at one point.
struct YGrads {
  Mat ul;
  Mat ll;
};

YGrads euclidean_y_grads(const BilevelProblem& p, const Mat& x, const Mat& y, std::size_t iteration) {
  const double sgn = sign_of(p);
  YGrads g{sgn * p.egrad_y_ul(x, y), sgn * p.egrad_y_ll(x, y)};
  if (!all_finite(g.ul) || !all_finite(g.ll)) throw NumericalFailure("non-finite gradient in aggregation step", iteration);
  return g;
}

/// Gradients as used by the update: projected in riemannian mode.
YGrads direction_grads(ManifoldMode mode, const YGrads& eg, const Mat& y) {
  if (mode == ManifoldMode::euclidean) return eg;
  return {frame::project(y, eg.ul), frame::project(y, eg.ll)};
}

Mat step_from(ManifoldMode mode, const Mat& y, const YGrads& dir, double s_u, double s_l, double mu,
              std::size_t iteration) {
  const Mat z = y - (mu * s_u) * dir.ul - ((1.0 - mu) * s_l) * dir.ll;
  if (!all_finite(z)) throw NumericalFailure("non-finite iterate", iteration);
  if (mode == ManifoldMode::euclidean) return z;
  if (z == y) return y;
  return frame::thin_qr(z).q;
}

void require_finite_positive(double s_u, double s_l, std::size_t iteration) {
  if (!(s_u > 0.0) || !(s_l > 0.0) || !std::isfinite(s_u) || !std::isfinite(s_l))
    throw NumericalFailure("step sizes must be finite and positive", iteration);
}

}  // namespace

Mat aggregate_step(const BilevelProblem& problem, const Mat& x, const Mat& y, double s_u, double s_l,
                   double mu, std::size_t iteration) {
  require_finite_positive(s_u, s_l, iteration);
  const YGrads eg = euclidean_y_grads(problem, x, y, iteration);
  return step_from(problem.manifold_mode, y, direction_grads(problem.manifold_mode, eg, y), s_u, s_l, mu,
                   iteration);
}

/* ---------------------------------------------------------------------- */
BbResult bb_stepsizes(ManifoldMode mode, const Mat& y, const Mat& y_prev, const Mat& g_ul,
                      const Mat& g_ul_prev, const Mat& g_ll, const Mat& g_ll_prev, const BbClamp& clamp,
                      bool inverse) {
  const Mat dy = y - y_prev;
  const double dy_sq = dy.squaredNorm();
  if (std::sqrt(dy_sq) < 1e-14) {
    const double mid = 0.5 * (clamp.s_min + clamp.s_max);
    return {mid, mid, true};
  }
  auto one = [&](const Mat& g, const Mat& g_prev) {
    const Mat moved = mode == ManifoldMode::riemannian ? frame::project(y, g_prev) : g_prev;
    const double curv = (dy.array() * (g - moved).array()).sum();
    const double raw = inverse ? dy_sq / curv : curv / dy_sq;
    if (!std::isfinite(raw) || raw <= 0.0) return clamp.s_min;
    return std::clamp(raw, clamp.s_min, clamp.s_max);
  };
  return {one(g_ul, g_ul_prev), one(g_ll, g_ll_prev), false};
}

std::pair<double, double> diminishing_stepsizes(int j, double s_u, double s_l, double /*beta_floor*/) {
  // β_j ≡ 1 lies in [beta_floor, 1] for every admissible floor.
  const double alpha = 1.0 / (static_cast<double>(j) + 1.0);
  return {s_u * alpha, s_l};
}

/* ---------------------------------------------------------------------- */
namespace {

void check_point(const BilevelProblem& p, const Mat& y, const char* what) {
  if (p.manifold_mode == ManifoldMode::riemannian && !(orthonormality_error(y) <= kOrthonormalityTol))
    throw DomainError(std::string(what) + ": point is not orthonormal");
}

void record_values(const BilevelProblem& p, InnerTrajectory& t) {
  const Mat& y = t.points.back();
  t.ll_values.push_back(p.ll_value(t.x, y));
  t.ul_values.push_back(p.ul_value(t.x, y));
}

}  // namespace

InnerTrajectory run_inner(const BilevelProblem& problem, const Mat& x, const Mat& y0,
                          const SolverConfig& config) {
  config.validate();
  check_point(problem, y0, "run_inner");
  const ManifoldMode mode = problem.manifold_mode;
  const bool hybrid = variant_uses_bb(config.variant);
  const int total = config.inner_steps();

  InnerTrajectory t;
  t.x = x;
  t.mode = mode;
  t.mu = config.mu;
  t.points.reserve(static_cast<std::size_t>(total) + 1);
  t.points.push_back(y0);

  YGrads prev_dir;
  for (int k = 0; k < total; ++k) {
    const std::size_t it = static_cast<std::size_t>(k);
    const Mat& y = t.points.back();
    const YGrads dir = direction_grads(mode, euclidean_y_grads(problem, x, y, it), y);

    StepSize step;
    if (hybrid && k < config.k1) {
      step.phase = Phase::bb;
      if (k == 0) {
        step.s_u = config.s_u;
        step.s_l = config.s_l;
      } else {
        const BbResult bb = bb_stepsizes(mode, y, t.points[it - 1], dir.ul, prev_dir.ul, dir.ll, prev_dir.ll,
                                         config.bb_clamp, config.bb_inverse);
        step.s_u = bb.s_u;
        step.s_l = bb.s_l;
        step.stagnation = bb.stagnation;
      }
    } else {
      step.phase = Phase::diminishing;
      const int j = hybrid ? k - config.k1 : k;
      std::tie(step.s_u, step.s_l) = diminishing_stepsizes(j, config.s_u, config.s_l, config.beta_floor);
    }
    require_finite_positive(step.s_u, step.s_l, it);
    t.points.push_back(step_from(mode, y, dir, step.s_u, step.s_l, config.mu, it));
    t.steps.push_back(step);
    record_values(problem, t);
    prev_dir = dir;
  }
  return t;
}

InnerTrajectory replay_inner(const BilevelProblem& problem, const Mat& x, const Mat& y0,
                             std::span<const StepSize> steps, double mu) {
  InnerTrajectory t;
  t.x = x;
  t.mode = problem.manifold_mode;
  t.mu = mu;
  t.points.push_back(y0);
  for (std::size_t k = 0; k < steps.size(); ++k) {
    t.points.push_back(aggregate_step(problem, x, t.points.back(), steps[k].s_u, steps[k].s_l, mu, k));
    t.steps.push_back(steps[k]);
    record_values(problem, t);
  }
  return t;
}

/* ---------------------------------------------------------------------- */
Mat hypergradient(const BilevelProblem& problem, const Mat& x, const InnerTrajectory& trajectory,
                  HypergradMode mode, RetractionAdjoint retraction) {
  if (trajectory.points.empty() || trajectory.points.size() != trajectory.steps.size() + 1)
    throw DomainError("hypergradient: malformed trajectory");
  if (trajectory.x.rows() != x.rows() || trajectory.x.cols() != x.cols() || trajectory.x != x)
    throw DomainError("hypergradient: trajectory was produced at a different x");
  if (trajectory.mode != problem.manifold_mode)
    throw DomainError("hypergradient: trajectory geometry differs from the problem's");

  const double sgn = sign_of(problem);
  const bool riem = problem.manifold_mode == ManifoldMode::riemannian;
  const Mat& y_final = trajectory.final_point();

  Mat grad_x = sgn * problem.egrad_x_ul(x, y_final);
  if (mode == HypergradMode::reverse_sweep) {
    Mat u = sgn * problem.egrad_y_ul(x, y_final);
    const double mu = trajectory.mu;
    for (std::size_t t = trajectory.size(); t-- > 0;) {
      const Mat& y = trajectory.points[t];
      const Mat& y_next = trajectory.points[t + 1];
      const double c_u = mu * trajectory.steps[t].s_u;
      const double c_l = (1.0 - mu) * trajectory.steps[t].s_l;

      if (!riem) {
        grad_x -= sgn * (c_u * problem.hvp_xy_ul(x, y, u) + c_l * problem.hvp_xy_ll(x, y, u));
        u -= sgn * (c_u * problem.hvp_yy_ul(x, y, u) + c_l * problem.hvp_yy_ll(x, y, u));
        continue;
      }

      const YGrads eg = euclidean_y_grads(problem, x, y, t);

      // Pull back through the retraction at Z = y − D(y).
      Mat w;
      if (retraction == RetractionAdjoint::exact) {
        const Mat z = y - c_u * frame::project(y, eg.ul) - c_l * frame::project(y, eg.ll);
        w = frame::qf_adjoint(frame::thin_qr(z), u);
      } else {
        w = frame::project(y_next, u);
      }

      // D(y) = c_u P_y g_F(y) + c_l P_y g_f(y);  d[P_y g]·v = P_y(H v) − (v yᵀ + y vᵀ) g.
      const Mat pw = frame::project(y, w);
      grad_x -= sgn * (c_u * problem.hvp_xy_ul(x, y, pw) + c_l * problem.hvp_xy_ll(x, y, pw));
      const Mat yt_w = y.transpose() * w;  // k×k
      auto curvature_adj = [&](const Mat& g) -> Mat {
        // adjoint of v ↦ (v yᵀ + y vᵀ) g, applied to w: w (gᵀ y) + g (wᵀ y)
        return w * (g.transpose() * y) + g * yt_w.transpose();
      };
      u = w - (c_u * (sgn * problem.hvp_yy_ul(x, y, pw) - curvature_adj(eg.ul)) +
               c_l * (sgn * problem.hvp_yy_ll(x, y, pw) - curvature_adj(eg.ll)));
    }
  }
  if (!grad_x.allFinite()) throw NumericalFailure("non-finite hypergradient", trajectory.size());
  return riem ? frame::project(x, grad_x) : grad_x;
}

Mat outer_step(ManifoldMode mode, const Mat& x, const Mat& hypergrad, double lambda_outer) {
  if (x.rows() != hypergrad.rows() || x.cols() != hypergrad.cols())
    throw DimensionError("outer_step: hypergradient shape differs from x");
  if (mode == ManifoldMode::euclidean) return x - lambda_outer * hypergrad;
  if (lambda_outer == 0.0 || hypergrad.isZero(0.0)) return x;
  return frame::thin_qr(x - lambda_outer * hypergrad).q;
}

/* ---------------------------------------------------------------------- */
SolveResult solve(std::span<const BilevelProblem> problems, const SolverConfig& config, const Mat& x0,
                  std::span<const Mat> y0) {
  config.validate();
  if (problems.empty()) throw ConfigError("solve: no lower-level blocks");
  if (problems.size() != y0.size()) throw DimensionError("solve: one initial y per block required");
  const ManifoldMode mode = variant_mode(config.variant);
  for (const auto& p : problems)
    if (p.manifold_mode != mode)
      throw ConfigError("solve: variant " + to_string(config.variant) + " needs a " + to_string(mode) +
                        " problem");
  if (mode == ManifoldMode::riemannian && !(orthonormality_error(x0) <= kOrthonormalityTol))
    throw DomainError("solve: x0 is not orthonormal");

  bool bounded = true;
  double bound = 0.0;
  for (const auto& p : problems) {
    if (p.ul_bound) bound += *p.ul_bound;
    else bounded = false;
  }

  SolveResult result;
  result.x = x0;
  result.y.assign(y0.begin(), y0.end());
  RunTrace& trace = result.trace;
  const auto start = std::chrono::steady_clock::now();
  const std::vector<Mat> y_init(y0.begin(), y0.end());

  double prev_ul = 0.0;
  int quiet = 0;
  for (int t = 0; t < config.outer_iters; ++t) {
    try {
      OuterRecord rec;
      rec.outer_idx = t;
      Mat hyper = Mat::Zero(result.x.rows(), result.x.cols());
      std::vector<Mat> finals;
      finals.reserve(problems.size());
      double residual_sq = 0.0;
      for (std::size_t v = 0; v < problems.size(); ++v) {
        const BilevelProblem& p = problems[v];
        const Mat& start_y = config.warm_start ? result.y[v] : y_init[v];
        const InnerTrajectory traj = run_inner(p, result.x, start_y, config);
        for (std::size_t k = 0; k < traj.size(); ++k) {
          trace.inner.push_back({t, static_cast<int>(k), static_cast<int>(v), traj.steps[k].phase,
                                 traj.steps[k].s_u, traj.steps[k].s_l, traj.ll_values[k], traj.ul_values[k]});
          rec.y_orthonormality_max = std::max(rec.y_orthonormality_max, orthonormality_error(traj.points[k + 1]));
        }
        hyper += hypergradient(p, result.x, traj, config.hypergrad_mode, config.retraction_adjoint);
        const Mat& yk = traj.final_point();
        rec.ll_final_value += p.ll_value(result.x, yk);
        Mat g_ll = sign_of(p) * p.egrad_y_ll(result.x, yk);
        if (mode == ManifoldMode::riemannian) g_ll = frame::project(yk, g_ll);
        residual_sq += g_ll.squaredNorm();
        finals.push_back(yk);
      }
      rec.ll_residual = std::sqrt(residual_sq);
      rec.hypergrad_norm = hyper.norm();
      result.x = outer_step(mode, result.x, hyper, config.lambda_outer);
      result.y = std::move(finals);

      for (std::size_t v = 0; v < problems.size(); ++v) rec.ul_value += problems[v].ul_value(result.x, result.y[v]);
      if (bounded) rec.ul_dval = bound - rec.ul_value;
      rec.x_orthonormality = orthonormality_error(result.x);
      rec.wall_time_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      if (!std::isfinite(rec.ul_value)) throw NumericalFailure("non-finite UL value", static_cast<std::size_t>(t));
      trace.outer.push_back(rec);

      if (t > 0 && std::abs(rec.ul_value - prev_ul) < config.tol_outer) {
        if (++quiet >= 5) break;
      } else {
        quiet = 0;
      }
      prev_ul = rec.ul_value;
    } catch (const Error& e) {
      throw SolveAborted("solve aborted at outer iteration " + std::to_string(t) + ": " + e.what(),
                         std::move(trace));
    }
  }
  return result;
}

SolveResult solve(const BilevelProblem& problem, const SolverConfig& config, const Mat& x0, const Mat& y0) {
  return solve(std::span<const BilevelProblem>(&problem, 1), config, x0, std::span<const Mat>(&y0, 1));
}

}  // namespace rblo
