#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "rblo/errors.hpp"
#include "rblo/manifold.hpp"

namespace rblo {

using Mat = Eigen::MatrixXd;

enum class ManifoldMode { euclidean, riemannian };
enum class Sense { minimize, maximize };
enum class Variant { BDA, BDAG, B3DA, FBDA };
enum class HypergradMode { reverse_sweep, truncated };
/// How the reverse sweep differentiates the QR retraction.
enum class RetractionAdjoint { exact, projection };
enum class Phase { bb, diminishing };

std::string to_string(Variant v);
std::string to_string(Phase p);
std::string to_string(ManifoldMode m);
std::string to_string(HypergradMode m);
std::string to_string(RetractionAdjoint r);
Variant parse_variant(const std::string& s);
HypergradMode parse_hypergrad_mode(const std::string& s);
RetractionAdjoint parse_retraction_adjoint(const std::string& s);

ManifoldMode variant_mode(Variant v);
bool variant_uses_bb(Variant v);

/// UL objective F(x, y) and LL objective f(x, y) with their first and second
/// order information. Gradients and HVPs are ambient Euclidean quantities in
/// the problem's own sense; the solver applies tangent projections and sign
/// flips itself.
struct BilevelProblem {
  using Value = std::function<double(const Mat& x, const Mat& y)>;
  using Grad = std::function<Mat(const Mat& x, const Mat& y)>;
  using Hvp = std::function<Mat(const Mat& x, const Mat& y, const Mat& v)>;

  Value ul_value;
  Value ll_value;
  Grad egrad_y_ul;
  Grad egrad_y_ll;
  Grad egrad_x_ul;
  Hvp hvp_yy_ul;  // ∂²F/∂y² · v
  Hvp hvp_yy_ll;
  Hvp hvp_xy_ul;  // ∂/∂x ⟨∂F/∂y, u⟩, an ambient matrix shaped like x
  Hvp hvp_xy_ll;
  ManifoldMode manifold_mode = ManifoldMode::euclidean;
  Sense sense = Sense::minimize;
  std::optional<double> ul_bound;
};

struct BbClamp {
  double s_min = 1e-6;
  double s_max = 1e2;
};

struct SolverConfig {
  Variant variant = Variant::FBDA;
  double mu = 0.5;
  int k1 = 20;
  int k2 = 10;
  double s_u = 0.25;
  double s_l = 0.25;
  double lambda_outer = 0.02;
  int outer_iters = 100;
  double beta_floor = 0.5;
  BbClamp bb_clamp;
  HypergradMode hypergrad_mode = HypergradMode::reverse_sweep;
  RetractionAdjoint retraction_adjoint = RetractionAdjoint::exact;
  double tol_outer = 0.0;  // early stop disabled at 0
  bool bb_inverse = false;  // use ‖Δy‖²/⟨Δy,Δg⟩ instead of the literal ⟨Δy,Δg⟩/‖Δy‖²
  bool warm_start = true;
  std::uint64_t seed = 0;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  int inner_steps() const { return k1 + k2; }
};

struct StepSize {
  double s_u = 0.0;
  double s_l = 0.0;
  Phase phase = Phase::diminishing;
  bool stagnation = false;
};

/// Unrolled LL iterates y_0 … y_K at a fixed x.
struct InnerTrajectory {
  Mat x;
  std::vector<Mat> points;      // K + 1 entries
  std::vector<StepSize> steps;  // K entries; steps[k] maps points[k] to points[k+1]
  std::vector<double> ll_values;  // f at points[k+1], problem sense
  std::vector<double> ul_values;  // F at points[k+1], problem sense
  ManifoldMode mode = ManifoldMode::euclidean;
  double mu = 0.5;

  std::size_t size() const { return steps.size(); }
  const Mat& final_point() const { return points.back(); }
};

/* ---------------------------------------------------------------------- */
// Single-step building blocks.

/// One aggregation step from y. In riemannian mode the aggregated direction
/// uses projected gradients and the result is QR-retracted.
Mat aggregate_step(const BilevelProblem& problem, const Mat& x, const Mat& y, double s_u, double s_l,
                   double mu, std::size_t iteration = 0);

struct BbResult {
  double s_u = 0.0;
  double s_l = 0.0;
  bool stagnation = false;
};

/// Step sizes from successive iterates and (descent-sense, Riemannian in
/// riemannian mode) gradients. g_*_prev is transported to y before differencing.
BbResult bb_stepsizes(ManifoldMode mode, const Mat& y, const Mat& y_prev, const Mat& g_ul,
                      const Mat& g_ul_prev, const Mat& g_ll, const Mat& g_ll_prev, const BbClamp& clamp,
                      bool inverse = false);

/// (s_u·α_j, s_l·β_j) with α_j = 1/(j+1) and β_j ≡ 1, j counted from the start of the phase.
std::pair<double, double> diminishing_stepsizes(int j, double s_u, double s_l, double beta_floor);

/// Runs K₁ + K₂ aggregation steps (all diminishing for BDA/BDAG).
InnerTrajectory run_inner(const BilevelProblem& problem, const Mat& x, const Mat& y0,
                          const SolverConfig& config);

/// Re-runs the inner loop with a frozen step schedule (used by finite-difference oracles).
InnerTrajectory replay_inner(const BilevelProblem& problem, const Mat& x, const Mat& y0,
                             std::span<const StepSize> steps, double mu);

/// Gradient of x ↦ F(x, y_K(x)) in the solver's descent sense (−F for
/// maximization problems), tangent at x in riemannian mode. Step sizes are
/// treated as constants.
Mat hypergradient(const BilevelProblem& problem, const Mat& x, const InnerTrajectory& trajectory,
                  HypergradMode mode, RetractionAdjoint retraction = RetractionAdjoint::exact);

/// x − λh, retracted in riemannian mode.
Mat outer_step(ManifoldMode mode, const Mat& x, const Mat& hypergrad, double lambda_outer);

/* ---------------------------------------------------------------------- */

struct InnerRecord {
  int outer_idx = 0;
  int inner_idx = 0;
  int view = 0;
  Phase phase = Phase::diminishing;
  double s_u = 0.0;
  double s_l = 0.0;
  double ll_value = 0.0;
  double ul_value = 0.0;
};

struct OuterRecord {
  int outer_idx = 0;
  double ul_value = 0.0;
  std::optional<double> ul_dval;
  double ll_final_value = 0.0;
  double ll_residual = 0.0;
  double hypergrad_norm = 0.0;
  double x_orthonormality = 0.0;      // ‖xᵀx − I‖_F after the outer step
  double y_orthonormality_max = 0.0;  // max over every stored inner iterate
  double wall_time_ms = 0.0;          // cumulative since solve() started
};

struct RunTrace {
  std::vector<InnerRecord> inner;
  std::vector<OuterRecord> outer;
};

struct SolveResult {
  Mat x;
  std::vector<Mat> y;  // one per LL block
  RunTrace trace;
};

/// Raised when an outer iteration fails; carries the trace up to the failure.
class SolveAborted : public Error {
 public:
  SolveAborted(const std::string& what, RunTrace partial)
      : Error(what), partial_(std::move(partial)) {}
  const RunTrace& partial_trace() const noexcept { return partial_; }

 private:
  RunTrace partial_;
};

/// Algorithm driver. Several LL blocks may share the UL variable x: each block
/// has its own inner loop, the UL objective is the sum of block objectives and
/// hypergradients add.
SolveResult solve(std::span<const BilevelProblem> problems, const SolverConfig& config, const Mat& x0,
                  std::span<const Mat> y0);

SolveResult solve(const BilevelProblem& problem, const SolverConfig& config, const Mat& x0, const Mat& y0);

}  // namespace rblo
