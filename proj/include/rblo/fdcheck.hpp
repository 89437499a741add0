#pragma once

// Finite-difference oracles. They only evaluate values (or first-order maps
// for HVP checks), never the analytic derivative being validated.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rblo/bilevel.hpp"

namespace rblo::fdcheck {

using ScalarFn = std::function<double(const Mat&)>;
using MatrixFn = std::function<Mat(const Mat&)>;

enum class Curve { line, qr_retraction };

/// Central difference of f along t ↦ x + t·d (line) or qf(x + t·d) (retraction).
double directional(const ScalarFn& f, const Mat& x, const Mat& d, double h, Curve curve = Curve::line);

/// Central difference (g(x + h·d) − g(x − h·d)) / 2h.
Mat jvp(const MatrixFn& g, const Mat& x, const Mat& d, double h);

/// |a − b| / max(|a|, |b|, floor).
double rel_err(double approx, double exact, double floor = 1e-12);
/// ‖A − B‖_F / max(‖A‖_F, ‖B‖_F, floor).
double rel_err(const Mat& approx, const Mat& exact, double floor = 1e-12);

/// Least-squares slope of log(err) against log(t).
double loglog_slope(const std::vector<double>& t, const std::vector<double>& err);

/// Desk-scale hypergradient oracle: compares ⟨hypergradient, ξ⟩ with central
/// differences of φ_K along `directions`, re-running the inner loop from the
/// same y0 with the step schedule frozen. Returns the per-direction relative errors.
std::vector<double> hypergradient_errors(const BilevelProblem& problem, const Mat& x, const Mat& y0,
                                         const SolverConfig& config, const std::vector<Mat>& directions,
                                         double h = 1e-5);

struct CheckRow {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct CheckOptions {
  std::uint64_t seed = 7;
  /// Test hook: scales the LL gradient fed to the gradient checks by (1 + 1e-3).
  bool corrupt_gradient = false;
};

/// Every numerical validation: gradients, HVPs, hypergradients, retraction order.
std::vector<CheckRow> run_check_suite(const CheckOptions& options = {});

}  // namespace rblo::fdcheck
