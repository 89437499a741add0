#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "rblo/bilevel.hpp"
#include "rblo/dataio.hpp"
#include "rblo/fdcheck.hpp"
#include "rblo/mvhsc.hpp"

using namespace rblo;

namespace {

/// f = ½‖y − c‖², F ≡ 0 (minimization, euclidean).
BilevelProblem pull_to(const Mat& c) {
  BilevelProblem p;
  p.ll_value = [c](const Mat&, const Mat& y) { return 0.5 * (y - c).squaredNorm(); };
  p.ul_value = [](const Mat&, const Mat&) { return 0.0; };
  p.egrad_y_ll = [c](const Mat&, const Mat& y) -> Mat { return y - c; };
  p.egrad_y_ul = [](const Mat&, const Mat& y) -> Mat { return Mat::Zero(y.rows(), y.cols()); };
  p.egrad_x_ul = [](const Mat& x, const Mat&) -> Mat { return Mat::Zero(x.rows(), x.cols()); };
  p.hvp_yy_ll = [](const Mat&, const Mat&, const Mat& v) -> Mat { return v; };
  p.hvp_yy_ul = [](const Mat&, const Mat&, const Mat& v) -> Mat { return Mat::Zero(v.rows(), v.cols()); };
  p.hvp_xy_ll = [](const Mat& x, const Mat&, const Mat&) -> Mat { return Mat::Zero(x.rows(), x.cols()); };
  p.hvp_xy_ul = p.hvp_xy_ll;
  return p;
}

Mat random_psd(int n, Rng& rng) {
  const Mat g = rng.normal_matrix(n, n);
  Mat t = g * g.transpose();
  return t / t.norm();
}

dataio::SynthProblem quadratic(std::uint64_t seed, ManifoldMode mode = ManifoldMode::euclidean) {
  dataio::SynthSpec spec;
  spec.seed = seed;
  spec.manifold = mode;
  return dataio::synth_bilevel(spec);
}

}  // namespace

/* ---------------------------------------------------------------------- */

TEST(SolverConfig, DefaultsAndValidation) {
  SolverConfig c;
  EXPECT_EQ(c.variant, Variant::FBDA);
  EXPECT_EQ(c.mu, 0.5);
  EXPECT_EQ(c.k1, 20);
  EXPECT_EQ(c.k2, 10);
  EXPECT_EQ(c.inner_steps(), 30);
  EXPECT_NO_THROW(c.validate());
  c.mu = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.k2 = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.bb_clamp = {1.0, 0.5};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Variants, ModesAndSchedules) {
  EXPECT_EQ(variant_mode(Variant::BDA), ManifoldMode::euclidean);
  EXPECT_EQ(variant_mode(Variant::B3DA), ManifoldMode::euclidean);
  EXPECT_EQ(variant_mode(Variant::BDAG), ManifoldMode::riemannian);
  EXPECT_EQ(variant_mode(Variant::FBDA), ManifoldMode::riemannian);
  EXPECT_FALSE(variant_uses_bb(Variant::BDA));
  EXPECT_FALSE(variant_uses_bb(Variant::BDAG));
  EXPECT_TRUE(variant_uses_bb(Variant::B3DA));
  EXPECT_TRUE(variant_uses_bb(Variant::FBDA));
  EXPECT_EQ(parse_variant("b3da"), Variant::B3DA);
  EXPECT_THROW(parse_variant("sgd"), ConfigError);
}

/* ---------------------------------------------------------------------- */

TEST(AggregateStep, EndpointsOfTheCombination) {
  Rng rng(1);
  const auto s = quadratic(3);
  const Mat x = rng.normal_matrix(4, 2), y = rng.normal_matrix(6, 2);
  const Mat ll_only = aggregate_step(s.problem, x, y, 0.3, 0.7, 0.0);
  EXPECT_LT((ll_only - (y - 0.7 * s.problem.egrad_y_ll(x, y))).norm(), 1e-14);
  const Mat ul_only = aggregate_step(s.problem, x, y, 0.3, 0.7, 1.0);
  EXPECT_LT((ul_only - (y - 0.3 * s.problem.egrad_y_ul(x, y))).norm(), 1e-14);
}

TEST(AggregateStep, ExactStepOnIsotropicQuadratic) {
  Rng rng(2);
  const Mat c = rng.normal_matrix(5, 2);
  const Mat y = aggregate_step(pull_to(c), Mat::Zero(1, 1), rng.normal_matrix(5, 2), 1.0, 1.0, 0.0);
  EXPECT_LT((y - c).norm(), 1e-14);
}

TEST(AggregateStep, RiemannianStepStaysOnManifold) {
  Rng rng(3);
  const auto view = mvhsc::CoupledView::of(random_psd(8, rng), 1.0);
  const auto p = mvhsc::make_problem(view, 3, ManifoldMode::riemannian);
  const Mat x = random_point(8, 3, rng).data(), y = random_point(8, 3, rng).data();
  EXPECT_LE(orthonormality_error(aggregate_step(p, x, y, 2.0, 2.0, 0.5)), kOrthonormalityTol);
}

TEST(AggregateStep, NonFiniteGradientReportsIteration) {
  auto p = pull_to(Mat::Zero(2, 1));
  p.egrad_y_ll = [](const Mat&, const Mat& y) -> Mat {
    return Mat::Constant(y.rows(), y.cols(), std::numeric_limits<double>::quiet_NaN());
  };
  try {
    aggregate_step(p, Mat::Zero(1, 1), Mat::Ones(2, 1), 1.0, 1.0, 0.5, 17);
    FAIL() << "expected NumericalFailure";
  } catch (const NumericalFailure& e) {
    EXPECT_EQ(e.iteration(), 17u);
  }
}

/* ---------------------------------------------------------------------- */

TEST(BbStepsizes, IsotropicQuadraticGivesItsCurvature) {
  // f = (a/2)‖y‖² has ∇f = a y, so ⟨Δy, Δg⟩/‖Δy‖² = a for any pair of iterates.
  Rng rng(4);
  const double a = 2.0;
  const Mat y = rng.normal_matrix(4, 2), yp = rng.normal_matrix(4, 2);
  const auto r = bb_stepsizes(ManifoldMode::euclidean, y, yp, a * y, a * yp, a * y, a * yp, {});
  EXPECT_NEAR(r.s_u, 2.0, 1e-14);
  EXPECT_NEAR(r.s_l, 2.0, 1e-14);
  EXPECT_FALSE(r.stagnation);
  const auto inv = bb_stepsizes(ManifoldMode::euclidean, y, yp, a * y, a * yp, a * y, a * yp, {}, true);
  EXPECT_NEAR(inv.s_l, 0.5, 1e-14);
}

TEST(BbStepsizes, OrthogonalOrFlatFallsBackToMinimum) {
  Mat y(2, 1), yp(2, 1), g(2, 1), gp(2, 1);
  y << 1, 0;
  yp << 0, 0;
  g << 0, 1;  // Δg ⟂ Δy
  gp << 0, 0;
  BbClamp clamp{1e-6, 1e2};
  auto r = bb_stepsizes(ManifoldMode::euclidean, y, yp, g, gp, gp, gp, clamp);
  EXPECT_EQ(r.s_u, clamp.s_min);
  EXPECT_EQ(r.s_l, clamp.s_min);  // constant gradient
  r = bb_stepsizes(ManifoldMode::euclidean, y, yp, -y, yp, y, yp, clamp);  // negative curvature
  EXPECT_EQ(r.s_u, clamp.s_min);
}

TEST(BbStepsizes, ClampedAboveAndStagnationMidpoint) {
  Mat y = Mat::Ones(2, 1), yp = Mat::Zero(2, 1);
  auto r = bb_stepsizes(ManifoldMode::euclidean, y, yp, 1e6 * y, yp, y, yp, {1e-6, 1e2});
  EXPECT_EQ(r.s_u, 1e2);
  EXPECT_EQ(r.s_l, 1.0);
  r = bb_stepsizes(ManifoldMode::euclidean, y, y, y, yp, y, yp, {1.0, 3.0});
  EXPECT_TRUE(r.stagnation);
  EXPECT_EQ(r.s_u, 2.0);
  EXPECT_EQ(r.s_l, 2.0);
}

TEST(BbStepsizes, RiemannianTransportsPreviousGradient) {
  // The previous gradient is projected to the tangent space at y before differencing.
  Rng rng(5);
  const Mat y = random_point(5, 2, rng).data(), yp = random_point(5, 2, rng).data();
  const Mat g = frame::project(y, rng.normal_matrix(5, 2)), gp = frame::project(yp, rng.normal_matrix(5, 2));
  const auto r = bb_stepsizes(ManifoldMode::riemannian, y, yp, g, gp, g, gp, {1e-300, 1e300});
  const Mat dy = y - yp;
  const double expected = (dy.array() * (g - frame::project(y, gp)).array()).sum() / dy.squaredNorm();
  if (expected > 0) {
    EXPECT_NEAR(r.s_u, expected, 1e-12);
  }
  else EXPECT_EQ(r.s_u, 1e-300);
}

/* ---------------------------------------------------------------------- */

TEST(DiminishingStepsizes, Schedule) {
  EXPECT_EQ(diminishing_stepsizes(0, 0.3, 0.7, 0.5), std::make_pair(0.3, 0.7));
  const auto [su, sl] = diminishing_stepsizes(9, 0.1, 0.4, 0.5);
  EXPECT_NEAR(su, 0.01, 1e-17);
  EXPECT_EQ(sl, 0.4);
  double prev = 1.0, sum = 0.0;
  for (int j = 0; j < 1000; ++j) {
    const double a = diminishing_stepsizes(j, 1.0, 1.0, 0.5).first;
    EXPECT_LE(a, prev);
    prev = a;
    sum += a;
  }
  EXPECT_GT(sum, 7.0);  // harmonic partial sum H_1000 ≈ 7.49
}

/* ---------------------------------------------------------------------- */

TEST(RunInner, FbdaStoresThirtySteps) {
  Rng rng(6);
  const auto view = mvhsc::CoupledView::of(random_psd(8, rng), 1.0);
  const auto p = mvhsc::make_problem(view, 2, ManifoldMode::riemannian);
  SolverConfig c;
  const auto t = run_inner(p, random_point(8, 2, rng).data(), random_point(8, 2, rng).data(), c);
  ASSERT_EQ(t.size(), 30u);
  EXPECT_EQ(t.points.size(), 31u);
  for (std::size_t k = 0; k < 30; ++k) EXPECT_EQ(t.steps[k].phase, k < 20 ? Phase::bb : Phase::diminishing);
  EXPECT_EQ(t.steps[0].s_u, c.s_u);
  EXPECT_EQ(t.steps[20].s_u, c.s_u);
  EXPECT_EQ(t.steps[21].s_u, c.s_u / 2);
}

TEST(RunInner, DiminishingOnlyVariantsSkipBbPhase) {
  const auto s = quadratic(7);
  SolverConfig c;
  c.variant = Variant::BDA;
  const auto t = run_inner(s.problem, Mat::Zero(4, 2), Mat::Zero(6, 2), c);
  ASSERT_EQ(t.size(), 30u);
  for (std::size_t k = 0; k < 30; ++k) {
    EXPECT_EQ(t.steps[k].phase, Phase::diminishing);
    EXPECT_DOUBLE_EQ(t.steps[k].s_u, c.s_u / double(k + 1));
  }
}

TEST(RunInner, SingleDiminishingStep) {
  const auto s = quadratic(8);
  SolverConfig c;
  c.k1 = 0;
  c.k2 = 1;
  const auto t = run_inner(s.problem, Mat::Zero(4, 2), Mat::Zero(6, 2), c);
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.steps[0].phase, Phase::diminishing);
}

TEST(RunInner, LowerLevelGapShrinksWithK) {
  const auto s = quadratic(9);
  Rng rng(9);
  const Mat x = rng.normal_matrix(4, 2);
  double prev = std::numeric_limits<double>::infinity();
  for (int k : {10, 50, 200}) {
    SolverConfig c;
    c.variant = Variant::BDA;
    c.k1 = 0;
    c.k2 = k;
    const auto t = run_inner(s.problem, x, Mat::Zero(6, 2), c);
    const double gap = s.problem.ll_value(x, t.final_point()) - s.ll_min;
    EXPECT_LT(gap, prev) << "K = " << k;
    prev = gap;
  }
}

TEST(ReplayInner, ReproducesTrajectory) {
  const auto s = quadratic(10);
  SolverConfig c;
  c.variant = Variant::B3DA;
  Rng rng(10);
  const Mat x = rng.normal_matrix(4, 2), y0 = rng.normal_matrix(6, 2);
  const auto t = run_inner(s.problem, x, y0, c);
  const auto r = replay_inner(s.problem, x, y0, t.steps, c.mu);
  EXPECT_EQ(r.final_point(), t.final_point());
}

/* ---------------------------------------------------------------------- */

TEST(Hypergradient, TruncatedEqualsReverseWhenUpperIgnoresY) {
  Rng rng(11);
  const auto view = mvhsc::CoupledView::of(random_psd(7, rng), 1.0);
  auto p = mvhsc::make_problem(view, 2, ManifoldMode::riemannian);
  // F(x, y) = tr(xᵀ B x) does not depend on y.
  const Mat b = random_psd(7, rng);
  p.ul_value = [b](const Mat& x, const Mat&) { return (x.transpose() * b * x).trace(); };
  p.egrad_y_ul = [](const Mat&, const Mat& y) -> Mat { return Mat::Zero(y.rows(), y.cols()); };
  p.egrad_x_ul = [b](const Mat& x, const Mat&) -> Mat { return 2.0 * b * x; };
  p.hvp_yy_ul = [](const Mat&, const Mat&, const Mat& v) -> Mat { return Mat::Zero(v.rows(), v.cols()); };
  p.hvp_xy_ul = [](const Mat& x, const Mat&, const Mat&) -> Mat { return Mat::Zero(x.rows(), x.cols()); };
  SolverConfig c;
  const Mat x = random_point(7, 2, rng).data();
  const auto t = run_inner(p, x, random_point(7, 2, rng).data(), c);
  const Mat rev = hypergradient(p, x, t, HypergradMode::reverse_sweep);
  const Mat tr = hypergradient(p, x, t, HypergradMode::truncated);
  EXPECT_LT((rev - tr).norm(), 1e-14);
  EXPECT_LT((tr - frame::project(x, -2.0 * b * x)).norm(), 1e-13);  // maximization: descent sense is −∇F
}

TEST(Hypergradient, MatchesFiniteDifferencesOnDeskInstance) {
  Rng rng(12);
  const auto view = mvhsc::CoupledView::of(random_psd(6, rng), 1.0);
  std::vector<Mat> dirs;
  for (int i = 0; i < 5; ++i) dirs.push_back(rng.normal_matrix(6, 2));
  for (Variant v : {Variant::FBDA, Variant::BDAG, Variant::B3DA, Variant::BDA}) {
    SolverConfig c;
    c.variant = v;
    c.k1 = 3;
    c.k2 = 2;
    const auto p = mvhsc::make_problem(view, 2, variant_mode(v));
    const auto errs = fdcheck::hypergradient_errors(p, random_point(6, 2, rng).data(),
                                                    random_point(6, 2, rng).data(), c, dirs);
    for (double e : errs) EXPECT_LE(e, 1e-3) << to_string(v);
  }
}

TEST(Hypergradient, ProjectionAdjointIsAnApproximation) {
  Rng rng(13);
  const auto view = mvhsc::CoupledView::of(random_psd(6, rng), 1.0);
  const auto p = mvhsc::make_problem(view, 2, ManifoldMode::riemannian);
  SolverConfig c;
  c.k1 = 3;
  c.k2 = 2;
  const Mat x = random_point(6, 2, rng).data();
  const auto t = run_inner(p, x, random_point(6, 2, rng).data(), c);
  const Mat exact = hypergradient(p, x, t, HypergradMode::reverse_sweep, RetractionAdjoint::exact);
  const Mat approx = hypergradient(p, x, t, HypergradMode::reverse_sweep, RetractionAdjoint::projection);
  EXPECT_LT((exact - approx).norm(), 0.5 * exact.norm());
  EXPECT_LT((x.transpose() * approx).norm(), 1e-12);
}

TEST(Hypergradient, RejectsForeignTrajectory) {
  const auto s = quadratic(14);
  SolverConfig c;
  c.variant = Variant::BDA;
  const auto t = run_inner(s.problem, Mat::Zero(4, 2), Mat::Zero(6, 2), c);
  EXPECT_THROW(hypergradient(s.problem, Mat::Ones(4, 2), t, HypergradMode::reverse_sweep), DomainError);
}

/* ---------------------------------------------------------------------- */

TEST(OuterStep, StaysOrthonormal) {
  Rng rng(15);
  for (int i = 0; i < 1000; ++i) {
    const Mat x = random_point(6, 2, rng).data();
    const Mat h = frame::project(x, 5.0 * rng.normal_matrix(6, 2));
    EXPECT_LE(orthonormality_error(outer_step(ManifoldMode::riemannian, x, h, 0.7)), kOrthonormalityTol);
  }
}

TEST(OuterStep, EuclideanIsPlainStep) {
  const Mat x = Mat::Ones(3, 2), h = Mat::Constant(3, 2, 2.0);
  EXPECT_EQ(outer_step(ManifoldMode::euclidean, x, h, 0.25), Mat::Constant(3, 2, 0.5));
}

/* ---------------------------------------------------------------------- */

TEST(Solve, RecoversQuadraticOptimum) {
  dataio::SynthSpec spec;
  spec.seed = 21;
  const auto s = dataio::synth_bilevel(spec);
  ASSERT_TRUE(s.x_star.has_value());
  SolverConfig c;
  c.variant = Variant::BDA;
  c.outer_iters = 200;
  c.lambda_outer = 0.5;
  c.s_u = c.s_l = 1.0;
  const auto r = solve(s.problem, c, Mat::Zero(4, 2), Mat::Zero(6, 2));
  EXPECT_LE((r.x - *s.x_star).norm(), 1e-3);
  EXPECT_LE((r.y[0] - *s.y_star).norm(), 1e-3);
}

TEST(Solve, TraceShapesAndVariantSemantics) {
  Rng rng(22);
  const auto view = mvhsc::CoupledView::of(random_psd(10, rng), 1.0);
  for (Variant v : {Variant::BDA, Variant::BDAG, Variant::B3DA, Variant::FBDA}) {
    const auto p = mvhsc::make_problem(view, 2, variant_mode(v));
    SolverConfig c;
    c.variant = v;
    c.outer_iters = 5;
    Rng init(3);
    const Mat x0 = random_point(10, 2, init).data(), y0 = random_point(10, 2, init).data();
    const auto r = solve(p, c, x0, y0);
    ASSERT_EQ(r.trace.outer.size(), 5u);
    ASSERT_EQ(r.trace.inner.size(), 150u);
    bool bb_varies = false, all_dim = true;
    for (const auto& rec : r.trace.inner) {
      if (rec.phase == Phase::bb && rec.inner_idx > 0 && rec.s_l != c.s_l) bb_varies = true;
      if (rec.phase != Phase::diminishing) all_dim = false;
    }
    EXPECT_EQ(bb_varies, variant_uses_bb(v)) << to_string(v);
    EXPECT_EQ(all_dim, !variant_uses_bb(v)) << to_string(v);
    double worst = 0.0;
    for (const auto& o : r.trace.outer) worst = std::max({worst, o.x_orthonormality, o.y_orthonormality_max});
    if (variant_mode(v) == ManifoldMode::riemannian) {
      EXPECT_LE(worst, 1e-8) << to_string(v);
    }
    else EXPECT_GT(worst, 1e-8) << to_string(v);
    for (std::size_t t = 1; t < r.trace.outer.size(); ++t)
      EXPECT_GE(r.trace.outer[t].wall_time_ms, r.trace.outer[t - 1].wall_time_ms);
    for (const auto& o : r.trace.outer) EXPECT_GE(*o.ul_dval, -1e-12);
  }
}

TEST(Solve, ZeroOuterIterationsReturnsStart) {
  const auto s = quadratic(23);
  SolverConfig c;
  c.variant = Variant::BDA;
  c.outer_iters = 0;
  const auto r = solve(s.problem, c, Mat::Ones(4, 2), Mat::Zero(6, 2));
  EXPECT_EQ(r.x, Mat::Ones(4, 2));
  EXPECT_TRUE(r.trace.outer.empty());
}

TEST(Solve, BlocksAddHypergradients) {
  Rng rng(24);
  const auto view = mvhsc::CoupledView::of(random_psd(8, rng), 1.0);
  const auto p = mvhsc::make_problem(view, 2, ManifoldMode::riemannian);
  SolverConfig c;
  c.outer_iters = 1;
  const Mat x0 = random_point(8, 2, rng).data(), y0 = random_point(8, 2, rng).data();
  const auto one = solve(p, c, x0, y0);
  const std::vector<BilevelProblem> two{p, p};
  const std::vector<Mat> y0s{y0, y0};
  const auto both = solve(two, c, x0, y0s);
  EXPECT_NEAR(both.trace.outer[0].hypergrad_norm, 2.0 * one.trace.outer[0].hypergrad_norm, 1e-12);
  EXPECT_EQ(both.trace.inner.size(), 60u);
  EXPECT_EQ(both.trace.inner.back().view, 1);
}

TEST(Solve, RejectsMismatchedGeometry) {
  const auto s = quadratic(25);
  SolverConfig c;
  c.variant = Variant::FBDA;
  EXPECT_THROW(solve(s.problem, c, Mat::Zero(4, 2), Mat::Zero(6, 2)), ConfigError);
}

TEST(Solve, FailureCarriesPartialTrace) {
  auto s = quadratic(26);
  // The lower-level gradient turns non-finite once x leaves the starting point.
  const auto inner = s.problem.egrad_y_ll;
  s.problem.egrad_y_ll = [inner](const Mat& x, const Mat& y) -> Mat {
    if (x.norm() > 0) return Mat::Constant(y.rows(), y.cols(), std::numeric_limits<double>::infinity());
    return inner(x, y);
  };
  SolverConfig c;
  c.variant = Variant::BDA;
  c.outer_iters = 10;
  try {
    solve(s.problem, c, Mat::Zero(4, 2), Mat::Zero(6, 2));
    FAIL() << "expected SolveAborted";
  } catch (const SolveAborted& e) {
    EXPECT_EQ(e.partial_trace().outer.size(), 1u);
    EXPECT_EQ(e.partial_trace().inner.size(), 30u);
  }
}
