#include <gtest/gtest.h>

#include <cmath>

#include "rblo/fdcheck.hpp"

using namespace rblo;
using namespace rblo::fdcheck;

TEST(Directional, ExactOnQuadraticLine) {
  Mat x(2, 1), d(2, 1);
  x << 1, 2;
  d << 3, -1;
  auto f = [](const Mat& m) { return m.squaredNorm(); };
  EXPECT_NEAR(directional(f, x, d, 1e-3), 2.0 * (x.array() * d.array()).sum(), 1e-9);
}

TEST(Jvp, LinearMapIsExact) {
  Rng rng(1);
  const Mat a = rng.normal_matrix(3, 3), x = rng.normal_matrix(3, 2), d = rng.normal_matrix(3, 2);
  EXPECT_LT((jvp([&](const Mat& m) -> Mat { return a * m; }, x, d, 1e-4) - a * d).norm(), 1e-9);
}

TEST(RelErr, UsesFloor) {
  EXPECT_NEAR(rel_err(1.1, 1.0), 0.1 / 1.1, 1e-15);
  EXPECT_DOUBLE_EQ(rel_err(1e-20, 0.0), 1e-20 / 1e-12);
  EXPECT_DOUBLE_EQ(rel_err(Mat::Ones(2, 2), Mat::Zero(2, 2), 1.0), 1.0);
  EXPECT_DOUBLE_EQ(rel_err(Mat::Constant(1, 1, 0.25), Mat::Zero(1, 1), 1.0), 0.25);
}

TEST(LoglogSlope, RecoversPowerLaw) {
  std::vector<double> t, e;
  for (int i = 1; i <= 6; ++i) {
    t.push_back(std::pow(10.0, -i));
    e.push_back(3.0 * std::pow(t.back(), 2.0));
  }
  EXPECT_NEAR(loglog_slope(t, e), 2.0, 1e-12);
}

TEST(CheckSuite, AllRowsPass) {
  const auto rows = run_check_suite();
  ASSERT_FALSE(rows.empty());
  for (const auto& r : rows) EXPECT_TRUE(r.pass) << r.name << " err=" << r.max_rel_err << " tol=" << r.tolerance;
}

TEST(CheckSuite, CorruptedGradientIsCaught) {
  CheckOptions opt;
  opt.corrupt_gradient = true;
  bool any_fail = false;
  for (const auto& r : run_check_suite(opt)) any_fail |= !r.pass;
  EXPECT_TRUE(any_fail);
}
