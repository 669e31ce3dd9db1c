#include <cmath>

#include <gtest/gtest.h>

#include "sanc/jet.hpp"

using namespace sanc;
using J = Jet<double>;

TEST(Jet, ProductRule) {
  // f(x, y) = x^2 y, Hessian over both.
  const J x = J::variable(1.5, 0, 2, 2);
  const J y = J::variable(-2.0, 1, 2, 2);
  const J f = x * x * y;
  EXPECT_DOUBLE_EQ(f.v, 1.5 * 1.5 * -2.0);
  EXPECT_DOUBLE_EQ(f.d[0], 2 * 1.5 * -2.0);
  EXPECT_DOUBLE_EQ(f.d[1], 1.5 * 1.5);
  EXPECT_DOUBLE_EQ(f.hess(0, 0), 2 * -2.0);
  EXPECT_DOUBLE_EQ(f.hess(0, 1), 2 * 1.5);
  EXPECT_DOUBLE_EQ(f.hess(1, 0), 2 * 1.5);
  EXPECT_DOUBLE_EQ(f.hess(1, 1), 0.0);
}

TEST(Jet, PartialHessianBlock) {
  // Hessian only over the first variable; gradient over both.
  const J x = J::variable(0.7, 0, 2, 1);
  const J w = J::variable(3.0, 1, 2, 1);
  const J f = w * sin(x);
  EXPECT_NEAR(f.d[0], 3.0 * std::cos(0.7), 1e-15);
  EXPECT_NEAR(f.d[1], std::sin(0.7), 1e-15);
  ASSERT_EQ(f.h.size(), 1u);
  EXPECT_NEAR(f.hess(0, 0), -3.0 * std::sin(0.7), 1e-15);
}

TEST(Jet, ElementaryFunctions) {
  const double a = 0.4;
  const J x = J::variable(a, 0, 1, 1);
  const double t = std::tanh(a);
  const J th = tanh(x);
  EXPECT_NEAR(th.d[0], 1 - t * t, 1e-15);
  EXPECT_NEAR(th.hess(0, 0), -2 * t * (1 - t * t), 1e-15);
  const J e = exp(x * 2.0);
  EXPECT_NEAR(e.hess(0, 0), 4 * std::exp(2 * a), 1e-14);
  const J c = cos(x);
  EXPECT_NEAR(c.d[0], -std::sin(a), 1e-15);
  const J p = pow(x, 4.0 / 3.0);
  EXPECT_NEAR(p.v, std::pow(a, 4.0 / 3.0), 1e-15);
  EXPECT_NEAR(p.d[0], 4.0 / 3.0 * std::pow(a, 1.0 / 3.0), 1e-15);
  EXPECT_NEAR(p.hess(0, 0), 4.0 / 9.0 * std::pow(a, -2.0 / 3.0), 1e-14);
  const J q = 1.0 / x;
  EXPECT_NEAR(q.hess(0, 0), 2.0 / (a * a * a), 1e-12);
  const J m = abs(-x);
  EXPECT_DOUBLE_EQ(m.v, a);
  EXPECT_DOUBLE_EQ(m.d[0], 1.0);
}

TEST(Jet, ConstantsCarryNoDerivatives) {
  const J c(2.0);
  const J x = J::variable(1.0, 0, 1, 1);
  EXPECT_TRUE((c * c).is_constant());
  const J s = c + x;
  EXPECT_EQ(s.d.size(), 1u);
  EXPECT_DOUBLE_EQ(s.d[0], 1.0);
  const J d = c - x;
  EXPECT_DOUBLE_EQ(d.d[0], -1.0);
}

TEST(Jet, NestedGivesThirdOrderMixed) {
  // Outer variable y over inner variable x: d/dy of (d2/dx2 of x^3 y^2).
  using JJ = Jet<J>;
  const J xin = J::variable(1.2, 0, 1, 1);
  const JJ x = JJ::variable(xin, 0, 1, 1);  // outer derivative slot also in x
  const JJ f = x * x * x;
  // outer hessian entry is 6x, carrying its own inner derivative 6
  EXPECT_NEAR(f.hess(0, 0).v, 6 * 1.2, 1e-14);
  EXPECT_NEAR(f.hess(0, 0).d[0], 6.0, 1e-14);
  EXPECT_NEAR(value_of(f), 1.2 * 1.2 * 1.2, 1e-14);
}
