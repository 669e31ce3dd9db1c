#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "sanc/plant.hpp"

using namespace sanc;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double a : v) x[k++] = a;
  return x;
}

/// Delta_1 = x1^2 bounded by 1 * |x1|: violates the bound for |x1| > 1.
struct QuadraticDisturbancePlant : Section4Plant {
  double disturbance(int i, std::span<const double> x, double) const { return i == 0 ? x[0] * x[0] : 0.0; }
  std::vector<double> p_star() const { return {1.0, 0.0}; }
};

/// Section4 with every disturbance removed.
struct NoDisturbancePlant : Section4Plant {
  double disturbance(int, std::span<const double>, double) const { return 0.0; }
};

}  // namespace

TEST(Drift, ZeroAtOrigin) {
  const Section4Plant s4;
  const Vector d = drift(s4, Vector::Zero(2), 0.0, 3.0);
  EXPECT_EQ(d.norm(), 0.0);
  EXPECT_EQ(diffusion(s4, Vector::Zero(2)).norm(), 0.0);
}

TEST(Drift, Section4FirstComponent) {
  const Section4Plant s4;
  EXPECT_NEAR(drift(s4, vec({1.0, 0.0}), 0.0, 0.0)[0], std::sin(1.0), 1e-15);
  EXPECT_NEAR(std::sin(1.0), 0.8415, 1e-4);
}

TEST(Drift, LastComponentUsesInput) {
  const Section4Plant s4;
  const double x1 = 0.3, x2 = -0.2, u = 1.7;
  const double expected = (1 + 0.5 * std::sin(x1)) * u + 0.02 * x2 + x2 * std::cos(x2);
  EXPECT_NEAR(drift(s4, vec({x1, x2}), u, 0.4)[1], expected, 1e-15);
}

TEST(Drift, RemarkAtOrigin) {
  const Remark1Plant r1;
  EXPECT_EQ(drift(r1, Vector::Zero(2), 0.0, 0.0)[0], 0.0);
}

TEST(Drift, SwitchesDropDisturbanceAndNoise) {
  const Section4Plant s4;
  const Vector x = vec({1.0, 2.0});
  const TruthSwitches off{false, false};
  EXPECT_NEAR(drift(s4, x, 0.0, 1.0, off)[0], 2.0 + std::sin(1.0), 1e-15);
  EXPECT_EQ(diffusion(s4, x, off).norm(), 0.0);
}

TEST(Diffusion, Section4Rows) {
  const Section4Plant s4;
  const double pi = std::numbers::pi;
  EXPECT_NEAR(diffusion(s4, vec({pi, 0.0}))(0, 0), -pi, 1e-15);
  EXPECT_NEAR(diffusion(s4, vec({0.0, pi / 2}))(1, 0), 1.0, 1e-15);
  const Matrix g = diffusion(s4, vec({0.5, 0.5}));
  EXPECT_EQ(g.rows(), 2);
  EXPECT_EQ(g.cols(), 1);
}

TEST(Section4, TableEntries) {
  const Section4Plant s4;
  const std::vector<double> x{std::numbers::pi / 2, 1.0};
  EXPECT_DOUBLE_EQ(s4.g<double>(1, x), 1.5);
  EXPECT_DOUBLE_EQ(s4.g<double>(0, x), 1.0);
  for (double t : {0.0, 1.0, 7.5}) EXPECT_EQ(s4.disturbance(1, x, t), 0.0);
  EXPECT_EQ(s4.p_star()[0], 0.5);
}

TEST(Section4, StructuralZeros) {
  const Section4Plant s4;
  const std::vector<double> zero{0.0, 0.0};
  for (int i = 0; i < 2; ++i) {
    EXPECT_EQ(s4.f<double>(i, zero), 0.0);
    for (double v : s4.psi(i, zero)) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(s4.disturbance_envelope<double>(i, zero), 0.0);
    for (double v : s4.psi_envelope<double>(i, zero)) EXPECT_EQ(v, 0.0);
  }
}

TEST(Section4, DisturbanceEnvelopeSampled) {
  const Section4Plant s4;
  auto rng = derive_stream(8, 0);
  for (int k = 0; k < 10000; ++k) {
    const std::vector<double> x{-3 + 6 * rng.next_uniform(), -3 + 6 * rng.next_uniform()};
    const double t = 20 * rng.next_uniform();
    ASSERT_LE(std::abs(s4.disturbance(0, x, t)), 0.5 * std::abs(x[0]) + 1e-15);
  }
}

TEST(Remark1, BoundConstants) {
  const Remark1Plant r1;
  EXPECT_DOUBLE_EQ(r1.p_star()[0], 0.2);
  EXPECT_DOUBLE_EQ(r1.p_star()[1], 0.4);
  const std::vector<double> x{1.0, 0.0};
  EXPECT_DOUBLE_EQ(r1.g<double>(0, x), 2.0);
  EXPECT_EQ(r1.disturbance(1, x, 3.0), 0.0);
}

TEST(Assumptions, BothPresetsPass) {
  auto rng = derive_stream(6, 0);
  const Section4Plant s4;
  const auto a = check_assumptions(s4, s4.default_box(), 10000, rng);
  EXPECT_TRUE(a.pass);
  EXPECT_GE(a.min_abs_gain, 0.5);
  const Remark1Plant r1;
  const auto b = check_assumptions(r1, r1.default_box(), 10000, rng);
  EXPECT_TRUE(b.pass);
  EXPECT_GE(b.min_abs_gain, 0.5);
}

TEST(Assumptions, QuadraticDisturbanceFails) {
  auto rng = derive_stream(6, 1);
  const QuadraticDisturbancePlant p;
  const auto rep = check_assumptions(p, {{-3.0, 3.0}, {-3.0, 3.0}}, 10000, rng);
  EXPECT_FALSE(rep.pass);
  EXPECT_GT(rep.disturbance_ratio[0], 2.5);
  EXPECT_LE(rep.disturbance_ratio[0], 3.0);
}

TEST(Assumptions, NoDisturbancePasses) {
  auto rng = derive_stream(6, 2);
  const NoDisturbancePlant p;
  EXPECT_TRUE(check_assumptions(p, {{-3.0, 3.0}, {-3.0, 3.0}}, 1000, rng).pass);
}

TEST(Truth, PerStepVectors) {
  const Section4Plant s4;
  EXPECT_EQ(truth_p(s4, 1), (std::vector<double>{0.5, 0.0}));
  EXPECT_EQ(truth_vartheta(s4, 0), (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(truth_vartheta(s4, 1), (std::vector<double>{0.0, 0.02}));
}
