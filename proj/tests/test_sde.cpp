#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "sanc/rng.hpp"
#include "sanc/sde.hpp"

using namespace sanc;

namespace {

SdeSystem scalar_system(double a, double b) {
  SdeSystem sys;
  sys.state_dim = 1;
  sys.noise_dim = 1;
  sys.drift = [a](const Vector& x, double) { return Vector(a * x); };
  sys.diffusion = [b](const Vector&, double) { return Matrix::Constant(1, 1, b); };
  return sys;
}

}  // namespace

TEST(Stream, SameSeedAndIndexRepeat) {
  auto a = derive_stream(42, 0);
  auto b = derive_stream(42, 0);
  for (int k = 0; k < 100; ++k) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Stream, DistinctIndicesDiffer) {
  auto a = derive_stream(42, 0);
  auto b = derive_stream(42, 1);
  int same = 0;
  for (int k = 0; k < 100; ++k) same += a.next_u64() == b.next_u64();
  EXPECT_EQ(same, 0);
}

TEST(Stream, ZeroSeedStillSeparatesRuns) {
  EXPECT_NE(derive_stream(0, 0).key(), derive_stream(0, 1).key());
  EXPECT_NE(derive_stream(0, 0).key(), derive_stream(1, 0).key());
  EXPECT_NE(derive_stream(1, 2).key(), derive_stream(2, 1).key());
}

TEST(Stream, GoldenFirstDraw) {
  EXPECT_EQ(derive_stream(42, 7).next_u64(), 14385618233475265895ULL);
  auto s = derive_stream(42, 7);
  EXPECT_DOUBLE_EQ(s.next_normal(), 1.1127602978258508);
}

TEST(Stream, UniformRange) {
  auto s = derive_stream(1, 2);
  for (int k = 0; k < 10000; ++k) {
    const double u = s.next_uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(Wiener, RejectsBadArguments) {
  auto s = derive_stream(0, 0);
  EXPECT_THROW(wiener_increments(s, 1, 10, 0.0), std::invalid_argument);
  EXPECT_THROW(wiener_increments(s, 1, 10, -1e-3), std::invalid_argument);
  EXPECT_THROW(wiener_increments(s, 0, 10, 1e-3), std::invalid_argument);
}

TEST(Wiener, CountMatchesHorizon) {
  auto s = derive_stream(0, 0);
  const auto path = wiener_increments(s, 2, step_count(5.0, 1e-3), 1e-3);
  EXPECT_EQ(path.steps(), 5000u);
  EXPECT_NEAR(static_cast<double>(path.steps()) * path.dt, 5.0, 1e-3);
  EXPECT_EQ(path.increments.front().size(), 2);
}

TEST(Wiener, VarianceMeanAndIndependence) {
  const double dt = 1e-3;
  const std::size_t n = 1000000;
  auto s = derive_stream(9, 0);
  const auto path = wiener_increments(s, 2, n, dt);
  double sum[2] = {}, sq[2] = {}, cross = 0.0;
  for (const auto& dw : path.increments) {
    for (int j = 0; j < 2; ++j) {
      sum[j] += dw[j];
      sq[j] += dw[j] * dw[j];
    }
    cross += dw[0] * dw[1];
  }
  const double m = static_cast<double>(n);
  for (int j = 0; j < 2; ++j) {
    const double mean = sum[j] / m;
    const double var = sq[j] / m - mean * mean;
    EXPECT_LT(std::abs(mean), 5.0 * std::sqrt(dt / m));
    EXPECT_GE(var, 0.95e-3);
    EXPECT_LE(var, 1.05e-3);
  }
  const double rho = (cross / m) / std::sqrt((sq[0] / m) * (sq[1] / m));
  EXPECT_LT(std::abs(rho), 0.01);
}

TEST(EmStep, ZeroCoefficientsAreIdentity) {
  Vector x(3);
  x << 1.0, -2.0, 3.0;
  const Vector next = em_step(x, Vector::Zero(3), Matrix::Zero(3, 2), 0.1, Vector::Ones(2));
  EXPECT_EQ(next, x);
}

TEST(EmStep, ConstantDrift) {
  Vector x(2);
  x << 0.25, -1.0;
  const Vector next = em_step(x, Vector::Ones(2), Matrix::Zero(2, 1), 0.5, Vector::Zero(1));
  EXPECT_DOUBLE_EQ(next[0], 0.75);
  EXPECT_DOUBLE_EQ(next[1], -0.5);
}

TEST(EmStep, ScalarArithmetic) {
  const auto sys = scalar_system(2.0, 1.0);
  Vector x(1);
  x << 1.0;
  Vector dw(1);
  dw << 0.3;
  EXPECT_DOUBLE_EQ(em_step(x, sys, 0.0, 0.1, dw)[0], 1.5);
}

TEST(EmStep, NonFiniteSignalsDivergence) {
  Vector x(1);
  x << 1.0;
  Vector drift(1);
  drift << std::numeric_limits<double>::infinity();
  try {
    em_step(x, drift, Matrix::Zero(1, 1), 0.1, Vector::Zero(1), 17);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), 17u);
  }
}

TEST(Simulate, DecayMatchesClosedForm) {
  const auto sys = scalar_system(-1.0, 0.0);
  auto s = derive_stream(0, 0);
  Vector x0(1);
  x0 << 1.0;
  const auto rec = simulate(sys, x0, 5.0, 1e-4, s);
  ASSERT_EQ(rec.size(), 50001u);
  EXPECT_NEAR(rec.states.back()[0], std::exp(-5.0), 1e-2);
  EXPECT_FALSE(rec.diverged);
}

TEST(Simulate, EulerErrorIsFirstOrder) {
  const auto sys = scalar_system(-1.0, 0.0);
  Vector x0(1);
  x0 << 1.0;
  auto err = [&](double dt) {
    auto s = derive_stream(0, 0);
    return std::abs(simulate(sys, x0, 1.0, dt, s).states.back()[0] - std::exp(-1.0));
  };
  const double ratio = err(1e-2) / err(5e-3);
  EXPECT_NEAR(ratio, 2.0, 0.1);
}

TEST(Simulate, ZeroDynamicsConstant) {
  const auto sys = scalar_system(0.0, 0.0);
  auto s = derive_stream(0, 0);
  Vector x0(1);
  x0 << 0.7;
  const auto rec = simulate(sys, x0, 1.0, 1e-2, s);
  for (const auto& x : rec.states) EXPECT_EQ(x[0], 0.7);
}

TEST(Simulate, SameSeedBitwiseIdentical) {
  const auto sys = scalar_system(-0.5, 0.3);
  Vector x0(1);
  x0 << 1.0;
  auto a = derive_stream(3, 4);
  auto b = derive_stream(3, 4);
  const auto ra = simulate(sys, x0, 2.0, 1e-3, a);
  const auto rb = simulate(sys, x0, 2.0, 1e-3, b);
  ASSERT_EQ(ra.size(), rb.size());
  for (std::size_t k = 0; k < ra.size(); ++k) ASSERT_EQ(ra.states[k][0], rb.states[k][0]);
}

TEST(Simulate, DivergenceKeepsPartialRecord) {
  const auto sys = scalar_system(50.0, 0.0);
  auto s = derive_stream(0, 0);
  Vector x0(1);
  x0 << 1.0;
  const auto rec = simulate(sys, x0, 10.0, 1e-2, s);
  EXPECT_TRUE(rec.diverged);
  EXPECT_GT(rec.size(), 1u);
  EXPECT_LT(rec.size(), 1001u);
  EXPECT_TRUE(rec.consistent());
  for (const auto& x : rec.states) EXPECT_TRUE(x.allFinite());
}

TEST(Simulate, StepLimit) {
  EXPECT_THROW(step_count(1e9, 1.0), std::invalid_argument);
  EXPECT_EQ(step_count(20.0, 1e-3), 20000u);
}

TEST(Record, ChannelLookup) {
  TrajectoryRecord rec;
  rec.times = {0.0, 1.0};
  rec.states = {Vector::Zero(1), Vector::Zero(1)};
  const auto k = rec.add_channel("Vx");
  rec.channels[k] = {0.0, 1.0};
  EXPECT_TRUE(rec.consistent());
  EXPECT_EQ(rec.channel("Vx")[1], 1.0);
  EXPECT_THROW(rec.channel("nope"), std::out_of_range);
  rec.channels[k].pop_back();
  EXPECT_FALSE(rec.consistent());
}
