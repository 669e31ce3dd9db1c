#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "sanc/rbf.hpp"
#include "sanc/rng.hpp"

using namespace sanc;

namespace {

RbfNetwork line_network(int nodes, double lo, double hi, double width) {
  CenterLayout layout;
  layout.bounds = {{lo, hi}};
  layout.counts = {nodes};
  layout.total = nodes;
  return RbfNetwork(make_centers(layout), width, layout.bounds);
}

RbfNetwork random_network(RngStream& rng, int q, int l) {
  Eigen::MatrixXd c(l, q);
  for (int k = 0; k < l; ++k)
    for (int j = 0; j < q; ++j) c(k, j) = -2.0 + 4.0 * rng.next_uniform();
  return RbfNetwork(c, 0.5 + rng.next_uniform());
}

}  // namespace

TEST(Basis, OneAtCenter) {
  const auto net = line_network(5, -1.0, 1.0, 0.7);
  const auto s = net.basis(std::vector<double>{0.5});
  EXPECT_DOUBLE_EQ(s[3], 1.0);
}

TEST(Basis, WidthDistanceGivesInverseE) {
  const auto net = line_network(3, -0.8, 0.8, 0.8);  // center 0 in the middle
  const auto s = net.basis(std::vector<double>{0.8});
  EXPECT_NEAR(s[1], std::exp(-1.0), 1e-15);
  EXPECT_NEAR(std::exp(-1.0), 0.3679, 1e-4);
}

TEST(Basis, RangeAndMonotone) {
  auto rng = derive_stream(1, 0);
  const auto net = random_network(rng, 3, 10);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> z{-3 + 6 * rng.next_uniform(), -3 + 6 * rng.next_uniform(), -3 + 6 * rng.next_uniform()};
    for (double v : net.basis(z)) {
      ASSERT_GT(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
  const auto line = line_network(2, 0.0, 1.0, 1.0);
  double prev = 2.0;
  for (int k = 0; k <= 20; ++k) {
    const double s = line.basis(std::vector<double>{0.1 * k})[0];
    EXPECT_LT(s, prev);
    prev = s;
  }
}

TEST(Basis, DimensionMismatch) {
  const auto net = line_network(4, 0.0, 1.0, 1.0);
  EXPECT_THROW(net.basis(std::vector<double>{0.0, 1.0}), std::invalid_argument);
}

TEST(Network, RejectsBadShape) {
  EXPECT_THROW(RbfNetwork(Eigen::MatrixXd::Zero(1, 1), 1.0), std::invalid_argument);
  EXPECT_THROW(RbfNetwork(Eigen::MatrixXd::Zero(3, 1), 0.0), std::invalid_argument);
}

TEST(Eval, ZeroWeights) {
  const auto net = line_network(27, -1.5, 1.5, 0.8);
  EXPECT_EQ(net.eval(std::vector<double>(27, 0.0), std::vector<double>{0.3}), 0.0);
}

TEST(Eval, SingleActiveNode) {
  const auto net = line_network(2, 0.0, 10.0, 1.0);
  // second node 10 away contributes exp(-81) after moving one width off the first
  const double v = net.eval(std::vector<double>{2.0, 0.0}, std::vector<double>{1.0});
  EXPECT_DOUBLE_EQ(v, 2.0 * std::exp(-1.0));
}

TEST(Eval, MatchesIndependentSum) {
  auto rng = derive_stream(2, 0);
  const auto net = random_network(rng, 2, 15);
  std::vector<double> w(15);
  for (auto& x : w) x = -1 + 2 * rng.next_uniform();
  const std::vector<double> z{0.3, -0.4};
  double ref = 0.0;
  for (int k = 0; k < 15; ++k) {
    double d2 = 0.0;
    for (int j = 0; j < 2; ++j) d2 += std::pow(z[static_cast<std::size_t>(j)] - net.centers()(k, j), 2);
    ref += w[static_cast<std::size_t>(k)] * std::exp(-d2 / (net.width() * net.width()));
  }
  EXPECT_NEAR(net.eval(w, z), ref, 1e-12);
}

TEST(Eval, LinearInWeights) {
  auto rng = derive_stream(3, 0);
  const auto net = random_network(rng, 2, 8);
  std::vector<double> w1(8), w2(8), mix(8);
  for (auto& x : w1) x = rng.next_uniform();
  for (auto& x : w2) x = rng.next_uniform();
  const double a = 1.7, b = -0.4;
  for (int k = 0; k < 8; ++k) mix[static_cast<std::size_t>(k)] = a * w1[static_cast<std::size_t>(k)] + b * w2[static_cast<std::size_t>(k)];
  const std::vector<double> z{0.1, 0.2};
  EXPECT_NEAR(net.eval(mix, z), a * net.eval(w1, z) + b * net.eval(w2, z), 1e-12);
}

TEST(Centers, LineOf27) {
  CenterLayout layout;
  layout.bounds = {{-1.5, 1.5}};
  layout.counts = {27};
  layout.total = 27;
  const auto c = make_centers(layout);
  ASSERT_EQ(c.rows(), 27);
  EXPECT_DOUBLE_EQ(c(0, 0), -1.5);
  EXPECT_DOUBLE_EQ(c(26, 0), 1.5);
  for (int k = 1; k < 27; ++k) EXPECT_NEAR(c(k, 0) - c(k - 1, 0), 3.0 / 26.0, 1e-15);
}

TEST(Centers, TwoNodes) {
  CenterLayout layout;
  layout.bounds = {{0.0, 1.0}};
  layout.counts = {2};
  const auto c = make_centers(layout);
  EXPECT_EQ(c(0, 0), 0.0);
  EXPECT_EQ(c(1, 0), 1.0);
}

TEST(Centers, GridProductMismatch) {
  CenterLayout layout;
  layout.bounds = {{0.0, 1.0}, {0.0, 1.0}};
  layout.counts = {3, 3};
  layout.total = 10;
  EXPECT_THROW(make_centers(layout), std::invalid_argument);
}

TEST(Centers, GridSymmetricUnderReflection) {
  CenterLayout layout;
  layout.bounds = {{-2.0, 2.0}, {-1.0, 1.0}};
  layout.counts = {4, 3};
  const auto c = make_centers(layout);
  for (int r = 0; r < c.rows(); ++r) {
    bool found = false;
    for (int s = 0; s < c.rows() && !found; ++s)
      found = std::abs(c(s, 0) + c(r, 0)) < 1e-15 && std::abs(c(s, 1) + c(r, 1)) < 1e-15;
    EXPECT_TRUE(found) << "row " << r;
  }
}

TEST(Centers, QuasiRandomInsideAndDistinct) {
  CenterLayout layout;
  layout.mode = CenterMode::kQuasiRandom;
  layout.bounds.assign(4, Interval{-1.5, 1.5});
  layout.total = 64;
  layout.layout_seed = 1;
  const auto c = make_centers(layout);
  ASSERT_EQ(c.rows(), 64);
  ASSERT_EQ(c.cols(), 4);
  std::set<std::vector<double>> seen;
  for (int r = 0; r < 64; ++r) {
    std::vector<double> row;
    for (int j = 0; j < 4; ++j) {
      EXPECT_GE(c(r, j), -1.5);
      EXPECT_LE(c(r, j), 1.5);
      row.push_back(c(r, j));
    }
    seen.insert(row);
  }
  EXPECT_EQ(seen.size(), 64u);
  EXPECT_EQ(make_centers(layout), c);
}

TEST(Fit, ZeroTarget) {
  const auto net = line_network(5, -1.0, 1.0, 0.6);
  std::vector<FitSample> s;
  for (int k = 0; k < 20; ++k) s.push_back({{-1.0 + 0.1 * k}, 0.0});
  const auto fit = fit_least_squares(net.centers(), net.width(), s);
  EXPECT_LT(fit.weights.norm(), 1e-14);
}

TEST(Fit, RealizableTarget) {
  const auto net = line_network(6, -1.0, 1.0, 0.5);
  std::vector<FitSample> s;
  for (int k = 0; k < 40; ++k) {
    const std::vector<double> z{-1.0 + 2.0 * k / 39.0};
    s.push_back({z, net.basis(z)[0]});
  }
  const auto fit = fit_least_squares(net.centers(), net.width(), s);
  std::vector<double> w(fit.weights.data(), fit.weights.data() + fit.weights.size());
  for (const auto& smp : s) EXPECT_NEAR(net.eval(w, smp.z), smp.target, 1e-10);
}

TEST(Fit, SineOn27Nodes) {
  const auto net = line_network(27, -1.5, 1.5, 0.8);
  auto rng = derive_stream(11, 0);
  std::vector<FitSample> s;
  for (int k = 0; k < 300; ++k) {
    const double z = -1.5 + 3.0 * rng.next_uniform();
    s.push_back({{z}, std::sin(z)});
  }
  const auto fit = fit_least_squares(net.centers(), net.width(), s);
  std::vector<double> w(fit.weights.data(), fit.weights.data() + fit.weights.size());
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double z = -1.5 + 3.0 * k / 999.0;
    worst = std::max(worst, std::abs(net.eval(w, std::vector<double>{z}) - std::sin(z)));
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Fit, RankDeficiencyReported) {
  const auto net = line_network(4, -1.0, 1.0, 0.5);
  std::vector<FitSample> s(10, FitSample{{0.2}, 1.0});
  const auto fit = fit_least_squares(net.centers(), net.width(), s);
  EXPECT_TRUE(fit.rank_deficient());
  EXPECT_EQ(fit.rank, 1);
}

TEST(Fit, TooFewSamples) {
  const auto net = line_network(4, -1.0, 1.0, 0.5);
  std::vector<FitSample> s(3, FitSample{{0.2}, 1.0});
  EXPECT_THROW(fit_least_squares(net.centers(), net.width(), s), std::invalid_argument);
}
