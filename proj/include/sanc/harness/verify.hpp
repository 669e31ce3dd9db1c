#pragma once

// Property suites behind `sanc verify`. Each suite is parameterized so tests
// can confirm it fails when its constant is weakened.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sanc/controller.hpp"
#include "sanc/harness/config.hpp"
#include "sanc/harness/output.hpp"
#include "sanc/harness/presets.hpp"
#include "sanc/monitor.hpp"
#include "sanc/plant.hpp"
#include "sanc/rng.hpp"
#include "sanc/sde.hpp"

namespace sanc {

struct SuiteResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// 0 <= |v| - v tanh(v/eps) <= delta eps on random (v, eps), plus a
/// brute-force maximum of v - v tanh(v) that must lie in [0.2776, delta].
inline SuiteResult tanh_gap_suite(double delta = kTanhSlack, int samples = 100000, std::uint64_t seed = 1) {
  RngStream rng = derive_stream(seed, 0);
  int violations = 0;
  for (int s = 0; s < samples; ++s) {
    const double eps = std::exp(std::log(1e-6) + (std::log(10.0) - std::log(1e-6)) * rng.next_uniform());
    const double v = eps * (-20.0 + 40.0 * rng.next_uniform());
    const double gap = std::abs(v) - v * std::tanh(v / eps);
    const double tol = 1e-12 * (std::abs(v) + eps);
    if (gap < -tol || gap > delta * eps + tol) ++violations;
  }
  double best = 0.0;
  for (int k = 0; k <= 2000000; ++k) {
    const double v = 5.0 * k / 2000000.0;
    best = std::max(best, v - v * std::tanh(v));
  }
  const bool pass = violations == 0 && best >= 0.2776 && best <= delta;
  return {"tanh_gap", pass,
          "violations=" + std::to_string(violations) + " max=" + format_double(best) + " delta=" + format_double(delta)};
}

/// |a z^3 b| <= 3/4 |a|^{p} z^4 + 1/4 b^4 (p = 4/3) and
/// 3/2 z^2 |phi|^2 <= 3 e/4 + 3 z^4 |phi|^4 / (4 e).
inline SuiteResult young_suite(double exponent = 4.0 / 3.0, int samples = 100000, std::uint64_t seed = 2) {
  RngStream rng = derive_stream(seed, 0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.next_uniform(); };
  int first = 0;
  int second = 0;
  for (int s = 0; s < samples; ++s) {
    const double a = uniform(-10.0, 10.0);
    const double z = uniform(-3.0, 3.0);
    const double b = uniform(-3.0, 3.0);
    const double lhs = std::abs(a * z * z * z * b);
    const double rhs = 0.75 * std::pow(std::abs(a), exponent) * z * z * z * z + 0.25 * b * b * b * b;
    if (lhs > rhs * (1.0 + 1e-12) + 1e-300) ++first;

    const double e = std::exp(uniform(std::log(1e-3), std::log(10.0)));
    const double phi2 = uniform(0.0, 3.0) * uniform(0.0, 3.0);
    const double z2 = z * z;
    const double lhs2 = 1.5 * z2 * phi2;
    const double rhs2 = 0.75 * e + 0.75 * z2 * z2 * phi2 * phi2 / e;
    if (lhs2 > rhs2 * (1.0 + 1e-12)) ++second;
  }
  return {"young", first == 0 && second == 0,
          "cross_term_violations=" + std::to_string(first) + " diffusion_violations=" + std::to_string(second) +
              " exponent=" + format_double(exponent)};
}

/// Errors are max|dual - numeric| / max(max|dual|, 1) per state; the
/// *_strict fields drop the floor of 1 and are reported only.
struct DerivativeAgreement {
  double first = 0.0;   // gradients (states and estimates)
  double second = 0.0;  // Hessian
  double first_strict = 0.0;
  double second_strict = 0.0;
};

namespace detail {

inline double rel_error(const std::vector<double>& a, const std::vector<double>& b, double floor = 1.0) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff = std::max(diff, std::abs(a[k] - b[k]));
    scale = std::max(scale, std::abs(a[k]));
  }
  return diff / std::max(scale, floor);
}

}  // namespace detail

/// Dual versus central-difference derivatives of alpha_1 at random states
/// of the benchmark plant, with random estimates around the initial ones.
inline DerivativeAgreement derivative_agreement(int states = 100, std::uint64_t seed = 3) {
  const auto cfg = section4_config();
  const auto ctl = build_controller(Section4Plant{}, cfg);
  const auto init = initial_state(ctl, cfg);
  RngStream rng = derive_stream(seed, 0);
  DerivativeAgreement out;
  for (int s = 0; s < states; ++s) {
    std::vector<double> x{-2.0 + 4.0 * rng.next_uniform(), -2.0 + 4.0 * rng.next_uniform()};
    AdaptiveState est = init;
    for (auto& v : est.values()) v += 0.5 * rng.next_uniform();
    const auto dual = ctl.compute_scratch(1, x, est, DerivativeMode::kDual);
    const auto num = ctl.compute_scratch(1, x, est, DerivativeMode::kNumeric);
    for (double floor : {1.0, 1e-12}) {
      double& first = floor == 1.0 ? out.first : out.first_strict;
      double& second = floor == 1.0 ? out.second : out.second_strict;
      first = std::max(first, detail::rel_error(dual.grad_x, num.grad_x, floor));
      first = std::max(first, detail::rel_error(dual.grad_est, num.grad_est, floor));
      second = std::max(second, detail::rel_error(dual.hess_x, num.hess_x, floor));
    }
  }
  return out;
}

inline SuiteResult derivative_suite(double first_tol = 1e-4, double second_tol = 1e-2) {
  const auto r = derivative_agreement();
  return {"derivatives", r.first < first_tol && r.second < second_tol,
          "first=" + format_double(r.first) + " second=" + format_double(r.second) +
              " strict_first=" + format_double(r.first_strict) + " strict_second=" + format_double(r.second_strict)};
}

struct WienerStats {
  double mean[2] = {0.0, 0.0};
  double variance[2] = {0.0, 0.0};
  double correlation = 0.0;
};

inline WienerStats wiener_stats(std::size_t steps = 1000000, double dt = 1e-3, std::uint64_t seed = 4) {
  RngStream rng = derive_stream(seed, 0);
  const auto path = wiener_increments(rng, 2, steps, dt);
  WienerStats st;
  double s[2] = {0, 0}, ss[2] = {0, 0}, cross = 0.0;
  for (const auto& dw : path.increments) {
    for (int j = 0; j < 2; ++j) {
      s[j] += dw[j];
      ss[j] += dw[j] * dw[j];
    }
    cross += dw[0] * dw[1];
  }
  const auto m = static_cast<double>(steps);
  for (int j = 0; j < 2; ++j) {
    st.mean[j] = s[j] / m;
    st.variance[j] = ss[j] / m - st.mean[j] * st.mean[j];
  }
  const double cov = cross / m - st.mean[0] * st.mean[1];
  st.correlation = cov / std::sqrt(st.variance[0] * st.variance[1]);
  return st;
}

inline SuiteResult wiener_suite(std::size_t steps = 1000000, double dt = 1e-3) {
  const auto st = wiener_stats(steps, dt);
  const double sigma_mean = std::sqrt(dt / static_cast<double>(steps));
  bool pass = std::abs(st.correlation) < 0.01;
  for (int j = 0; j < 2; ++j)
    pass = pass && std::abs(st.variance[j] - dt) <= 0.05 * dt && std::abs(st.mean[j]) <= 5.0 * sigma_mean;
  return {"wiener", pass,
          "var=" + format_double(st.variance[0]) + "," + format_double(st.variance[1]) +
              " rho=" + format_double(st.correlation)};
}

/// At x = 0 with zero estimates every virtual control and u vanish.
inline SuiteResult structural_zero_suite() {
  const auto cfg = section4_config();
  const auto ctl = build_controller(Section4Plant{}, cfg);
  const auto est = ctl.make_state();
  const std::vector<double> x{0.0, 0.0};
  double worst = 0.0;
  for (auto mode : {DerivativeMode::kDual, DerivativeMode::kNumeric}) {
    auto c = ctl;
    c.set_mode(mode);
    const auto out = c.evaluate(x, est);
    worst = std::max(worst, std::abs(out.u));
    for (double a : out.alpha) worst = std::max(worst, std::abs(a));
    for (double r : out.rates) worst = std::max(worst, std::abs(r));
  }
  return {"structural_zero", worst == 0.0, "max_abs=" + format_double(worst)};
}

/// Bound assumptions and gain sign of both presets on their boxes.
inline SuiteResult assumptions_suite(int samples = 10000) {
  RngStream rng = derive_stream(5, 0);
  const Section4Plant s4;
  const Remark1Plant r1;
  const auto a = check_assumptions(s4, s4.default_box(), samples, rng);
  const auto b = check_assumptions(r1, r1.default_box(), samples, rng);
  const bool pass = a.pass && b.pass && a.min_abs_gain >= 0.5 && b.min_abs_gain >= 0.5;
  return {"assumptions", pass,
          "section4_min_gain=" + format_double(a.min_abs_gain) + " remark1_min_gain=" + format_double(b.min_abs_gain)};
}

/// lambda of the benchmark's first step, which ties at 0.09.
inline SuiteResult lambda_suite() {
  const auto cfg = section4_config();
  const auto bc = lambda_K({cfg.gains[0]}, {TruthNorms{}});
  return {"lambda_K", bc.lambda[0] == 0.09, "lambda1=" + format_double(bc.lambda[0])};
}

inline std::vector<SuiteResult> verify_all() {
  return {tanh_gap_suite(), young_suite(), derivative_suite(), wiener_suite(), structural_zero_suite(),
          assumptions_suite(), lambda_suite()};
}

}  // namespace sanc
