#pragma once

// Strict-feedback stochastic plants
//
//   dx_i = (g_i x_{i+1} + theta^T Psi_i + f_i + Delta_i(x,t)) dt + phi_i^T dW,
//
// with x_{n+1} := u. A plant type supplies the truth model (f, theta, Psi,
// Delta) used only by the simulator, and the designer-known functions
// (g, phi, Phi*, varphi*) used by the controller. Designer-known functions are
// templates over the scalar type so the controller can differentiate through
// them. Steps are 0-based in code.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sanc/rbf.hpp"
#include "sanc/rng.hpp"
#include "sanc/sde.hpp"

namespace sanc {

template <class P>
concept StrictFeedbackPlant = requires(const P& p, int i, std::span<const double> x, double t) {
  { p.order() } -> std::convertible_to<int>;
  { p.noise_dim() } -> std::convertible_to<int>;
  { p.param_dim() } -> std::convertible_to<int>;
  { p.template g<double>(i, x) } -> std::convertible_to<double>;
  { p.template f<double>(i, x) } -> std::convertible_to<double>;
  { p.disturbance(i, x, t) } -> std::convertible_to<double>;
  { p.theta() } -> std::convertible_to<std::vector<double>>;
  { p.psi(i, x) } -> std::convertible_to<std::vector<double>>;
  { p.template phi<double>(i, x) } -> std::convertible_to<std::vector<double>>;
  { p.template disturbance_envelope<double>(i, x) } -> std::convertible_to<double>;
  { p.template psi_envelope<double>(i, x) } -> std::convertible_to<std::vector<double>>;
  { p.p_star() } -> std::convertible_to<std::vector<double>>;
  { p.b_star(i) } -> std::convertible_to<std::vector<double>>;
};

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Which stochastic parts of the truth model are active.
struct TruthSwitches {
  bool noise = true;
  bool disturbance = true;
};

template <StrictFeedbackPlant P>
Vector drift(const P& plant, const Vector& x, double u, double t, TruthSwitches sw = {}) {
  const int n = plant.order();
  const auto xs = as_span(x);
  const auto theta = plant.theta();
  Vector out(n);
  for (int i = 0; i < n; ++i) {
    const double next = i + 1 < n ? x[i + 1] : u;
    const auto psi = plant.psi(i, xs);
    double param = 0.0;
    for (std::size_t k = 0; k < theta.size(); ++k) param += theta[k] * psi[k];
    out[i] = plant.template g<double>(i, xs) * next + param + plant.template f<double>(i, xs) +
             (sw.disturbance ? plant.disturbance(i, xs, t) : 0.0);
  }
  return out;
}

/// n x r matrix whose row i is phi_i^T.
template <StrictFeedbackPlant P>
Matrix diffusion(const P& plant, const Vector& x, TruthSwitches sw = {}) {
  const int n = plant.order();
  const int r = plant.noise_dim();
  Matrix g = Matrix::Zero(n, r);
  if (!sw.noise) return g;
  const auto xs = as_span(x);
  for (int i = 0; i < n; ++i) {
    const auto row = plant.template phi<double>(i, xs);
    for (int j = 0; j < r; ++j) g(i, j) = row[static_cast<std::size_t>(j)];
  }
  return g;
}

/// Second-order benchmark plant:
///   dx1 = (x2 + x1 sin x1 + 0.5 x1 sin(x2 t)) dt + x1 cos x1 dW
///   dx2 = ((1 + 0.5 sin x1) u + 0.02 x2 + x2 cos x2) dt + sin x2 dW
/// theta = (theta_1, theta_2) with theta_1 unused (Psi_1 = 0) and
/// theta_2 psi_2 = 0.02 x2.
class Section4Plant {
 public:
  static constexpr const char* kName = "section4";

  int order() const { return 2; }
  int noise_dim() const { return 1; }
  int param_dim() const { return 2; }
  std::string name() const { return kName; }
  std::vector<Interval> default_box() const { return {{-3.0, 3.0}, {-3.0, 3.0}}; }

  template <class T>
  T g(int i, std::span<const T> x) const {
    using std::sin;
    if (i == 0) return T(1.0);
    return 1.0 + 0.5 * sin(x[0]);
  }

  template <class T>
  T f(int i, std::span<const T> x) const {
    using std::cos;
    using std::sin;
    if (i == 0) return x[0] * sin(x[0]);
    return x[1] * cos(x[1]);
  }

  double disturbance(int i, std::span<const double> x, double t) const {
    return i == 0 ? 0.5 * x[0] * std::sin(x[1] * t) : 0.0;
  }

  std::vector<double> theta() const { return {0.0, 0.02}; }

  std::vector<double> psi(int i, std::span<const double> x) const {
    if (i == 0) return {0.0, 0.0};
    return {0.0, x[1]};
  }

  template <class T>
  std::vector<T> phi(int i, std::span<const T> x) const {
    using std::cos;
    using std::sin;
    if (i == 0) return {x[0] * cos(x[0])};
    return {sin(x[1])};
  }

  /// Phi*_i with |Delta_i| <= p*_i Phi*_i.
  template <class T>
  T disturbance_envelope(int i, std::span<const T> x) const {
    using std::abs;
    if (i == 0) return abs(x[0]);
    return T(0.0);
  }

  /// varphi*_i with |Psi_ik| <= b*_ik varphi*_ik.
  template <class T>
  std::vector<T> psi_envelope(int i, std::span<const T> x) const {
    using std::abs;
    if (i == 0) return {T(0.0), T(0.0)};
    return {T(0.0), abs(x[1])};
  }

  std::vector<double> p_star() const { return {0.5, 0.0}; }

  std::vector<double> b_star(int i) const {
    if (i == 0) return {0.0, 0.0};
    return {0.0, 1.0};
  }
};

/// The non-linearly-parametrized example:
///   g = (x1^2 + 1, e^{-x2}), f = (0, e^{-x2}), phi = (x1, 0),
///   Psi_1 = (x1^2, 0), Psi_2 = (x2^2, e^{x1}),
///   Delta_1 = th3 sin(t th4 x2), Delta_2 = (th4 + th3 sin x1) x2^2.
/// Bound constants p*_1 = |th3|, p*_2 = |th3| + |th4|.
class Remark1Plant {
 public:
  static constexpr const char* kName = "remark1";

  struct Params {
    double theta1 = 0.1;
    double theta2 = 0.1;
    double theta3 = 0.2;
    double theta4 = 0.2;
  };

  Remark1Plant() = default;
  explicit Remark1Plant(Params p) : p_(p) {}

  const Params& params() const { return p_; }
  int order() const { return 2; }
  int noise_dim() const { return 1; }
  int param_dim() const { return 2; }
  std::string name() const { return kName; }
  // e^{-x2} >= 0.5 requires x2 <= ln 2.
  std::vector<Interval> default_box() const { return {{-0.5, 0.5}, {-0.5, 0.5}}; }

  template <class T>
  T g(int i, std::span<const T> x) const {
    using std::exp;
    if (i == 0) return x[0] * x[0] + 1.0;
    return exp(-x[1]);
  }

  template <class T>
  T f(int i, std::span<const T> x) const {
    using std::exp;
    if (i == 0) return T(0.0);
    return exp(-x[1]);
  }

  double disturbance(int i, std::span<const double> x, double t) const {
    if (i == 0) return p_.theta3 * std::sin(t * p_.theta4 * x[1]);
    return (p_.theta4 + p_.theta3 * std::sin(x[0])) * x[1] * x[1];
  }

  std::vector<double> theta() const { return {p_.theta1, p_.theta2}; }

  std::vector<double> psi(int i, std::span<const double> x) const {
    if (i == 0) return {x[0] * x[0], 0.0};
    return {x[1] * x[1], std::exp(x[0])};
  }

  template <class T>
  std::vector<T> phi(int i, std::span<const T> x) const {
    if (i == 0) return {x[0]};
    return {T(0.0)};
  }

  template <class T>
  T disturbance_envelope(int i, std::span<const T> x) const {
    if (i == 0) return T(1.0);
    return x[1] * x[1];
  }

  template <class T>
  std::vector<T> psi_envelope(int i, std::span<const T> x) const {
    using std::exp;
    if (i == 0) return {x[0] * x[0], T(0.0)};
    return {x[1] * x[1], exp(x[0])};
  }

  std::vector<double> p_star() const {
    return {std::abs(p_.theta3), std::abs(p_.theta3) + std::abs(p_.theta4)};
  }

  std::vector<double> b_star(int) const { return {1.0, 1.0}; }

 private:
  Params p_;
};

struct AssumptionReport {
  std::vector<double> disturbance_ratio;          // max |Delta_i| / (p*_i Phi*_i)
  std::vector<std::vector<double>> psi_ratio;     // max |Psi_ik| / (b*_ik varphi*_ik)
  double min_abs_gain = std::numeric_limits<double>::infinity();
  bool pass = true;
};

namespace detail {

inline double bound_ratio(double value, double envelope) {
  const double num = std::abs(value);
  const double den = std::abs(envelope);
  if (den == 0.0) return num == 0.0 ? -1.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

}  // namespace detail

/// Samples states uniformly from `box` and times from [0, max_time] and
/// records the worst bound ratio of each disturbance and Psi entry. Samples
/// with 0/0 are skipped. Passes iff every ratio is <= 1 + 1e-9.
template <StrictFeedbackPlant P>
AssumptionReport check_assumptions(const P& plant, const std::vector<Interval>& box, int sample_count,
                                   RngStream& stream, double max_time = kDefaultHorizon) {
  const int n = plant.order();
  const int q = plant.param_dim();
  AssumptionReport rep;
  rep.disturbance_ratio.assign(static_cast<std::size_t>(n), 0.0);
  rep.psi_ratio.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(q), 0.0));
  const auto p_star = plant.p_star();
  const auto theta = plant.theta();
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int s = 0; s < sample_count; ++s) {
    for (int j = 0; j < n; ++j) {
      const auto& b = box[static_cast<std::size_t>(j)];
      x[static_cast<std::size_t>(j)] = b.lo + (b.hi - b.lo) * stream.next_uniform();
    }
    const double t = max_time * stream.next_uniform();
    const std::span<const double> xs(x);
    for (int i = 0; i < n; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      const double dr = detail::bound_ratio(
          plant.disturbance(i, xs, t), p_star[iu] * plant.template disturbance_envelope<double>(i, xs));
      rep.disturbance_ratio[iu] = std::max(rep.disturbance_ratio[iu], dr);
      const auto psi = plant.psi(i, xs);
      const auto env = plant.template psi_envelope<double>(i, xs);
      const auto b = plant.b_star(i);
      for (int k = 0; k < q; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const double pr = detail::bound_ratio(psi[ku], b[ku] * env[ku]);
        rep.psi_ratio[iu][ku] = std::max(rep.psi_ratio[iu][ku], pr);
      }
      rep.min_abs_gain = std::min(rep.min_abs_gain, std::abs(plant.template g<double>(i, xs)));
    }
  }
  constexpr double kTol = 1.0 + 1e-9;
  for (double r : rep.disturbance_ratio) rep.pass = rep.pass && r <= kTol;
  for (const auto& row : rep.psi_ratio)
    for (double r : row) rep.pass = rep.pass && r <= kTol;
  return rep;
}

/// Per-step truth vectors the adaptive bounds estimate: p_i = (p*_0..p*_i)
/// and vartheta_i = |theta| (elementwise) scaled by the largest b* seen up
/// to step i.
template <StrictFeedbackPlant P>
std::vector<double> truth_p(const P& plant, int step) {
  const auto p = plant.p_star();
  return std::vector<double>(p.begin(), p.begin() + step + 1);
}

template <StrictFeedbackPlant P>
std::vector<double> truth_vartheta(const P& plant, int step) {
  const auto theta = plant.theta();
  std::vector<double> out(theta.size(), 0.0);
  for (int j = 0; j <= step; ++j) {
    const auto b = plant.b_star(j);
    for (std::size_t k = 0; k < theta.size(); ++k)
      out[k] = std::max(out[k], std::abs(theta[k]) * b[k]);
  }
  return out;
}

}  // namespace sanc
