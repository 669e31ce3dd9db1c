#pragma once

// Euler-Maruyama integration of Ito SDEs dx = f(x,t) dt + G(x,t) dW driven by
// an r-dimensional Wiener process.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sanc/rng.hpp"

namespace sanc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kDefaultDt = 1e-3;
inline constexpr double kDefaultHorizon = 20.0;
inline constexpr double kDivergenceLimit = 1e6;
inline constexpr double kMaxSteps = 1e8;

/// Raised when an integration step produces a non-finite or runaway value.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(std::size_t step, const std::string& what = "non-finite state")
      : std::runtime_error("diverged at step " + std::to_string(step) + ": " + what),
        step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct WienerPath {
  int dim = 1;
  double dt = kDefaultDt;
  std::vector<Vector> increments;

  std::size_t steps() const { return increments.size(); }
};

/// Draws `steps` i.i.d. N(0, dt I_r) increments from the stream.
inline WienerPath wiener_increments(RngStream& stream, int r, std::size_t steps, double dt) {
  if (r < 1) throw std::invalid_argument("wiener_increments: noise dimension must be >= 1");
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("wiener_increments: dt must be positive");
  WienerPath path{r, dt, {}};
  path.increments.reserve(steps);
  const double scale = std::sqrt(dt);
  for (std::size_t k = 0; k < steps; ++k) {
    Vector dw(r);
    for (int j = 0; j < r; ++j) dw[j] = scale * stream.next_normal();
    path.increments.push_back(std::move(dw));
  }
  return path;
}

/// Fills `dw` in place with one N(0, dt I) increment.
inline void draw_increment(RngStream& stream, double sqrt_dt, Vector& dw) {
  for (Eigen::Index j = 0; j < dw.size(); ++j) dw[j] = sqrt_dt * stream.next_normal();
}

struct SdeSystem {
  int state_dim = 1;
  int noise_dim = 1;
  std::function<Vector(const Vector&, double)> drift;
  std::function<Matrix(const Vector&, double)> diffusion;  // state_dim x noise_dim
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// x+ = x + drift dt + diffusion dW, with precomputed coefficients.
inline Vector em_step(const Vector& x, const Vector& drift, const Matrix& diffusion, double dt,
                      const Vector& dw, std::size_t step_index = 0) {
  Vector next = x + drift * dt + diffusion * dw;
  if (!next.allFinite()) throw DivergenceError(step_index);
  return next;
}

inline Vector em_step(const Vector& x, const SdeSystem& sys, double t, double dt, const Vector& dw,
                      std::size_t step_index = 0) {
  return em_step(x, sys.drift(x, t), sys.diffusion(x, t), dt, dw, step_index);
}

/// Time-indexed samples of one run. Diagnostic channels share the time grid.
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<double> controls;
  std::vector<std::string> channel_names;
  std::vector<std::vector<double>> channels;
  bool diverged = false;
  std::size_t diverged_step = 0;

  std::size_t size() const { return times.size(); }

  std::size_t add_channel(std::string name) {
    channel_names.push_back(std::move(name));
    channels.emplace_back();
    return channels.size() - 1;
  }

  const std::vector<double>& channel(const std::string& name) const {
    for (std::size_t k = 0; k < channel_names.size(); ++k)
      if (channel_names[k] == name) return channels[k];
    throw std::out_of_range("no channel named '" + name + "'");
  }

  bool consistent() const {
    const std::size_t n = times.size();
    if (states.size() != n) return false;
    if (!controls.empty() && controls.size() != n) return false;
    for (const auto& c : channels)
      if (c.size() != n) return false;
    return true;
  }
};

inline std::size_t step_count(double horizon, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  const double steps = std::floor(horizon / dt + 1e-9);
  if (steps > kMaxSteps) throw std::invalid_argument("horizon/dt exceeds 1e8 steps");
  return static_cast<std::size_t>(steps);
}

/// Integrates `sys` from x0 over [0, horizon]; stores every step. A diverged
/// run keeps the samples produced before the failing step.
inline TrajectoryRecord simulate(const SdeSystem& sys, const Vector& x0, double horizon, double dt,
                                 RngStream& stream, double divergence_limit = kDivergenceLimit) {
  const std::size_t steps = step_count(horizon, dt);
  TrajectoryRecord rec;
  rec.times.reserve(steps + 1);
  rec.states.reserve(steps + 1);
  rec.times.push_back(0.0);
  rec.states.push_back(x0);

  const double sqrt_dt = std::sqrt(dt);
  Vector dw(sys.noise_dim);
  Vector x = x0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    draw_increment(stream, sqrt_dt, dw);
    try {
      x = em_step(x, sys, t, dt, dw, k);
    } catch (const DivergenceError& e) {
      rec.diverged = true;
      rec.diverged_step = e.step();
      return rec;
    }
    if (x.cwiseAbs().maxCoeff() > divergence_limit) {
      rec.diverged = true;
      rec.diverged_step = k;
      return rec;
    }
    rec.times.push_back(static_cast<double>(k + 1) * dt);
    rec.states.push_back(x);
  }
  return rec;
}

}  // namespace sanc
