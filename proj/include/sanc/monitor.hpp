#pragma once

// Lyapunov-style diagnostics over closed-loop trajectories.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sanc/controller.hpp"
#include "sanc/plant.hpp"
#include "sanc/rbf.hpp"
#include "sanc/rng.hpp"
#include "sanc/sde.hpp"

namespace sanc {

/// Worst-case loss of one tanh smoothing term.
inline constexpr double kTanhSlack = 0.2785;
inline constexpr double kDefaultDriftWindow = 0.5;
inline constexpr std::size_t kMinEnsembleSize = 10;

/// Norms of the truth vectors an adaptive step estimates.
struct TruthNorms {
  double p = 0.0;
  double vartheta = 0.0;
  double w = 0.0;
};

struct BoundConstants {
  std::vector<double> lambda;  // per step
  std::vector<double> K;       // per step
  double lambda_min = 0.0;
  double K_total = 0.0;

  /// Residual level K/lambda of the state energy.
  double residual() const { return K_total / lambda_min; }
};

/// Largest eigenvalue of Gamma^{-1} restricted to the directions Gamma
/// adapts (zero eigenvalues are frozen components and drop out).
inline double max_inverse_eigenvalue(const GainMatrix& gamma) {
  const auto ev = gamma.eigenvalues();
  double smallest = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (ev[k] > 1e-12) smallest = std::min(smallest, ev[k]);
  if (!std::isfinite(smallest)) throw std::invalid_argument("gain matrix has no positive eigenvalue");
  return 1.0 / smallest;
}

inline BoundConstants lambda_K(const std::vector<StepGains>& gains, const std::vector<TruthNorms>& truth) {
  if (gains.size() != truth.size()) throw std::invalid_argument("lambda_K needs one truth-norm set per step");
  if (gains.empty()) throw std::invalid_argument("lambda_K needs at least one step");
  BoundConstants out;
  for (std::size_t i = 0; i < gains.size(); ++i) {
    const auto& g = gains[i];
    for (double v : {g.c, g.gamma_eps, g.sigma_eps, g.sigma_vartheta, g.sigma_p, g.sigma_w})
      if (!(v > 0.0)) throw std::invalid_argument("lambda_K: gains of step " + std::to_string(i + 1) + " must be positive");
    for (double v : {g.tanh_width0, g.tanh_width1, g.tanh_width2, g.young_slack})
      if (v < 0.0) throw std::invalid_argument("lambda_K: widths of step " + std::to_string(i + 1) + " must be >= 0");
    const double lam = std::min({4.0 * g.c, g.gamma_eps * g.sigma_eps,
                                 g.sigma_vartheta / max_inverse_eigenvalue(g.gamma_vartheta),
                                 g.sigma_p / max_inverse_eigenvalue(g.gamma_p),
                                 g.sigma_w / max_inverse_eigenvalue(g.gamma_w)});
    const auto& t = truth[i];
    const double k = 0.5 * g.sigma_p * t.p * t.p + 0.5 * g.sigma_vartheta * t.vartheta * t.vartheta +
                     0.5 * g.sigma_w * t.w * t.w + 0.75 * g.young_slack +
                     kTanhSlack * (g.tanh_width0 + g.tanh_width1 + g.tanh_width2);
    out.lambda.push_back(lam);
    out.K.push_back(k);
  }
  out.lambda_min = *std::min_element(out.lambda.begin(), out.lambda.end());
  for (double k : out.K) out.K_total += k;
  return out;
}

/// Vx = sum z_i^4 / 4.
inline double state_energy(std::span<const double> z) {
  double v = 0.0;
  for (double zi : z) v += 0.25 * zi * zi * zi * zi;
  return v;
}

namespace detail {

inline double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double weighted_error(std::span<const double> est, const std::vector<double>& truth, const GainMatrix& gamma) {
  Eigen::VectorXd err(static_cast<Eigen::Index>(est.size()));
  for (std::size_t k = 0; k < est.size(); ++k) err[static_cast<Eigen::Index>(k)] = est[k] - truth[k];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma.matrix());
  double acc = 0.0;
  const Eigen::VectorXd proj = es.eigenvectors().transpose() * err;
  for (Eigen::Index k = 0; k < proj.size(); ++k)
    if (es.eigenvalues()[k] > 1e-12) acc += proj[k] * proj[k] / es.eigenvalues()[k];
  return 0.5 * acc;
}

}  // namespace detail

/// Vx plus the parameter-error energy of the estimates whose truth is known
/// in simulation (vartheta and p); frozen gain directions are skipped.
template <StrictFeedbackPlant Plant>
double partial_lyapunov(std::span<const double> z, const AdaptiveState& est, const Plant& plant,
                        const std::vector<StepGains>& gains) {
  double v = state_energy(z);
  for (int i = 0; i < est.layout().order(); ++i) {
    const auto& g = gains[static_cast<std::size_t>(i)];
    v += detail::weighted_error(est.vartheta(i), truth_vartheta(plant, i), g.gamma_vartheta);
    v += detail::weighted_error(est.p(i), truth_p(plant, i), g.gamma_p);
  }
  return v;
}

/// Reference norms of the ideal weights, from a ridge least-squares fit of
/// each step's unknown-function stack over the network box:
///   Q_0 = f_0(x_0),  Q_i = f_i(x) - sum_{j<i} dalpha_{i-1}/dx_j f_j(x)
/// with the gradient entries drawn independently from the box like every
/// other network input.
template <StrictFeedbackPlant Plant>
std::vector<TruthNorms> reference_truth_norms(const Plant& plant, const std::vector<RbfNetwork>& nets,
                                              std::uint64_t seed = 0, double ridge = 1e-6) {
  const int n = plant.order();
  RngStream stream = derive_stream(seed, 0xbeef);
  std::vector<TruthNorms> out;
  for (int i = 0; i < n; ++i) {
    const auto& net = nets[static_cast<std::size_t>(i)];
    const int q = net.input_dim();
    if (static_cast<int>(net.bounds().size()) != q)
      throw std::invalid_argument("reference_truth_norms needs network bounds");
    std::vector<FitSample> samples;
    const int count = 20 * net.node_count();
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    for (int s = 0; s < count; ++s) {
      FitSample fs;
      fs.z.resize(static_cast<std::size_t>(q));
      for (int j = 0; j < q; ++j) {
        const auto& b = net.bounds()[static_cast<std::size_t>(j)];
        fs.z[static_cast<std::size_t>(j)] = b.lo + (b.hi - b.lo) * stream.next_uniform();
      }
      std::fill(x.begin(), x.end(), 0.0);
      for (int j = 0; j <= i && j < q; ++j) x[static_cast<std::size_t>(j)] = fs.z[static_cast<std::size_t>(j)];
      const std::span<const double> xs(x);
      double target = plant.template f<double>(i, xs);
      for (int j = 0; j < i; ++j) {
        const int slot = i + 2 + j;
        if (slot < q) target -= fs.z[static_cast<std::size_t>(slot)] * plant.template f<double>(j, xs);
      }
      fs.target = target;
      samples.push_back(std::move(fs));
    }
    const auto w = fit_least_squares(net.centers(), net.width(), samples, ridge).weights;
    TruthNorms t;
    t.w = w.norm();
    const auto p = truth_p(plant, i);
    t.p = detail::norm(p);
    const auto vt = truth_vartheta(plant, i);
    t.vartheta = detail::norm(vt);
    out.push_back(t);
  }
  return out;
}

struct DriftSeries {
  std::vector<double> times;
  std::vector<double> mean;      // ensemble mean of the channel
  std::vector<double> smoothed;  // moving average of the mean
  std::vector<double> drift;     // d/dt of the smoothed mean
};

/// Ensemble-mean derivative of a channel (Vx by default). The mean is
/// smoothed by a centered moving average of `window` seconds, truncated at
/// the ends, then differenced centrally.
inline DriftSeries empirical_drift(const std::vector<TrajectoryRecord>& ensemble, double window = kDefaultDriftWindow,
                                   const std::string& channel = "Vx") {
  if (ensemble.size() < kMinEnsembleSize)
    throw std::invalid_argument("empirical_drift needs at least " + std::to_string(kMinEnsembleSize) + " runs");
  if (!(window >= 0.0)) throw std::invalid_argument("empirical_drift window must be >= 0");
  const auto& ref = ensemble.front().times;
  const std::size_t m = ref.size();
  for (const auto& rec : ensemble) {
    if (rec.times.size() != m) throw std::invalid_argument("empirical_drift: misaligned time grids");
    for (std::size_t k = 0; k < m; ++k)
      if (std::abs(rec.times[k] - ref[k]) > 1e-9 * std::max(1.0, std::abs(ref[k])))
        throw std::invalid_argument("empirical_drift: misaligned time grids");
  }
  DriftSeries out;
  out.times = ref;
  out.mean.assign(m, 0.0);
  for (const auto& rec : ensemble) {
    const auto& c = rec.channel(channel);
    for (std::size_t k = 0; k < m; ++k) out.mean[k] += c[k];
  }
  for (auto& v : out.mean) v /= static_cast<double>(ensemble.size());
  if (m < 2) {
    out.smoothed = out.mean;
    out.drift.assign(m, 0.0);
    return out;
  }

  const double step = (ref.back() - ref.front()) / static_cast<double>(m - 1);
  const auto half = static_cast<std::size_t>(std::llround(0.5 * window / step));
  std::vector<double> prefix(m + 1, 0.0);
  for (std::size_t k = 0; k < m; ++k) prefix[k + 1] = prefix[k] + out.mean[k];
  out.smoothed.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t lo = k >= half ? k - half : 0;
    const std::size_t hi = std::min(m - 1, k + half);
    out.smoothed[k] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
  }
  out.drift.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t lo = k == 0 ? 0 : k - 1;
    const std::size_t hi = k + 1 == m ? k : k + 1;
    out.drift[k] = (out.smoothed[hi] - out.smoothed[lo]) / (ref[hi] - ref[lo]);
  }
  return out;
}

inline double sup_norm_from(const TrajectoryRecord& rec, double from = -std::numeric_limits<double>::infinity()) {
  double sup = 0.0;
  for (std::size_t k = 0; k < rec.size(); ++k)
    if (rec.times[k] >= from) sup = std::max(sup, rec.states[k].norm());
  return sup;
}

/// Fraction of runs with sup_t |x(t)| >= eps. Diverged runs always count.
inline double bounded_in_probability_stat(const std::vector<TrajectoryRecord>& ensemble, double eps) {
  if (ensemble.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& rec : ensemble)
    if (rec.diverged || sup_norm_from(rec) >= eps) ++hits;
  return static_cast<double>(hits) / static_cast<double>(ensemble.size());
}

struct Quantiles {
  double min = 0.0;
  double median = 0.0;
  double p90 = 0.0;
  double max = 0.0;
};

/// Linear-interpolation quantile (the usual "type 7").
inline double quantile(std::vector<double> v, double prob) {
  if (v.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double pos = prob * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  if (pos == static_cast<double>(lo) || v[hi] == v[lo]) return v[lo];
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

/// Quantiles of sup_{t >= tail_start} |x(t)| across runs. Diverged runs
/// contribute +inf.
inline Quantiles convergence_stat(const std::vector<TrajectoryRecord>& ensemble, double tail_start) {
  if (ensemble.empty()) throw std::invalid_argument("convergence_stat needs at least one run");
  std::vector<double> sups;
  for (const auto& rec : ensemble) {
    if (rec.diverged) {
      sups.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    if (rec.times.empty() || !(tail_start < rec.times.back()))
      throw std::invalid_argument("convergence_stat: tail_start must precede the horizon");
    sups.push_back(sup_norm_from(rec, tail_start));
  }
  return {quantile(sups, 0.0), quantile(sups, 0.5), quantile(sups, 0.9), quantile(sups, 1.0)};
}

}  // namespace sanc
