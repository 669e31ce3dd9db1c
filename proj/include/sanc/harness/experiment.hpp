#pragma once

// Closed-loop runs and Monte-Carlo ensembles.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "sanc/controller.hpp"
#include "sanc/harness/config.hpp"
#include "sanc/harness/output.hpp"
#include "sanc/monitor.hpp"
#include "sanc/plant.hpp"
#include "sanc/rng.hpp"
#include "sanc/sde.hpp"

namespace sanc {

struct RunOutcome {
  TrajectoryRecord record;
  double max_estimate_norm = 0.0;  // over every per-step estimate block, full rate
  std::string failure;             // empty unless diverged
};

namespace detail {

inline double span_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

struct RecordLayout {
  std::size_t z = 0, alpha = 0, w = 0, eps = 0, p = 0, vartheta = 0, vx = 0;
};

inline RecordLayout add_channels(TrajectoryRecord& rec, int n) {
  RecordLayout l;
  auto group = [&](const std::string& prefix, const std::string& suffix, int count) {
    const std::size_t first = rec.channels.size();
    for (int i = 1; i <= count; ++i) rec.add_channel(prefix + std::to_string(i) + suffix);
    return first;
  };
  l.z = group("z", "", n);
  l.alpha = group("alpha", "", n - 1);
  l.w = group("W", "_norm", n);
  l.eps = group("eps", "_hat", n);
  l.p = group("p", "_norm", n);
  l.vartheta = group("vartheta", "_norm", n);
  l.vx = rec.add_channel("Vx");
  return l;
}

}  // namespace detail

/// One seeded closed-loop run: the state advances by Euler-Maruyama, the
/// estimates by explicit Euler on the controller's rates, on one dt grid.
template <StrictFeedbackPlant Plant>
RunOutcome run_closed_loop(const BacksteppingController<Plant>& ctl, const AdaptiveState& init,
                           const ExperimentConfig& cfg, int run_index) {
  const Plant& plant = ctl.plant();
  const int n = plant.order();
  const std::size_t steps = step_count(cfg.horizon, cfg.dt);
  const auto stride = static_cast<std::size_t>(cfg.record_stride);

  RunOutcome out;
  auto& rec = out.record;
  const auto lay = detail::add_channels(rec, n);
  const std::size_t rows = steps / stride + 1;
  rec.times.reserve(rows);
  rec.states.reserve(rows);
  rec.controls.reserve(rows);
  for (auto& c : rec.channels) c.reserve(rows);

  RngStream stream = derive_stream(cfg.master_seed, static_cast<std::uint64_t>(run_index));
  const double sqrt_dt = std::sqrt(cfg.dt);
  Vector x(n);
  for (int i = 0; i < n; ++i) x[i] = cfg.x0[static_cast<std::size_t>(i)];
  AdaptiveState est = init;
  Vector dw(plant.noise_dim());

  auto estimate_norms = [&](int i) {
    return std::array<double, 4>{detail::span_norm(est.w(i)), std::abs(est.eps(i)), detail::span_norm(est.p(i)),
                                 detail::span_norm(est.vartheta(i))};
  };
  auto track = [&]() {
    for (int i = 0; i < n; ++i)
      for (double v : estimate_norms(i)) out.max_estimate_norm = std::max(out.max_estimate_norm, v);
  };
  auto diverge = [&](std::size_t k, const std::string& why) {
    rec.diverged = true;
    rec.diverged_step = k;
    out.failure = why;
  };
  track();

  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    ControlOutput ctrl;
    try {
      ctrl = ctl.evaluate(as_span(x), est);
    } catch (const std::runtime_error& e) {
      diverge(k, e.what());
      return out;
    }
    if (!std::isfinite(ctrl.u) || std::abs(ctrl.u) > kDivergenceLimit) {
      diverge(k, "control magnitude exceeds limit");
      return out;
    }
    if (k % stride == 0) {
      rec.times.push_back(t);
      rec.states.push_back(x);
      rec.controls.push_back(ctrl.u);
      for (int i = 0; i < n; ++i) {
        const auto iu = static_cast<std::size_t>(i);
        rec.channels[lay.z + iu].push_back(ctrl.z[iu]);
        if (i + 1 < n) rec.channels[lay.alpha + iu].push_back(ctrl.alpha[iu]);
        const auto norms = estimate_norms(i);
        rec.channels[lay.w + iu].push_back(norms[0]);
        rec.channels[lay.eps + iu].push_back(est.eps(i));
        rec.channels[lay.p + iu].push_back(norms[2]);
        rec.channels[lay.vartheta + iu].push_back(norms[3]);
      }
      rec.channels[lay.vx].push_back(state_energy(std::span<const double>(ctrl.z)));
    }
    if (k == steps) break;

    draw_increment(stream, sqrt_dt, dw);
    try {
      x = em_step(x, drift(plant, x, ctrl.u, t, cfg.truth), diffusion(plant, x, cfg.truth), cfg.dt, dw, k);
    } catch (const DivergenceError& e) {
      diverge(k, e.what());
      return out;
    }
    auto& values = est.values();
    for (std::size_t e = 0; e < values.size(); ++e) values[e] += cfg.dt * ctrl.rates[e];
    track();
    if (x.cwiseAbs().maxCoeff() > kDivergenceLimit || !est.all_finite() ||
        std::any_of(values.begin(), values.end(), [](double v) { return std::abs(v) > kDivergenceLimit; })) {
      diverge(k, "state or estimate magnitude exceeds limit");
      return out;
    }
  }
  return out;
}

/// Builds plant and controller from the config and runs `run_index`.
inline RunOutcome run_closed_loop(const ExperimentConfig& cfg, int run_index) {
  return std::visit(
      [&](const auto& plant) {
        const auto ctl = build_controller(plant, cfg);
        return run_closed_loop(ctl, initial_state(ctl, cfg), cfg, run_index);
      },
      make_plant(cfg));
}

struct EnsembleResult {
  int order = 0;
  std::vector<RunOutcome> runs;
  BoundConstants bounds;
  std::vector<TruthNorms> truth;
  Quantiles tail;
  double exceedance = 0.0;
  int diverged = 0;
  double max_estimate_norm = 0.0;
  DriftSeries drift;            // empty when fewer than kMinEnsembleSize runs
  int drift_checked = 0;        // samples with mean Vx above 10 K/lambda
  int drift_violations = 0;     // ... of which the drift was not negative
  double tail_mean_vx = 0.0;    // ensemble mean Vx averaged over the tail

  std::vector<TrajectoryRecord> records() const {
    std::vector<TrajectoryRecord> out;
    for (const auto& r : runs) out.push_back(r.record);
    return out;
  }
  double divergence_fraction() const { return runs.empty() ? 0.0 : static_cast<double>(diverged) / static_cast<double>(runs.size()); }
};

/// Runs cfg.runs seeded members (concurrently when threads > 1) and
/// computes the ensemble statistics. Results do not depend on thread count.
inline EnsembleResult monte_carlo(const ExperimentConfig& cfg, unsigned threads = 0) {
  EnsembleResult res;
  res.runs.resize(static_cast<std::size_t>(cfg.runs));
  std::visit(
      [&](const auto& plant) {
        const auto ctl = build_controller(plant, cfg);
        const auto init = initial_state(ctl, cfg);
        res.order = plant.order();
        res.truth = reference_truth_norms(plant, ctl.networks());
        res.bounds = lambda_K(cfg.gains, res.truth);

        if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
        threads = std::min<unsigned>(threads, static_cast<unsigned>(cfg.runs));
        std::atomic<int> next{0};
        auto worker = [&]() {
          for (int r = next++; r < cfg.runs; r = next++)
            res.runs[static_cast<std::size_t>(r)] = run_closed_loop(ctl, init, cfg, r);
        };
        if (threads <= 1) {
          worker();
        } else {
          std::vector<std::jthread> pool;
          for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
        }
      },
      make_plant(cfg));

  std::vector<TrajectoryRecord> recs;
  for (const auto& r : res.runs) {
    if (r.record.diverged) ++res.diverged;
    res.max_estimate_norm = std::max(res.max_estimate_norm, r.max_estimate_norm);
    recs.push_back(r.record);
  }
  res.tail = convergence_stat(recs, cfg.tail_start);
  res.exceedance = bounded_in_probability_stat(recs, cfg.exceedance_level);

  std::vector<TrajectoryRecord> alive;
  for (auto& r : recs)
    if (!r.diverged) alive.push_back(std::move(r));
  if (alive.size() >= kMinEnsembleSize) {
    res.drift = empirical_drift(alive, cfg.drift_window);
    const double level = 10.0 * res.bounds.residual();
    double tail_sum = 0.0;
    int tail_count = 0;
    for (std::size_t k = 0; k < res.drift.times.size(); ++k) {
      if (res.drift.mean[k] > level) {
        ++res.drift_checked;
        if (!(res.drift.drift[k] < 0.0)) ++res.drift_violations;
      }
      if (res.drift.times[k] >= cfg.tail_start) {
        tail_sum += res.drift.mean[k];
        ++tail_count;
      }
    }
    res.tail_mean_vx = tail_count > 0 ? tail_sum / tail_count : 0.0;
  }
  return res;
}

inline std::string run_file_name(int run_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "run_%04d.csv", run_index);
  return buf;
}

/// Summary of an ensemble, including one FNV-1a digest per run CSV.
inline Report make_report(const ExperimentConfig& cfg, const EnsembleResult& res) {
  Report rep;
  rep.add("preset", cfg.preset);
  rep.add("derivatives", to_string(cfg.derivatives));
  rep.add("noise", cfg.truth.noise);
  rep.add("disturbance", cfg.truth.disturbance);
  rep.add("master_seed", std::to_string(cfg.master_seed));
  rep.add("runs", cfg.runs);
  rep.add("horizon", cfg.horizon);
  rep.add("dt", cfg.dt);
  rep.add("diverged", res.diverged);
  for (std::size_t i = 0; i < res.bounds.lambda.size(); ++i) {
    const auto s = std::to_string(i + 1);
    rep.add("lambda" + s, res.bounds.lambda[i]);
    rep.add("K" + s, res.bounds.K[i]);
    rep.add("W" + s + "_reference_norm", res.truth[i].w);
  }
  rep.add("lambda", res.bounds.lambda_min);
  rep.add("K", res.bounds.K_total);
  rep.add("residual_bound", res.bounds.residual());
  rep.add("tail_start", cfg.tail_start);
  rep.add("tail_sup_min", res.tail.min);
  rep.add("tail_sup_median", res.tail.median);
  rep.add("tail_sup_p90", res.tail.p90);
  rep.add("tail_sup_max", res.tail.max);
  rep.add("tail_mean_Vx", res.tail_mean_vx);
  rep.add("exceedance_level", cfg.exceedance_level);
  rep.add("exceedance_fraction", res.exceedance);
  rep.add("max_estimate_norm", res.max_estimate_norm);
  rep.add("drift_checked", res.drift_checked);
  rep.add("drift_violations", res.drift_violations);
  for (std::size_t r = 0; r < res.runs.size(); ++r) {
    const auto& run = res.runs[r];
    char key[32];
    std::snprintf(key, sizeof key, "run_%04zu", r);
    rep.add(std::string(key) + "_digest", hex64(fnv1a64(csv_text(run.record, res.order))));
    if (run.record.diverged) rep.add(std::string(key) + "_failure", run.failure);
  }
  return rep;
}

/// Writes run_NNNN.csv per member, drift.csv and report.txt into `dir`.
inline Report write_ensemble(const ExperimentConfig& cfg, const EnsembleResult& res, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error(dir + ": " + ec.message());
  for (std::size_t r = 0; r < res.runs.size(); ++r)
    emit_csv(res.runs[r].record, res.order, (std::filesystem::path(dir) / run_file_name(static_cast<int>(r))).string());
  if (!res.drift.times.empty()) {
    std::string text = "t,mean_Vx,smoothed_Vx,drift\n";
    for (std::size_t k = 0; k < res.drift.times.size(); ++k)
      text += format_double(res.drift.times[k]) + "," + format_double(res.drift.mean[k]) + "," +
              format_double(res.drift.smoothed[k]) + "," + format_double(res.drift.drift[k]) + "\n";
    write_file((std::filesystem::path(dir) / "drift.csv").string(), text);
  }
  const auto rep = make_report(cfg, res);
  emit_report(rep, (std::filesystem::path(dir) / "report.txt").string());
  return rep;
}

}  // namespace sanc
