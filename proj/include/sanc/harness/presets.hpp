#pragma once

// Built-in experiment configurations. configs/<name>.json hold the same
// values in file form.

#include <stdexcept>
#include <string>
#include <vector>

#include "sanc/harness/config.hpp"

namespace sanc {

namespace detail {

inline NetworkConfig first_network() {
  NetworkConfig nc;
  nc.input_dim = 1;
  nc.nodes = 27;
  nc.mode = CenterMode::kTensorGrid;
  nc.bounds = {{-1.5, 1.5}};
  nc.counts = {27};
  nc.width = 0.8;
  return nc;
}

inline NetworkConfig second_network() {
  NetworkConfig nc;
  nc.input_dim = 4;
  nc.nodes = 64;
  nc.mode = CenterMode::kQuasiRandom;
  nc.bounds.assign(4, Interval{-1.5, 1.5});
  nc.width = 1.5;
  nc.layout_seed = 1;
  return nc;
}

}  // namespace detail

/// The second-order benchmark with its published gains and initial
/// estimates. Missing entries: Gamma_w = 0.3 I, e_12 = e_22 = 0.3,
/// Young slacks 0.3, x0 = (0.5, -0.5).
inline ExperimentConfig section4_config() {
  ExperimentConfig cfg;
  cfg.preset = Section4Plant::kName;
  cfg.x0 = {0.5, -0.5};
  cfg.runs = 50;
  cfg.networks = {detail::first_network(), detail::second_network()};

  StepGains g1;
  g1.c = 0.3;
  g1.gamma_vartheta = GainMatrix::diag({0.3, 0.3});
  g1.gamma_p = GainMatrix::diag({0.3});
  g1.gamma_eps = 0.3;
  g1.gamma_w = GainMatrix::scaled_identity(27, 0.3);
  g1.sigma_vartheta = 0.3;
  g1.sigma_eps = 0.3;
  g1.sigma_p = 0.3;
  g1.sigma_w = 1.5;

  StepGains g2;
  g2.c = 0.3;
  g2.gamma_vartheta = GainMatrix::diag({0.25, 0.25});
  g2.gamma_p = GainMatrix::diag({0.4, 0.0});
  g2.gamma_eps = 0.4;
  g2.gamma_w = GainMatrix::scaled_identity(64, 0.3);
  g2.sigma_vartheta = 0.25;
  g2.sigma_eps = 0.4;
  g2.sigma_p = 0.4;
  g2.sigma_w = 0.3;
  cfg.gains = {g1, g2};

  InitialEstimates e1;
  e1.vartheta = {0.0, 0.1};
  e1.p = {0.1};
  e1.eps = 1e-4;
  InitialEstimates e2;
  e2.vartheta = {0.0, 0.8};
  e2.p = {0.0, 0.15};
  e2.eps = 0.0;
  cfg.initial = {e1, e2};
  return cfg;
}

/// The non-linearly parametrized example, started inside the box where
/// e^{-x2} stays above 0.5.
inline ExperimentConfig remark1_config() {
  ExperimentConfig cfg = section4_config();
  cfg.preset = Remark1Plant::kName;
  cfg.x0 = {0.2, -0.2};
  cfg.initial[0].vartheta = {0.1, 0.1};
  cfg.initial[0].p = {0.2};
  cfg.initial[1].vartheta = {0.1, 0.1};
  cfg.initial[1].p = {0.2, 0.4};
  return cfg;
}

inline ExperimentConfig preset_config(const std::string& name) {
  if (name == Section4Plant::kName) return section4_config();
  if (name == Remark1Plant::kName) return remark1_config();
  throw std::invalid_argument("unknown preset '" + name + "'");
}

}  // namespace sanc
