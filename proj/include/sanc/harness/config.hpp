#pragma once

// Experiment configuration: JSON schema, validation, and construction of the
// plant, networks, controller and initial estimates it describes.
//
// Schema (all keys optional unless noted):
//   plant:       { preset: "section4" | "remark1" (required), theta: [t1,t2,t3,t4] }
//   x0:          [n numbers]                       default (0.5, -0.5)
//   horizon, dt: seconds                           default 20, 1e-3
//   master_seed: unsigned integer                  default 0
//   runs:        >= 1                              default 1
//   record_stride: >= 1                            default 10
//   derivatives: "dual" | "numeric"                default "dual"
//   noise, disturbance: bool                       default true
//   tail_start, exceedance_level, drift_window:    default 15, 10, 0.5
//   gains:       [n objects] c, gamma_eps, sigma_{vartheta,p,eps,w},
//                tanh_widths [3], young_slack, gamma_{vartheta,p,w}
//                (number = scaled identity, list = diagonal, list of lists = full)
//   networks:    [n objects] input_dim, nodes, centers ("tensor-grid" |
//                "quasi-random"), bounds ([lo,hi] or one pair per input),
//                counts, width, layout_seed                         (required)
//   initial_estimates: [n objects] vartheta, p, eps, W (number fills)
//   output_dir:  path                              default "out"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sanc/controller.hpp"
#include "sanc/plant.hpp"
#include "sanc/rbf.hpp"
#include "sanc/sde.hpp"

namespace sanc {

using AnyPlant = std::variant<Section4Plant, Remark1Plant>;

inline const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{Section4Plant::kName, Remark1Plant::kName};
  return names;
}

struct NetworkConfig {
  int input_dim = 1;
  int nodes = 0;
  CenterMode mode = CenterMode::kTensorGrid;
  std::vector<Interval> bounds;
  std::vector<int> counts;
  double width = 1.0;
  std::uint64_t layout_seed = 1;
};

struct InitialEstimates {
  std::vector<double> vartheta;
  std::vector<double> p;
  double eps = 0.0;
  std::vector<double> w;  // empty: filled with w_fill
  double w_fill = 0.0;
};

struct ExperimentConfig {
  std::string preset = Section4Plant::kName;
  Remark1Plant::Params remark;
  std::vector<double> x0{0.5, -0.5};
  double horizon = kDefaultHorizon;
  double dt = kDefaultDt;
  std::uint64_t master_seed = 0;
  int runs = 1;
  int record_stride = 10;
  DerivativeMode derivatives = DerivativeMode::kDual;
  TruthSwitches truth;
  double tail_start = 15.0;
  double exceedance_level = 10.0;
  double drift_window = 0.5;
  std::vector<StepGains> gains;
  std::vector<NetworkConfig> networks;
  std::vector<InitialEstimates> initial;
  std::string output_dir = "out";
};

/// Every problem found while loading a config, one per line.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems)
      : std::runtime_error(join(problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string join(const std::vector<std::string>& p) {
    std::string s = "invalid config:";
    for (const auto& e : p) s += "\n  " + e;
    return s;
  }
  std::vector<std::string> problems_;
};

inline AnyPlant make_plant(const ExperimentConfig& cfg) {
  if (cfg.preset == Section4Plant::kName) return Section4Plant{};
  if (cfg.preset == Remark1Plant::kName) return Remark1Plant(cfg.remark);
  throw std::invalid_argument("unknown plant preset '" + cfg.preset + "'");
}

namespace detail {

using nlohmann::json;

class ConfigReader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  bool has(const json& obj, const char* key) const { return obj.is_object() && obj.contains(key); }

  double number(const json& obj, const char* key, const std::string& path, double def) {
    if (!has(obj, key)) return def;
    const auto& v = obj.at(key);
    if (!v.is_number()) {
      fail(path + "." + key, "expected a number");
      return def;
    }
    return v.get<double>();
  }

  double positive(const json& obj, const char* key, const std::string& path, double def) {
    const double v = number(obj, key, path, def);
    if (!(v > 0.0) || !std::isfinite(v)) fail(path + "." + key, "must be positive, got " + std::to_string(v));
    return v;
  }

  long integer(const json& obj, const char* key, const std::string& path, long def) {
    if (!has(obj, key)) return def;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) {
      fail(path + "." + key, "expected an integer");
      return def;
    }
    return v.get<long>();
  }

  bool boolean(const json& obj, const char* key, const std::string& path, bool def) {
    if (!has(obj, key)) return def;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) {
      fail(path + "." + key, "expected true or false");
      return def;
    }
    return v.get<bool>();
  }

  std::vector<double> numbers(const json& v, const std::string& path) {
    std::vector<double> out;
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) {
      fail(path, "expected a list of numbers");
      return out;
    }
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!v[k].is_number()) {
        fail(path + "[" + std::to_string(k) + "]", "expected a number");
        continue;
      }
      out.push_back(v[k].get<double>());
    }
    return out;
  }

  GainMatrix gain_matrix(const json& obj, const char* key, const std::string& path, int dim, double def) {
    if (!has(obj, key)) return GainMatrix::scaled_identity(dim, def);
    const auto& v = obj.at(key);
    const std::string p = path + "." + key;
    if (v.is_number()) return GainMatrix::scaled_identity(dim, v.get<double>());
    if (v.is_array() && !v.empty() && v[0].is_array()) {
      if (static_cast<int>(v.size()) != dim) {
        fail(p, "expected " + std::to_string(dim) + " rows");
        return GainMatrix::scaled_identity(dim, def);
      }
      Eigen::MatrixXd m(dim, dim);
      for (int r = 0; r < dim; ++r) {
        const auto row = numbers(v[static_cast<std::size_t>(r)], p + "[" + std::to_string(r) + "]");
        if (static_cast<int>(row.size()) != dim) {
          fail(p + "[" + std::to_string(r) + "]", "expected " + std::to_string(dim) + " entries");
          return GainMatrix::scaled_identity(dim, def);
        }
        for (int c = 0; c < dim; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
      }
      return GainMatrix(m);
    }
    const auto d = numbers(v, p);
    if (static_cast<int>(d.size()) != dim) {
      fail(p, "expected " + std::to_string(dim) + " diagonal entries, got " + std::to_string(d.size()));
      return GainMatrix::scaled_identity(dim, def);
    }
    for (double x : d)
      if (x < 0.0) fail(p, "entries must be >= 0");
    return GainMatrix::diag(d);
  }
};

inline std::vector<Interval> read_bounds(ConfigReader& rd, const json& v, const std::string& path, int dim) {
  std::vector<Interval> out;
  auto pair = [&](const json& p, const std::string& at) -> Interval {
    const auto xs = rd.numbers(p, at);
    if (xs.size() != 2) {
      rd.fail(at, "expected [lo, hi]");
      return {};
    }
    if (!(xs[1] > xs[0])) rd.fail(at, "needs lo < hi");
    return {xs[0], xs[1]};
  };
  if (v.is_array() && v.size() == 2 && v[0].is_number()) {
    const Interval b = pair(v, path);
    out.assign(static_cast<std::size_t>(std::max(dim, 0)), b);
    return out;
  }
  if (!v.is_array() || static_cast<int>(v.size()) != dim) {
    rd.fail(path, "expected [lo, hi] or one pair per input dimension");
    return std::vector<Interval>(static_cast<std::size_t>(std::max(dim, 0)), Interval{});
  }
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(pair(v[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

}  // namespace detail

/// Validates and converts a parsed JSON document. Throws ConfigError listing
/// every problem.
inline ExperimentConfig parse_config(const nlohmann::json& doc) {
  using nlohmann::json;
  detail::ConfigReader rd;
  ExperimentConfig cfg;
  if (!doc.is_object()) throw ConfigError({"<root>: expected a JSON object"});

  int n = 0;
  int q = 0;
  if (!doc.contains("plant") || !doc["plant"].is_object() || !doc["plant"].contains("preset") ||
      !doc["plant"]["preset"].is_string()) {
    rd.fail("plant.preset", "required string");
  } else {
    const auto& pl = doc["plant"];
    cfg.preset = pl["preset"].get<std::string>();
    if (cfg.preset == Remark1Plant::kName && pl.contains("theta")) {
      const auto th = rd.numbers(pl["theta"], "plant.theta");
      if (th.size() != 4)
        rd.fail("plant.theta", "expected 4 values");
      else
        cfg.remark = {th[0], th[1], th[2], th[3]};
    }
    try {
      std::visit(
          [&](const auto& p) {
            n = p.order();
            q = p.param_dim();
          },
          make_plant(cfg));
    } catch (const std::invalid_argument&) {
      std::string known;
      for (const auto& s : preset_names()) known += (known.empty() ? "" : ", ") + s;
      rd.fail("plant.preset", "unknown preset '" + cfg.preset + "' (known: " + known + ")");
    }
  }

  if (doc.contains("x0")) cfg.x0 = rd.numbers(doc["x0"], "x0");
  if (n > 0 && static_cast<int>(cfg.x0.size()) != n)
    rd.fail("x0", "expected " + std::to_string(n) + " entries, got " + std::to_string(cfg.x0.size()));
  cfg.horizon = rd.positive(doc, "horizon", "", cfg.horizon);
  cfg.dt = rd.positive(doc, "dt", "", cfg.dt);
  if (cfg.dt > 0.0 && cfg.horizon > 0.0 && cfg.horizon / cfg.dt > kMaxSteps)
    rd.fail("horizon", "horizon/dt exceeds 1e8 steps");
  if (doc.contains("master_seed")) {
    if (doc["master_seed"].is_number_unsigned() || (doc["master_seed"].is_number_integer() && doc["master_seed"].get<long long>() >= 0))
      cfg.master_seed = doc["master_seed"].get<std::uint64_t>();
    else
      rd.fail("master_seed", "expected a non-negative integer");
  }
  cfg.runs = static_cast<int>(rd.integer(doc, "runs", "", cfg.runs));
  if (cfg.runs < 1) rd.fail("runs", "must be >= 1");
  cfg.record_stride = static_cast<int>(rd.integer(doc, "record_stride", "", cfg.record_stride));
  if (cfg.record_stride < 1) rd.fail("record_stride", "must be >= 1");
  if (doc.contains("derivatives")) {
    const auto& d = doc["derivatives"];
    if (d == "dual")
      cfg.derivatives = DerivativeMode::kDual;
    else if (d == "numeric")
      cfg.derivatives = DerivativeMode::kNumeric;
    else
      rd.fail("derivatives", "expected \"dual\" or \"numeric\"");
  }
  cfg.truth.noise = rd.boolean(doc, "noise", "", true);
  cfg.truth.disturbance = rd.boolean(doc, "disturbance", "", true);
  cfg.tail_start = rd.number(doc, "tail_start", "", cfg.tail_start);
  if (!(cfg.tail_start >= 0.0) || cfg.tail_start >= cfg.horizon) rd.fail("tail_start", "must lie in [0, horizon)");
  cfg.exceedance_level = rd.positive(doc, "exceedance_level", "", cfg.exceedance_level);
  cfg.drift_window = rd.number(doc, "drift_window", "", cfg.drift_window);
  if (!(cfg.drift_window >= 0.0)) rd.fail("drift_window", "must be >= 0");
  if (doc.contains("output_dir")) {
    if (doc["output_dir"].is_string())
      cfg.output_dir = doc["output_dir"].get<std::string>();
    else
      rd.fail("output_dir", "expected a string");
  }

  auto step_list = [&](const char* key, bool required) -> std::vector<json> {
    std::vector<json> out;
    if (!doc.contains(key)) {
      if (required) rd.fail(key, "required list with one entry per step");
      out.assign(static_cast<std::size_t>(n), json::object());
      return out;
    }
    const auto& v = doc[key];
    if (!v.is_array()) {
      rd.fail(key, "expected a list with one entry per step");
      return out;
    }
    for (const auto& e : v) out.push_back(e);
    if (n > 0 && static_cast<int>(out.size()) != n) {
      for (int i = static_cast<int>(out.size()); i < n; ++i)
        rd.fail(std::string(key) + "[" + std::to_string(i) + "]", "missing block for step " + std::to_string(i + 1));
      if (static_cast<int>(out.size()) > n)
        rd.fail(key, "has " + std::to_string(out.size()) + " entries for a plant of order " + std::to_string(n));
    }
    return out;
  };

  const auto nets = step_list("networks", true);
  const auto gains = step_list("gains", false);
  const auto inits = step_list("initial_estimates", false);

  for (std::size_t i = 0; i < nets.size() && static_cast<int>(i) < n; ++i) {
    const auto& v = nets[i];
    const std::string path = "networks[" + std::to_string(i) + "]";
    NetworkConfig nc;
    if (!v.is_object()) {
      rd.fail(path, "expected an object");
      cfg.networks.push_back(nc);
      continue;
    }
    const int cap = nn_input_capacity(static_cast<int>(i));
    nc.input_dim = static_cast<int>(rd.integer(v, "input_dim", path, cap));
    if (nc.input_dim < 1 || nc.input_dim > cap)
      rd.fail(path + ".input_dim", "must lie in [1, " + std::to_string(cap) + "] for step " + std::to_string(i + 1));
    nc.nodes = static_cast<int>(rd.integer(v, "nodes", path, 0));
    nc.width = rd.positive(v, "width", path, 1.0);
    const long seed = rd.integer(v, "layout_seed", path, 1);
    if (seed < 0) rd.fail(path + ".layout_seed", "must be >= 0");
    nc.layout_seed = static_cast<std::uint64_t>(std::max(seed, 0L));
    if (v.contains("centers")) {
      if (v["centers"] == "tensor-grid")
        nc.mode = CenterMode::kTensorGrid;
      else if (v["centers"] == "quasi-random")
        nc.mode = CenterMode::kQuasiRandom;
      else
        rd.fail(path + ".centers", "expected \"tensor-grid\" or \"quasi-random\"");
    }
    if (v.contains("bounds"))
      nc.bounds = detail::read_bounds(rd, v["bounds"], path + ".bounds", std::max(nc.input_dim, 0));
    else
      rd.fail(path + ".bounds", "required");
    if (v.contains("counts")) {
      for (double c : rd.numbers(v["counts"], path + ".counts")) nc.counts.push_back(static_cast<int>(c));
    } else if (nc.mode == CenterMode::kTensorGrid) {
      const double root = std::round(std::pow(static_cast<double>(nc.nodes), 1.0 / std::max(nc.input_dim, 1)));
      const int r = static_cast<int>(root);
      long prod = 1;
      for (int k = 0; k < nc.input_dim; ++k) prod *= r;
      if (prod == nc.nodes)
        nc.counts.assign(static_cast<std::size_t>(std::max(nc.input_dim, 0)), r);
      else
        rd.fail(path + ".counts", "required: " + std::to_string(nc.nodes) + " nodes are not a uniform lattice in " +
                                      std::to_string(nc.input_dim) + " dimensions");
    }
    if (nc.mode == CenterMode::kTensorGrid && !nc.counts.empty()) {
      long prod = 1;
      for (int c : nc.counts) prod *= c;
      if (static_cast<int>(nc.counts.size()) != nc.input_dim)
        rd.fail(path + ".counts", "expected one count per input dimension");
      else if (nc.nodes != 0 && prod != nc.nodes)
        rd.fail(path + ".counts", "product " + std::to_string(prod) + " differs from nodes = " + std::to_string(nc.nodes));
      if (nc.nodes == 0) nc.nodes = static_cast<int>(prod);
    }
    if (nc.nodes < 2) rd.fail(path + ".nodes", "must be >= 2");
    cfg.networks.push_back(nc);
  }

  for (int i = 0; i < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const json v = iu < gains.size() ? gains[iu] : json::object();
    const std::string path = "gains[" + std::to_string(i) + "]";
    StepGains g;
    if (!v.is_object()) rd.fail(path, "expected an object");
    g.c = rd.positive(v, "c", path, g.c);
    g.gamma_eps = rd.positive(v, "gamma_eps", path, g.gamma_eps);
    g.sigma_vartheta = rd.positive(v, "sigma_vartheta", path, g.sigma_vartheta);
    g.sigma_p = rd.positive(v, "sigma_p", path, g.sigma_p);
    g.sigma_eps = rd.positive(v, "sigma_eps", path, g.sigma_eps);
    g.sigma_w = rd.positive(v, "sigma_w", path, g.sigma_w);
    g.young_slack = rd.positive(v, "young_slack", path, g.young_slack);
    if (rd.has(v, "tanh_widths")) {
      const auto w = rd.numbers(v["tanh_widths"], path + ".tanh_widths");
      if (w.size() != 3) {
        rd.fail(path + ".tanh_widths", "expected 3 values");
      } else {
        for (double x : w)
          if (!(x > 0.0)) rd.fail(path + ".tanh_widths", "must be positive");
        g.tanh_width0 = w[0];
        g.tanh_width1 = w[1];
        g.tanh_width2 = w[2];
      }
    }
    const int nodes = iu < cfg.networks.size() ? cfg.networks[iu].nodes : 0;
    g.gamma_vartheta = rd.gain_matrix(v, "gamma_vartheta", path, q, 0.3);
    g.gamma_p = rd.gain_matrix(v, "gamma_p", path, i + 1, 0.3);
    g.gamma_w = rd.gain_matrix(v, "gamma_w", path, std::max(nodes, 0), 0.3);
    for (const auto* m : {&g.gamma_vartheta, &g.gamma_p})
      if (m->dim() > 0 && m->eigenvalues().maxCoeff() <= 0.0) rd.fail(path, "adaptation gains must not be all zero");
    cfg.gains.push_back(g);
  }

  for (int i = 0; i < n; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    const json v = iu < inits.size() ? inits[iu] : json::object();
    const std::string path = "initial_estimates[" + std::to_string(i) + "]";
    InitialEstimates ie;
    ie.vartheta.assign(static_cast<std::size_t>(q), 0.0);
    ie.p.assign(iu + 1, 0.0);
    if (!v.is_object()) rd.fail(path, "expected an object");
    if (rd.has(v, "vartheta")) {
      ie.vartheta = rd.numbers(v["vartheta"], path + ".vartheta");
      if (static_cast<int>(ie.vartheta.size()) != q) rd.fail(path + ".vartheta", "expected " + std::to_string(q) + " entries");
    }
    if (rd.has(v, "p")) {
      ie.p = rd.numbers(v["p"], path + ".p");
      if (ie.p.size() != iu + 1) rd.fail(path + ".p", "expected " + std::to_string(i + 1) + " entries");
    }
    ie.eps = rd.number(v, "eps", path, 0.0);
    if (rd.has(v, "W")) {
      if (v["W"].is_number()) {
        ie.w_fill = v["W"].get<double>();
      } else {
        ie.w = rd.numbers(v["W"], path + ".W");
        const int nodes = iu < cfg.networks.size() ? cfg.networks[iu].nodes : 0;
        if (static_cast<int>(ie.w.size()) != nodes) rd.fail(path + ".W", "expected " + std::to_string(nodes) + " entries");
      }
    }
    cfg.initial.push_back(ie);
  }

  if (!rd.errors.empty()) throw ConfigError(rd.errors);
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({std::string("parse error: ") + e.what()});
  }
  return parse_config(doc);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path + ": cannot open"});
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const ConfigError& e) {
    std::vector<std::string> probs;
    for (const auto& p : e.problems()) probs.push_back(path + ": " + p);
    throw ConfigError(probs);
  }
}

inline RbfNetwork build_network(const NetworkConfig& nc) {
  CenterLayout layout;
  layout.mode = nc.mode;
  layout.bounds = nc.bounds;
  layout.counts = nc.counts;
  layout.total = nc.nodes;
  layout.layout_seed = nc.layout_seed;
  return RbfNetwork(make_centers(layout), nc.width, nc.bounds);
}

template <StrictFeedbackPlant Plant>
BacksteppingController<Plant> build_controller(const Plant& plant, const ExperimentConfig& cfg) {
  std::vector<RbfNetwork> nets;
  for (const auto& nc : cfg.networks) nets.push_back(build_network(nc));
  return BacksteppingController<Plant>(plant, cfg.gains, std::move(nets), cfg.derivatives);
}

template <StrictFeedbackPlant Plant>
AdaptiveState initial_state(const BacksteppingController<Plant>& ctl, const ExperimentConfig& cfg) {
  AdaptiveState st = ctl.make_state();
  for (int i = 0; i < ctl.order(); ++i) {
    const auto& ie = cfg.initial.at(static_cast<std::size_t>(i));
    std::copy(ie.vartheta.begin(), ie.vartheta.end(), st.vartheta(i).begin());
    std::copy(ie.p.begin(), ie.p.end(), st.p(i).begin());
    st.eps(i) = ie.eps;
    auto w = st.w(i);
    if (ie.w.empty())
      std::fill(w.begin(), w.end(), ie.w_fill);
    else
      std::copy(ie.w.begin(), ie.w.end(), w.begin());
  }
  return st;
}

}  // namespace sanc
