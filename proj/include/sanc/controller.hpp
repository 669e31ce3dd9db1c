#pragma once

// Adaptive neural backstepping control law for strict-feedback stochastic
// plants.
//
// Step i (0-based) works with z_i = x_i - alpha_{i-1} and the virtual control
//
//   alpha_i = g_i^{-1} [ -c_i z_i - z_i/4 [i>0] - (3/4)|g_i|^{4/3} z_i [i<n-1]
//                        - beta_i0 - beta_i1 - beta_i2 - W_i^T S(Z_i)
//                        + 1/2 sum_{k,j<i} d2alpha_{i-1}/dx_k dx_j (phi_k . phi_j)
//                        + sum_{j<i} dalpha_{i-1}/dx_j g_j x_{j+1}
//                        + sum_{e} dalpha_{i-1}/dhat_e * hat_e'
//                        - (3 z_i / (4 young_i)) |phi_i - sum_{j<i} dalpha_{i-1}/dx_j phi_j|^4 ]
//
// and the last step yields the plant input u. The beta terms are the tanh
// smoothed bound compensations
//
//   beta_i0 = eps_hat_i tanh(z^3/e0)
//   beta_i1 = p_hat_i^T (Phi_i (.) tanh(z^3 Phi_i / e1))
//   beta_i2 = vartheta_hat_i^T (vphi_i (.) tanh(z^3 vphi_i / e2))
//
// with Phi_i = (dalpha/dx_0 Phi*_0, ..., dalpha/dx_{i-1} Phi*_{i-1}, Phi*_i)
// and vphi_i = varphi*_i - sum_{j<i} dalpha_{i-1}/dx_j varphi*_j, a q-vector.
//
// The derivatives of alpha_{i-1} (states: gradient and Hessian; estimates:
// gradient) are either propagated exactly through the recursion with nested
// Jets, or taken by central differences.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sanc/jet.hpp"
#include "sanc/plant.hpp"
#include "sanc/rbf.hpp"

namespace sanc {

inline constexpr double kGainFloor = 1e-9;
/// Dual-mode nesting depth; supports plants up to order kMaxDualDepth + 1.
inline constexpr int kMaxDualDepth = 3;

enum class DerivativeMode { kNumeric, kDual };

inline const char* to_string(DerivativeMode m) { return m == DerivativeMode::kDual ? "dual" : "numeric"; }

class SingularGainError : public std::runtime_error {
 public:
  SingularGainError(int step, double value)
      : std::runtime_error("|g_" + std::to_string(step + 1) + "| = " + std::to_string(value) +
                           " below gain floor") {}
};

/// Symmetric positive semi-definite adaptation gain. Zero eigen-directions
/// freeze the corresponding estimate components.
class GainMatrix {
 public:
  GainMatrix() = default;
  explicit GainMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
    diagonal_ = m_.isDiagonal(0.0);
  }
  static GainMatrix diag(const std::vector<double>& d) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(d.size()));
    for (std::size_t k = 0; k < d.size(); ++k) v[static_cast<Eigen::Index>(k)] = d[k];
    return GainMatrix(v.asDiagonal().toDenseMatrix());
  }
  static GainMatrix scaled_identity(int dim, double s) {
    return GainMatrix(Eigen::MatrixXd::Identity(dim, dim) * s);
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  bool is_diagonal() const { return diagonal_; }

  template <class T>
  std::vector<T> apply(const std::vector<T>& v) const {
    const auto n = static_cast<std::size_t>(m_.rows());
    std::vector<T> out(n, T(0.0));
    if (diagonal_) {
      for (std::size_t k = 0; k < n; ++k) {
        const double gk = m_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
        if (gk != 0.0) out[k] = gk * v[k];
      }
      return out;
    }
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) {
        const double gkl = m_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
        if (gkl != 0.0) out[k] += gkl * v[l];
      }
    return out;
  }

  /// Eigenvalues, ascending.
  Eigen::VectorXd eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
  }

  bool symmetric() const { return m_.isApprox(m_.transpose(), 1e-12) || m_.isZero(0.0); }

 private:
  Eigen::MatrixXd m_;
  bool diagonal_ = true;
};

/// Designer constants of one backstepping step.
struct StepGains {
  double c = 0.3;
  GainMatrix gamma_vartheta;
  GainMatrix gamma_p;
  double gamma_eps = 0.3;
  GainMatrix gamma_w;
  double sigma_vartheta = 0.3;
  double sigma_p = 0.3;
  double sigma_eps = 0.3;
  double sigma_w = 0.3;
  double tanh_width0 = 0.3;  // e_i0
  double tanh_width1 = 0.3;  // e_i1
  double tanh_width2 = 0.3;  // e_i2
  double young_slack = 0.3;  // Young slack in the diffusion term
};

/// Flat storage order of the estimates: for each step i,
/// [vartheta_i (q) | p_i (i+1) | eps_i (1) | W_i (l_i)].
class EstimateLayout {
 public:
  struct Block {
    std::size_t vartheta = 0, p = 0, eps = 0, w = 0, end = 0;
    std::size_t vartheta_len = 0, p_len = 0, w_len = 0;
  };

  EstimateLayout() = default;
  EstimateLayout(int order, int param_dim, const std::vector<int>& node_counts) {
    if (static_cast<int>(node_counts.size()) != order)
      throw std::invalid_argument("estimate layout needs one node count per step");
    std::size_t off = 0;
    for (int i = 0; i < order; ++i) {
      Block b;
      b.vartheta = off;
      b.vartheta_len = static_cast<std::size_t>(param_dim);
      b.p = b.vartheta + b.vartheta_len;
      b.p_len = static_cast<std::size_t>(i + 1);
      b.eps = b.p + b.p_len;
      b.w = b.eps + 1;
      b.w_len = static_cast<std::size_t>(node_counts[static_cast<std::size_t>(i)]);
      b.end = b.w + b.w_len;
      off = b.end;
      blocks_.push_back(b);
    }
  }

  int order() const { return static_cast<int>(blocks_.size()); }
  const Block& block(int i) const { return blocks_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return blocks_.empty() ? 0 : blocks_.back().end; }
  /// Number of flat entries belonging to steps 0..i-1.
  std::size_t prefix(int i) const { return i <= 0 ? 0 : block(i - 1).end; }

 private:
  std::vector<Block> blocks_;
};

/// Online estimates vartheta_hat, p_hat, eps_hat, W_hat of every step.
class AdaptiveState {
 public:
  AdaptiveState() = default;
  explicit AdaptiveState(EstimateLayout layout)
      : layout_(std::move(layout)), values_(layout_.size(), 0.0) {}

  const EstimateLayout& layout() const { return layout_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  std::span<double> vartheta(int i) { return slice(layout_.block(i).vartheta, layout_.block(i).vartheta_len); }
  std::span<double> p(int i) { return slice(layout_.block(i).p, layout_.block(i).p_len); }
  double& eps(int i) { return values_[layout_.block(i).eps]; }
  std::span<double> w(int i) { return slice(layout_.block(i).w, layout_.block(i).w_len); }

  std::span<const double> vartheta(int i) const { return cslice(layout_.block(i).vartheta, layout_.block(i).vartheta_len); }
  std::span<const double> p(int i) const { return cslice(layout_.block(i).p, layout_.block(i).p_len); }
  double eps(int i) const { return values_[layout_.block(i).eps]; }
  std::span<const double> w(int i) const { return cslice(layout_.block(i).w, layout_.block(i).w_len); }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

 private:
  std::span<double> slice(std::size_t off, std::size_t len) { return {values_.data() + off, len}; }
  std::span<const double> cslice(std::size_t off, std::size_t len) const { return {values_.data() + off, len}; }

  EstimateLayout layout_;
  std::vector<double> values_;
};

/// Derivatives of alpha_{step-1} needed by step `step`.
template <class T>
struct StepScratch {
  int step = 0;
  T alpha{};                  // alpha_{step-1}
  std::vector<T> grad_x;      // d/dx_j, j < step
  std::vector<T> hess_x;      // step x step, row-major
  std::vector<T> grad_est;    // d/d hat_e over blocks 0..step-1

  const T& hess(int k, int j) const { return hess_x[static_cast<std::size_t>(k * step + j)]; }
};

/// tanh-smoothed bound compensation of one step.
template <class T>
struct BoundTerms {
  T beta0{}, beta1{}, beta2{};
  T varpi0{};
  std::vector<T> varpi1, varpi2;
};

/// Everything step i produces.
template <class T>
struct StepTerms {
  T z{};
  T control{};  // alpha_i, or u on the last step
  T gain{};
  BoundTerms<T> bounds;
  std::vector<T> nn_input;
  std::vector<T> basis;
  T nn_output{};
};

// ---- building blocks -------------------------------------------------------

/// z_0 = x_0, z_i = x_i - alpha_{i-1}.
template <class T>
std::vector<T> coord_change(std::span<const T> x, std::span<const T> alphas) {
  if (!x.empty() && alphas.size() + 1 < x.size())
    throw std::invalid_argument("coord_change needs n-1 virtual controls");
  std::vector<T> z(x.begin(), x.end());
  for (std::size_t i = 1; i < x.size(); ++i) z[i] = x[i] - alphas[i - 1];
  return z;
}

/// beta/varpi terms of one step given the Phi and varphi stacks.
template <class T>
BoundTerms<T> tanh_bound_terms(const T& z, const std::vector<T>& phi_stack, const std::vector<T>& varphi_stack,
                               const T& eps_hat, std::span<const T> p_hat, std::span<const T> vartheta_hat,
                               double width0, double width1, double width2) {
  using std::tanh;
  if (p_hat.size() != phi_stack.size() || vartheta_hat.size() != varphi_stack.size())
    throw std::invalid_argument("tanh_bound_terms: estimate and stack dimensions differ");
  const T z3 = z * z * z;
  BoundTerms<T> out;
  out.varpi0 = tanh(z3 / width0);
  out.beta0 = eps_hat * out.varpi0;
  out.beta1 = T(0.0);
  out.varpi1.reserve(phi_stack.size());
  for (std::size_t k = 0; k < phi_stack.size(); ++k) {
    out.varpi1.push_back(phi_stack[k] * tanh(z3 * phi_stack[k] / width1));
    out.beta1 += p_hat[k] * out.varpi1.back();
  }
  out.beta2 = T(0.0);
  out.varpi2.reserve(varphi_stack.size());
  for (std::size_t k = 0; k < varphi_stack.size(); ++k) {
    out.varpi2.push_back(varphi_stack[k] * tanh(z3 * varphi_stack[k] / width2));
    out.beta2 += vartheta_hat[k] * out.varpi2.back();
  }
  return out;
}

/// Time derivatives of (vartheta_hat, p_hat, eps_hat, W_hat) for one step,
/// written into `rates` at the step's block offsets:
///   eps'      = gamma_eps (z^3 varpi0 - sigma_eps eps)
///   p'        = Gamma_p   (z^3 varpi1 - sigma_p p)
///   vartheta' = Gamma_vt  (z^3 varpi2 - sigma_vt vartheta)
///   W'        = Gamma_w   (z^3 S      - sigma_w W)
template <class T>
void adaptive_rates(const EstimateLayout::Block& blk, const T& z, const BoundTerms<T>& terms,
                    const std::vector<T>& basis, std::span<const T> est, const StepGains& gains,
                    std::span<T> rates) {
  const T z3 = z * z * z;
  auto block_rate = [&](std::size_t off, std::size_t len, const std::vector<T>& drive, double sigma,
                        const GainMatrix& gamma) {
    std::vector<T> inner(len);
    for (std::size_t k = 0; k < len; ++k) inner[k] = z3 * drive[k] - sigma * est[off + k];
    const auto r = gamma.apply(inner);
    for (std::size_t k = 0; k < len; ++k) rates[off + k] = r[k];
  };
  block_rate(blk.vartheta, blk.vartheta_len, terms.varpi2, gains.sigma_vartheta, gains.gamma_vartheta);
  block_rate(blk.p, blk.p_len, terms.varpi1, gains.sigma_p, gains.gamma_p);
  rates[blk.eps] = gains.gamma_eps * (z3 * terms.varpi0 - gains.sigma_eps * est[blk.eps]);
  block_rate(blk.w, blk.w_len, basis, gains.sigma_w, gains.gamma_w);
}

/// Available length of the NN input of step i: 1 for i = 0, else 2i + 2.
inline int nn_input_capacity(int i) { return i == 0 ? 1 : 2 * i + 2; }

/// Z_0 = [x_0]; Z_i = [x_0..x_i, alpha_{i-1}, dalpha_{i-1}/dx_0..dx_{i-1}],
/// truncated to `input_dim`.
template <class T>
std::vector<T> nn_input(int i, std::span<const T> x, const T& alpha_prev, std::span<const T> grad_prev,
                        int input_dim) {
  if (input_dim < 1 || input_dim > nn_input_capacity(i))
    throw std::invalid_argument("network of step " + std::to_string(i + 1) + " has input_dim " +
                                std::to_string(input_dim) + ", step provides at most " +
                                std::to_string(nn_input_capacity(i)));
  std::vector<T> z;
  z.reserve(static_cast<std::size_t>(input_dim));
  for (int j = 0; j <= i && static_cast<int>(z.size()) < input_dim; ++j) z.push_back(x[static_cast<std::size_t>(j)]);
  if (i > 0) {
    if (static_cast<int>(z.size()) < input_dim) z.push_back(alpha_prev);
    for (int j = 0; j < i && static_cast<int>(z.size()) < input_dim; ++j)
      z.push_back(grad_prev[static_cast<std::size_t>(j)]);
  }
  return z;
}

/// Result of evaluating the recursion up to some step at scalar type T.
template <class T>
struct ChainResult {
  std::vector<StepTerms<T>> steps;
  std::vector<StepScratch<T>> scratch;  // scratch[i] feeds step i (empty for i = 0)
  std::vector<T> rates;                 // flat estimate rates, filled for evaluated blocks
};

/// Double-precision output of a full controller evaluation.
struct ControlOutput {
  double u = 0.0;
  std::vector<double> z;
  std::vector<double> alpha;  // alpha_0..alpha_{n-2}
  std::vector<double> rates;  // flat, AdaptiveState layout
  std::vector<BoundTerms<double>> bounds;
};

template <StrictFeedbackPlant Plant>
class BacksteppingController {
 public:
  BacksteppingController(Plant plant, std::vector<StepGains> gains, std::vector<RbfNetwork> networks,
                         DerivativeMode mode = DerivativeMode::kDual)
      : plant_(std::move(plant)), gains_(std::move(gains)), nets_(std::move(networks)), mode_(mode) {
    const int n = plant_.order();
    if (static_cast<int>(gains_.size()) != n) throw std::invalid_argument("need one gain set per step");
    if (static_cast<int>(nets_.size()) != n) throw std::invalid_argument("need one network per step");
    if (mode_ == DerivativeMode::kDual && n - 1 > kMaxDualDepth)
      throw std::invalid_argument("dual derivative mode supports plant order <= " +
                                  std::to_string(kMaxDualDepth + 1));
    std::vector<int> nodes;
    for (int i = 0; i < n; ++i) {
      const auto& net = nets_[static_cast<std::size_t>(i)];
      if (net.input_dim() > nn_input_capacity(i))
        throw std::invalid_argument("network " + std::to_string(i + 1) + " input_dim exceeds " +
                                    std::to_string(nn_input_capacity(i)));
      nodes.push_back(net.node_count());
    }
    layout_ = EstimateLayout(n, plant_.param_dim(), nodes);
    validate_gains();
  }

  const Plant& plant() const { return plant_; }
  const std::vector<StepGains>& gains() const { return gains_; }
  const std::vector<RbfNetwork>& networks() const { return nets_; }
  const EstimateLayout& layout() const { return layout_; }
  DerivativeMode mode() const { return mode_; }
  void set_mode(DerivativeMode m) { mode_ = m; }
  int order() const { return plant_.order(); }

  AdaptiveState make_state() const { return AdaptiveState(layout_); }

  /// u, z, alpha and every estimate rate at (x, estimates).
  ControlOutput evaluate(std::span<const double> x, const AdaptiveState& est) const {
    const int n = order();
    const auto res = chain<kMaxDualDepth, double>(n - 1, x, std::span<const double>(est.values()), true);
    ControlOutput out;
    out.u = res.steps.back().control;
    out.rates = res.rates;
    for (const auto& s : res.steps) {
      out.z.push_back(s.z);
      out.bounds.push_back(s.bounds);
    }
    for (int i = 0; i + 1 < n; ++i) out.alpha.push_back(res.steps[static_cast<std::size_t>(i)].control);
    return out;
  }

  /// alpha_i for i < n-1; u for i = n-1.
  double alpha(int i, std::span<const double> x, const AdaptiveState& est) const {
    return chain<kMaxDualDepth, double>(i, x, std::span<const double>(est.values()), false)
        .steps.back()
        .control;
  }

  double control(std::span<const double> x, const AdaptiveState& est) const { return alpha(order() - 1, x, est); }

  /// Derivatives of alpha_{i-1} in the requested mode (i >= 1).
  StepScratch<double> compute_scratch(int i, std::span<const double> x, const AdaptiveState& est,
                                      DerivativeMode mode) const {
    if (i < 1 || i >= order()) throw std::invalid_argument("compute_scratch needs 1 <= i < n");
    const auto saved = mode_;
    auto* self = const_cast<BacksteppingController*>(this);
    self->mode_ = mode;
    StepScratch<double> sc;
    try {
      sc = scratch<kMaxDualDepth, double>(i, x, std::span<const double>(est.values()));
    } catch (...) {
      self->mode_ = saved;
      throw;
    }
    self->mode_ = saved;
    return sc;
  }

  /// Runs steps 0..upto at scalar type T. Rates of the last step are only
  /// computed on request.
  template <int Depth, class T>
  ChainResult<T> chain(int upto, std::span<const T> x, std::span<const T> est, bool last_rates) const {
    ChainResult<T> out;
    out.rates.assign(layout_.prefix(upto + 1), T(0.0));
    out.scratch.resize(static_cast<std::size_t>(upto + 1));
    for (int i = 0; i <= upto; ++i) {
      if (i > 0) out.scratch[static_cast<std::size_t>(i)] = scratch<Depth, T>(i, x, est);
      out.steps.push_back(step_terms(i, x, est, out.scratch[static_cast<std::size_t>(i)], out.rates));
      if (i < upto || last_rates) {
        const auto& st = out.steps.back();
        adaptive_rates(layout_.block(i), st.z, st.bounds, st.basis, est, gains_[static_cast<std::size_t>(i)],
                       std::span<T>(out.rates));
      }
    }
    return out;
  }

 private:
  template <int Depth, class T>
  StepScratch<T> scratch(int i, std::span<const T> x, std::span<const T> est) const {
    if (mode_ == DerivativeMode::kNumeric) return numeric_scratch<Depth, T>(i, x, est);
    if constexpr (Depth > 0) {
      return dual_scratch<Depth, T>(i, x, est);
    } else {
      throw std::logic_error("dual derivative nesting depth exhausted");
    }
  }

  template <int Depth, class T>
  StepScratch<T> dual_scratch(int i, std::span<const T> x, std::span<const T> est) const {
    using J = Jet<T>;
    const std::size_t n_est = layout_.prefix(i);
    const int m = i + static_cast<int>(n_est);
    std::vector<J> xj;
    xj.reserve(x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
      xj.push_back(static_cast<int>(j) < i ? J::variable(x[j], static_cast<int>(j), m, i) : lift(x[j]));
    std::vector<J> ej;
    ej.reserve(est.size());
    for (std::size_t e = 0; e < est.size(); ++e)
      ej.push_back(e < n_est ? J::variable(est[e], i + static_cast<int>(e), m, i) : lift(est[e]));

    const auto inner = chain<Depth - 1, J>(i - 1, std::span<const J>(xj), std::span<const J>(ej), false);
    const J& a = inner.steps.back().control;

    StepScratch<T> sc;
    sc.step = i;
    sc.alpha = a.v;
    sc.grad_x.assign(static_cast<std::size_t>(i), T(0.0));
    sc.hess_x.assign(static_cast<std::size_t>(i * i), T(0.0));
    sc.grad_est.assign(n_est, T(0.0));
    if (!a.d.empty()) {
      for (int j = 0; j < i; ++j) sc.grad_x[static_cast<std::size_t>(j)] = a.d[static_cast<std::size_t>(j)];
      for (std::size_t k = 0; k < sc.hess_x.size(); ++k) sc.hess_x[k] = a.h[k];
      for (std::size_t e = 0; e < n_est; ++e) sc.grad_est[e] = a.d[static_cast<std::size_t>(i) + e];
    }
    check_finite(sc);
    return sc;
  }

  template <int Depth, class T>
  StepScratch<T> numeric_scratch(int i, std::span<const T> x, std::span<const T> est) const {
    constexpr double kFirstStep = 1e-5;
    constexpr double kSecondStep = 1e-3;
    const std::size_t n_est = layout_.prefix(i);
    std::vector<T> xv(x.begin(), x.end());
    std::vector<T> ev(est.begin(), est.end());
    auto f = [&]() {
      return chain<Depth, T>(i - 1, std::span<const T>(xv), std::span<const T>(ev), false).steps.back().control;
    };
    auto step_for = [](const T& v, double base) { return base * std::max(1.0, std::abs(value_of(v))); };

    StepScratch<T> sc;
    sc.step = i;
    sc.alpha = f();
    sc.grad_x.assign(static_cast<std::size_t>(i), T(0.0));
    sc.hess_x.assign(static_cast<std::size_t>(i * i), T(0.0));
    sc.grad_est.assign(n_est, T(0.0));

    for (int j = 0; j < i; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const T x0 = xv[ju];
      const double h = step_for(x0, kFirstStep);
      xv[ju] = x0 + h;
      const T fp = f();
      xv[ju] = x0 - h;
      const T fm = f();
      xv[ju] = x0;
      sc.grad_x[ju] = (fp - fm) / (2.0 * h);
    }
    for (int k = 0; k < i; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      const T xk = xv[ku];
      const double hk = step_for(xk, kSecondStep);
      xv[ku] = xk + hk;
      const T fp = f();
      xv[ku] = xk - hk;
      const T fm = f();
      xv[ku] = xk;
      sc.hess_x[static_cast<std::size_t>(k * i + k)] = (fp - 2.0 * sc.alpha + fm) / (hk * hk);
      for (int j = k + 1; j < i; ++j) {
        const auto jv = static_cast<std::size_t>(j);
        const T xj = xv[jv];
        const double hj = step_for(xj, kSecondStep);
        auto at = [&](double sk, double sj) {
          xv[ku] = xk + sk * hk;
          xv[jv] = xj + sj * hj;
          return f();
        };
        const T mixed = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * hk * hj);
        xv[ku] = xk;
        xv[jv] = xj;
        sc.hess_x[static_cast<std::size_t>(k * i + j)] = mixed;
        sc.hess_x[static_cast<std::size_t>(j * i + k)] = mixed;
      }
    }
    for (std::size_t e = 0; e < n_est; ++e) {
      const T e0 = ev[e];
      const double h = step_for(e0, kFirstStep);
      ev[e] = e0 + h;
      const T fp = f();
      ev[e] = e0 - h;
      const T fm = f();
      ev[e] = e0;
      sc.grad_est[e] = (fp - fm) / (2.0 * h);
    }
    check_finite(sc);
    return sc;
  }

  template <class T>
  static Jet<T> lift(const T& v) {
    Jet<T> j;
    j.v = v;
    return j;
  }

  template <class T>
  static void check_finite(const StepScratch<T>& sc) {
    auto bad = [](const T& v) { return !std::isfinite(value_of(v)); };
    bool fail = bad(sc.alpha);
    for (const auto& v : sc.grad_x) fail = fail || bad(v);
    for (const auto& v : sc.hess_x) fail = fail || bad(v);
    for (const auto& v : sc.grad_est) fail = fail || bad(v);
    if (fail) throw DivergenceError(0, "non-finite derivative of alpha_" + std::to_string(sc.step));
  }

  template <class T>
  StepTerms<T> step_terms(int i, std::span<const T> x, std::span<const T> est, const StepScratch<T>& sc,
                          const std::vector<T>& rates) const {
    using std::abs;
    using std::pow;
    const int n = order();
    const auto iu = static_cast<std::size_t>(i);
    const auto& gains = gains_[iu];
    const auto& blk = layout_.block(i);

    StepTerms<T> st;
    st.z = i == 0 ? x[0] : x[iu] - sc.alpha;
    st.gain = plant_.template g<T>(i, x);
    if (std::abs(value_of(st.gain)) < kGainFloor) throw SingularGainError(i, value_of(st.gain));

    // Phi stack (dimension i+1), varphi stack (dimension q), diffusion combination.
    std::vector<T> phi_stack;
    phi_stack.reserve(iu + 1);
    for (int j = 0; j < i; ++j)
      phi_stack.push_back(sc.grad_x[static_cast<std::size_t>(j)] * plant_.template disturbance_envelope<T>(j, x));
    phi_stack.push_back(plant_.template disturbance_envelope<T>(i, x));

    std::vector<T> varphi_stack = plant_.template psi_envelope<T>(i, x);
    std::vector<T> noise = plant_.template phi<T>(i, x);
    std::vector<std::vector<T>> phis;
    if (i > 0) {
      for (int j = 0; j < i; ++j) {
        const T& dj = sc.grad_x[static_cast<std::size_t>(j)];
        const auto env = plant_.template psi_envelope<T>(j, x);
        for (std::size_t k = 0; k < varphi_stack.size(); ++k) varphi_stack[k] -= dj * env[k];
        phis.push_back(plant_.template phi<T>(j, x));
        for (std::size_t k = 0; k < noise.size(); ++k) noise[k] -= dj * phis.back()[k];
      }
    }

    st.bounds = tanh_bound_terms<T>(st.z, phi_stack, varphi_stack, est[blk.eps],
                                    est.subspan(blk.p, blk.p_len), est.subspan(blk.vartheta, blk.vartheta_len),
                                    gains.tanh_width0, gains.tanh_width1, gains.tanh_width2);

    const auto& net = nets_[iu];
    st.nn_input = nn_input<T>(i, x, sc.alpha, std::span<const T>(sc.grad_x), net.input_dim());
    st.basis = net.template basis<T>(std::span<const T>(st.nn_input));
    st.nn_output = T(0.0);
    for (std::size_t k = 0; k < st.basis.size(); ++k) st.nn_output += est[blk.w + k] * st.basis[k];

    T norm2(0.0);
    for (const auto& v : noise) norm2 += v * v;

    T bracket = -gains.c * st.z;
    if (i > 0) bracket -= 0.25 * st.z;
    if (i < n - 1) bracket -= 0.75 * (pow(abs(st.gain), 4.0 / 3.0) * st.z);
    bracket -= st.bounds.beta0;
    bracket -= st.bounds.beta1;
    bracket -= st.bounds.beta2;
    bracket -= st.nn_output;
    bracket -= (3.0 / (4.0 * gains.young_slack)) * (st.z * (norm2 * norm2));

    if (i > 0) {
      // Ito correction of alpha_{i-1}.
      T ito(0.0);
      for (int k = 0; k < i; ++k)
        for (int j = 0; j < i; ++j) {
          T dot(0.0);
          for (std::size_t r = 0; r < phis[0].size(); ++r)
            dot += phis[static_cast<std::size_t>(k)][r] * phis[static_cast<std::size_t>(j)][r];
          ito += sc.hess(k, j) * dot;
        }
      bracket += 0.5 * ito;
      // Known part of the drift of alpha_{i-1}.
      for (int j = 0; j < i; ++j)
        bracket += sc.grad_x[static_cast<std::size_t>(j)] *
                   (plant_.template g<T>(j, x) * x[static_cast<std::size_t>(j + 1)]);
      for (std::size_t e = 0; e < sc.grad_est.size(); ++e) bracket += sc.grad_est[e] * rates[e];
    }
    st.control = bracket / st.gain;
    return st;
  }

  void validate_gains() const {
    const int n = order();
    for (int i = 0; i < n; ++i) {
      const auto& g = gains_[static_cast<std::size_t>(i)];
      const auto& blk = layout_.block(i);
      const std::string at = "step " + std::to_string(i + 1) + ": ";
      auto positive = [&](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(at + name + " must be positive");
      };
      positive(g.c, "c");
      positive(g.gamma_eps, "gamma_eps");
      positive(g.sigma_vartheta, "sigma_vartheta");
      positive(g.sigma_p, "sigma_p");
      positive(g.sigma_eps, "sigma_eps");
      positive(g.sigma_w, "sigma_w");
      positive(g.tanh_width0, "tanh_width0");
      positive(g.tanh_width1, "tanh_width1");
      positive(g.tanh_width2, "tanh_width2");
      positive(g.young_slack, "young_slack");
      auto check = [&](const GainMatrix& m, std::size_t dim, const char* name) {
        if (static_cast<std::size_t>(m.dim()) != dim)
          throw std::invalid_argument(at + name + " must be " + std::to_string(dim) + "x" + std::to_string(dim));
        if (!m.symmetric()) throw std::invalid_argument(at + name + " must be symmetric");
        const auto ev = m.eigenvalues();
        if (ev.minCoeff() < -1e-12 || ev.maxCoeff() <= 0.0)
          throw std::invalid_argument(at + name + " must be positive semi-definite and nonzero");
      };
      check(g.gamma_vartheta, blk.vartheta_len, "Gamma_vartheta");
      check(g.gamma_p, blk.p_len, "Gamma_p");
      check(g.gamma_w, blk.w_len, "Gamma_w");
    }
  }

  Plant plant_;
  std::vector<StepGains> gains_;
  std::vector<RbfNetwork> nets_;
  DerivativeMode mode_;
  EstimateLayout layout_;
};

}  // namespace sanc
