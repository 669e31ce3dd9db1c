#pragma once

// Gaussian radial basis function networks, Q(Z) = W^T S(Z) with
// s_k(Z) = exp(-|Z - mu_k|^2 / eta^2) and a single width per network.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sanc {

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

enum class CenterMode { kTensorGrid, kQuasiRandom };

inline const char* to_string(CenterMode m) {
  return m == CenterMode::kTensorGrid ? "tensor-grid" : "quasi-random";
}

struct CenterLayout {
  CenterMode mode = CenterMode::kTensorGrid;
  std::vector<Interval> bounds;  // one interval per input dimension
  std::vector<int> counts;       // tensor-grid: nodes per dimension
  int total = 0;                 // requested node count
  std::uint64_t layout_seed = 1; // quasi-random: first Halton index

  int input_dim() const { return static_cast<int>(bounds.size()); }
};

class RbfNetwork {
 public:
  RbfNetwork() = default;
  RbfNetwork(Eigen::MatrixXd centers, double width, std::vector<Interval> bounds = {})
      : centers_(std::move(centers)), width_(width), bounds_(std::move(bounds)) {
    if (centers_.rows() < 2) throw std::invalid_argument("RBF network needs more than one node");
    if (centers_.cols() < 1) throw std::invalid_argument("RBF network needs input_dim >= 1");
    if (!(width_ > 0.0)) throw std::invalid_argument("RBF width must be positive");
    inv_width2_ = 1.0 / (width_ * width_);
  }

  int input_dim() const { return static_cast<int>(centers_.cols()); }
  int node_count() const { return static_cast<int>(centers_.rows()); }
  double width() const { return width_; }
  const Eigen::MatrixXd& centers() const { return centers_; }
  const std::vector<Interval>& bounds() const { return bounds_; }

  /// S(Z). Works for any scalar type with exp, +, *.
  template <class T>
  std::vector<T> basis(std::span<const T> z) const {
    using std::exp;
    if (static_cast<int>(z.size()) != input_dim())
      throw std::invalid_argument("RBF input has dimension " + std::to_string(z.size()) +
                                  ", network expects " + std::to_string(input_dim()));
    std::vector<T> s;
    s.reserve(static_cast<std::size_t>(node_count()));
    for (int k = 0; k < node_count(); ++k) {
      T dist2(0.0);
      for (int j = 0; j < input_dim(); ++j) {
        const T diff = z[j] - centers_(k, j);
        dist2 += diff * diff;
      }
      s.push_back(exp(dist2 * -inv_width2_));
    }
    return s;
  }

  std::vector<double> basis(const std::vector<double>& z) const {
    return basis<double>(std::span<const double>(z));
  }

  /// W^T S(Z).
  template <class T>
  T eval(std::span<const T> weights, std::span<const T> z) const {
    const auto s = basis<T>(z);
    if (weights.size() != s.size()) throw std::invalid_argument("RBF weight/node count mismatch");
    T acc(0.0);
    for (std::size_t k = 0; k < s.size(); ++k) acc += weights[k] * s[k];
    return acc;
  }

  double eval(const std::vector<double>& weights, const std::vector<double>& z) const {
    return eval<double>(std::span<const double>(weights), std::span<const double>(z));
  }

 private:
  Eigen::MatrixXd centers_;
  double width_ = 1.0;
  double inv_width2_ = 1.0;
  std::vector<Interval> bounds_;
};

namespace detail {

inline constexpr int kHaltonPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37,
                                        41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89};

inline double radical_inverse(std::uint64_t index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
    index /= static_cast<std::uint64_t>(base);
    f /= base;
  }
  return result;
}

}  // namespace detail

/// Center placement. Tensor grids include the interval endpoints; the
/// quasi-random mode takes consecutive Halton points starting at layout_seed.
inline Eigen::MatrixXd make_centers(const CenterLayout& layout) {
  const int q = layout.input_dim();
  if (q < 1) throw std::invalid_argument("center layout needs at least one dimension");
  for (const auto& b : layout.bounds)
    if (!(b.hi >= b.lo)) throw std::invalid_argument("center layout bound has hi < lo");

  if (layout.mode == CenterMode::kTensorGrid) {
    if (static_cast<int>(layout.counts.size()) != q)
      throw std::invalid_argument("tensor-grid layout needs one count per dimension");
    long product = 1;
    for (int c : layout.counts) {
      if (c < 1) throw std::invalid_argument("tensor-grid count must be >= 1");
      product *= c;
    }
    if (layout.total != 0 && product != layout.total)
      throw std::invalid_argument("tensor-grid counts multiply to " + std::to_string(product) +
                                  ", requested " + std::to_string(layout.total) + " nodes");
    Eigen::MatrixXd centers(product, q);
    for (long row = 0; row < product; ++row) {
      long rest = row;
      for (int j = q - 1; j >= 0; --j) {
        const int c = layout.counts[static_cast<std::size_t>(j)];
        const long idx = rest % c;
        rest /= c;
        const auto& b = layout.bounds[static_cast<std::size_t>(j)];
        centers(row, j) =
            c == 1 ? 0.5 * (b.lo + b.hi) : b.lo + (b.hi - b.lo) * static_cast<double>(idx) / (c - 1);
      }
    }
    return centers;
  }

  if (layout.total < 2) throw std::invalid_argument("quasi-random layout needs total >= 2");
  if (q > static_cast<int>(std::size(detail::kHaltonPrimes)))
    throw std::invalid_argument("quasi-random layout supports at most 24 dimensions");
  Eigen::MatrixXd centers(layout.total, q);
  for (int row = 0; row < layout.total; ++row) {
    const std::uint64_t index = layout.layout_seed + static_cast<std::uint64_t>(row);
    for (int j = 0; j < q; ++j) {
      const auto& b = layout.bounds[static_cast<std::size_t>(j)];
      centers(row, j) = b.lo + (b.hi - b.lo) * detail::radical_inverse(index, detail::kHaltonPrimes[j]);
    }
  }
  return centers;
}

struct FitSample {
  std::vector<double> z;
  double target = 0.0;
};

struct LeastSquaresFit {
  Eigen::VectorXd weights;
  long rank = 0;  // numerical rank of the design matrix
  long cols = 0;

  bool rank_deficient() const { return rank < cols; }
};

/// Weights minimizing the squared residual of W^T S(Z) over the samples.
/// A rank-deficient design is reported through `rank` and solved in the
/// minimum-norm sense. `ridge` > 0 adds Tikhonov regularization instead.
inline LeastSquaresFit fit_least_squares(const Eigen::MatrixXd& centers, double width,
                                         const std::vector<FitSample>& samples, double ridge = 0.0) {
  const RbfNetwork net(centers, width);
  const auto l = static_cast<Eigen::Index>(net.node_count());
  if (static_cast<Eigen::Index>(samples.size()) < l)
    throw std::invalid_argument("fit_least_squares needs at least as many samples as nodes");
  Eigen::MatrixXd design(static_cast<Eigen::Index>(samples.size()), l);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const auto s = net.basis(samples[r].z);
    for (Eigen::Index k = 0; k < l; ++k) design(static_cast<Eigen::Index>(r), k) = s[static_cast<std::size_t>(k)];
    rhs[static_cast<Eigen::Index>(r)] = samples[r].target;
  }
  LeastSquaresFit fit;
  fit.cols = l;
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  fit.rank = cod.rank();
  if (ridge > 0.0) {
    Eigen::MatrixXd normal = design.transpose() * design;
    normal.diagonal().array() += ridge;
    fit.weights = normal.ldlt().solve(design.transpose() * rhs);
  } else {
    fit.weights = cod.solve(rhs);
  }
  return fit;
}

}  // namespace sanc
