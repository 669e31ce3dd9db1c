#pragma once

// Forward-mode automatic differentiation.
//
// Jet<T> carries a value, the gradient with respect to m seeded variables, and
// the Hessian block over the first nh of those variables. Only that leading
// block gets second derivatives, which is all the backstepping recursion
// needs (Hessian in the states, gradient in the estimates) and keeps the cost
// linear in the number of estimate entries. Jets nest: Jet<Jet<double>>
// differentiates a computation that itself carries derivatives.
//
// Constants are represented with empty derivative storage.

#include <cmath>
#include <cstddef>
#include <type_traits>
#include <vector>

namespace sanc {

template <class T>
struct Jet;

inline double value_of(double x) { return x; }

template <class T>
double value_of(const Jet<T>& j) {
  return value_of(j.v);
}

template <class T>
struct Jet {
  T v{};
  std::vector<T> d;
  std::vector<T> h;
  int nh = 0;

  Jet() = default;
  Jet(double c) : v(c) {}  // NOLINT: implicit lift of literals is intended
  template <class U = T>
    requires(!std::is_same_v<U, double>)
  explicit Jet(const T& c) : v(c) {}

  /// Seeded variable `index` of `m`, with a Hessian block over the first `nh`.
  static Jet variable(const T& value, int index, int m, int nh) {
    Jet j(value);
    j.d.assign(static_cast<std::size_t>(m), T(0.0));
    j.d[static_cast<std::size_t>(index)] = T(1.0);
    j.nh = nh;
    j.h.assign(static_cast<std::size_t>(nh * nh), T(0.0));
    return j;
  }

  bool is_constant() const { return d.empty(); }

  const T& hess(int k, int l) const { return h[static_cast<std::size_t>(k * nh + l)]; }

  Jet& operator+=(const Jet& o) {
    v += o.v;
    accumulate(o, 1.0);
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    v -= o.v;
    accumulate(o, -1.0);
    return *this;
  }
  Jet& operator*=(double c) {
    v *= c;
    for (auto& x : d) x *= c;
    for (auto& x : h) x *= c;
    return *this;
  }

 private:
  void accumulate(const Jet& o, double sign) {
    if (o.d.empty()) return;
    if (d.empty()) {
      d.assign(o.d.size(), T(0.0));
      h.assign(o.h.size(), T(0.0));
      nh = o.nh;
    }
    for (std::size_t k = 0; k < d.size(); ++k) d[k] += sign * o.d[k];
    for (std::size_t k = 0; k < h.size(); ++k) h[k] += sign * o.h[k];
  }
};

template <class T>
Jet<T> operator+(Jet<T> a, const Jet<T>& b) {
  a += b;
  return a;
}
template <class T>
Jet<T> operator-(Jet<T> a, const Jet<T>& b) {
  a -= b;
  return a;
}
template <class T>
Jet<T> operator-(Jet<T> a) {
  a *= -1.0;
  return a;
}
template <class T>
Jet<T> operator+(Jet<T> a, double c) {
  a.v += c;
  return a;
}
template <class T>
Jet<T> operator+(double c, Jet<T> a) {
  a.v += c;
  return a;
}
template <class T>
Jet<T> operator-(Jet<T> a, double c) {
  a.v -= c;
  return a;
}
template <class T>
Jet<T> operator-(double c, Jet<T> a) {
  a *= -1.0;
  a.v += c;
  return a;
}
template <class T>
Jet<T> operator*(Jet<T> a, double c) {
  a *= c;
  return a;
}
template <class T>
Jet<T> operator*(double c, Jet<T> a) {
  a *= c;
  return a;
}
template <class T>
Jet<T> operator/(Jet<T> a, double c) {
  a *= 1.0 / c;
  return a;
}

template <class T>
Jet<T> operator*(const Jet<T>& a, const Jet<T>& b) {
  Jet<T> r(a.v * b.v);
  if (a.d.empty() && b.d.empty()) return r;
  if (a.d.empty() || b.d.empty()) {
    const Jet<T>& var = a.d.empty() ? b : a;
    const T& scale = a.d.empty() ? a.v : b.v;
    r.nh = var.nh;
    r.d.resize(var.d.size());
    for (std::size_t k = 0; k < var.d.size(); ++k) r.d[k] = scale * var.d[k];
    r.h.resize(var.h.size());
    for (std::size_t k = 0; k < var.h.size(); ++k) r.h[k] = scale * var.h[k];
    return r;
  }
  const std::size_t m = a.d.size();
  r.nh = a.nh;
  r.d.resize(m);
  for (std::size_t k = 0; k < m; ++k) r.d[k] = a.v * b.d[k] + b.v * a.d[k];
  const int nh = a.nh;
  r.h.resize(a.h.size());
  for (int k = 0; k < nh; ++k) {
    for (int l = 0; l < nh; ++l) {
      const std::size_t idx = static_cast<std::size_t>(k * nh + l);
      r.h[idx] = a.v * b.h[idx] + b.v * a.h[idx] + a.d[k] * b.d[l] + b.d[k] * a.d[l];
    }
  }
  return r;
}

/// Applies a scalar function given its value and first two derivatives at a.v.
template <class T>
Jet<T> chain(const Jet<T>& a, T f0, const T& f1, const T& f2) {
  Jet<T> r(std::move(f0));
  if (a.d.empty()) return r;
  r.nh = a.nh;
  r.d.resize(a.d.size());
  for (std::size_t k = 0; k < a.d.size(); ++k) r.d[k] = f1 * a.d[k];
  const int nh = a.nh;
  r.h.resize(a.h.size());
  for (int k = 0; k < nh; ++k) {
    for (int l = 0; l < nh; ++l) {
      const std::size_t idx = static_cast<std::size_t>(k * nh + l);
      r.h[idx] = f1 * a.h[idx] + f2 * (a.d[k] * a.d[l]);
    }
  }
  return r;
}

template <class T>
Jet<T> reciprocal(const Jet<T>& a) {
  const T inv = 1.0 / a.v;
  const T inv2 = inv * inv;
  return chain(a, inv, -1.0 * inv2, 2.0 * (inv2 * inv));
}

template <class T>
Jet<T> operator/(const Jet<T>& a, const Jet<T>& b) {
  if (b.d.empty()) return a * Jet<T>(1.0 / b.v);
  return a * reciprocal(b);
}
template <class T>
Jet<T> operator/(double c, const Jet<T>& b) {
  return c * reciprocal(b);
}

template <class T>
Jet<T> exp(const Jet<T>& a) {
  using std::exp;
  const T e = exp(a.v);
  return chain(a, e, e, e);
}

template <class T>
Jet<T> sin(const Jet<T>& a) {
  using std::cos;
  using std::sin;
  const T s = sin(a.v);
  return chain(a, s, cos(a.v), -1.0 * s);
}

template <class T>
Jet<T> cos(const Jet<T>& a) {
  using std::cos;
  using std::sin;
  const T c = cos(a.v);
  return chain(a, c, -1.0 * sin(a.v), -1.0 * c);
}

template <class T>
Jet<T> tanh(const Jet<T>& a) {
  using std::tanh;
  const T t = tanh(a.v);
  const T sech2 = 1.0 - t * t;
  return chain(a, t, sech2, -2.0 * (t * sech2));
}

/// a^p for a > 0.
template <class T>
Jet<T> pow(const Jet<T>& a, double p) {
  using std::pow;
  const T pm2 = pow(a.v, p - 2.0);
  const T pm1 = pm2 * a.v;
  return chain(a, pm1 * a.v, p * pm1, (p * (p - 1.0)) * pm2);
}

template <class T>
Jet<T> abs(const Jet<T>& a) {
  return value_of(a) < 0.0 ? -a : a;
}

}  // namespace sanc
