#pragma once

#include <cmath>

namespace soblab {

/// Forward-mode dual number. Nesting Dual<Dual<...>> gives higher-order mixed partials:
/// each level carries one infinitesimal, and the all-`d` component of a depth-m number
/// is the coefficient of e1*...*em.
template <class T>
struct Dual {
  T v{};
  T d{};

  Dual() = default;
  Dual(double c) : v(c), d(0.0) {}  // NOLINT(google-explicit-constructor)
  Dual(T value, T deriv) : v(value), d(deriv) {}
};

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) { return {a.v + b.v, a.d + b.d}; }
template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) { return {a.v - b.v, a.d - b.d}; }
template <class T>
Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }
template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) { return {a.v * b.v, a.v * b.d + a.d * b.v}; }
template <class T>
Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}

template <class T>
Dual<T> operator+(const Dual<T>& a, double s) { return {a.v + s, a.d}; }
template <class T>
Dual<T> operator+(double s, const Dual<T>& a) { return {s + a.v, a.d}; }
template <class T>
Dual<T> operator-(const Dual<T>& a, double s) { return {a.v - s, a.d}; }
template <class T>
Dual<T> operator-(double s, const Dual<T>& a) { return {s - a.v, -a.d}; }
template <class T>
Dual<T> operator*(const Dual<T>& a, double s) { return {a.v * s, a.d * s}; }
template <class T>
Dual<T> operator*(double s, const Dual<T>& a) { return {s * a.v, s * a.d}; }
template <class T>
Dual<T> operator/(const Dual<T>& a, double s) { return {a.v / s, a.d / s}; }
template <class T>
Dual<T> operator/(double s, const Dual<T>& a) { return {s / a.v, -s * a.d / (a.v * a.v)}; }

template <class T>
Dual<T> exp(const Dual<T>& a) {
  using std::exp;
  const T e = exp(a.v);
  return {e, a.d * e};
}

inline double primal(double x) { return x; }
template <class T>
double primal(const Dual<T>& x) { return primal(x.v); }

/// Coefficient of the product of every infinitesimal.
inline double top_coefficient(double x) { return x; }
template <class T>
double top_coefficient(const Dual<T>& x) { return top_coefficient(x.d); }

template <int Depth>
struct NestedDual {
  using type = Dual<typename NestedDual<Depth - 1>::type>;
};
template <>
struct NestedDual<0> {
  using type = double;
};

template <int Depth>
using nested_dual_t = typename NestedDual<Depth>::type;

/// x plus the infinitesimals of the levels flagged in `seeds` (bit l marks level l+1).
template <int Depth>
nested_dual_t<Depth> seeded_variable(double x, unsigned seeds) {
  if constexpr (Depth == 0) {
    return x;
  } else {
    using Inner = nested_dual_t<Depth - 1>;
    const bool seeded = ((seeds >> (Depth - 1)) & 1U) != 0;
    return {seeded_variable<Depth - 1>(x, seeds), Inner(seeded ? 1.0 : 0.0)};
  }
}

}  // namespace soblab
