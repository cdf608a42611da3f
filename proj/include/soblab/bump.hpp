#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "soblab/dataset.hpp"
#include "soblab/dual.hpp"
#include "soblab/error.hpp"
#include "soblab/quadrature.hpp"

namespace soblab {

inline constexpr int kMaxDim = 3;
inline constexpr int kMaxOrder = 3;

/// Sobolev order k, integrability p and dimension d.
struct SobolevParams {
  int k = 1;
  double p = 2.0;
  int d = 1;

  [[nodiscard]] bool supercritical() const noexcept { return k * p > d; }
  /// k in the open interval (d/p, 1.5 d/p).
  [[nodiscard]] bool strict_range() const noexcept { return d / p < k && k < 1.5 * d / p; }

  friend bool operator==(const SobolevParams&, const SobolevParams&) = default;
};

inline SobolevParams make_params(int k, double p, int d) {
  if (d < 1 || d > kMaxDim) throw Error(ErrorKind::InvalidParams, "d must be 1, 2 or 3 (got " + std::to_string(d) + ")");
  if (k < 1 || k > kMaxOrder) throw Error(ErrorKind::InvalidParams, "k must be 1, 2 or 3 (got " + std::to_string(k) + ")");
  if (!(p >= 1.0) || !std::isfinite(p)) throw Error(ErrorKind::InvalidParams, "p must be a finite real >= 1");
  SobolevParams params{k, p, d};
  if (!params.supercritical()) {
    throw Error(ErrorKind::InvalidParams, "need k p > d (got k=" + std::to_string(k) + ", p=" + format_double(p) +
                                              ", d=" + std::to_string(d) + ")");
  }
  return params;
}

/// Multi-index padded to three axes; unused axes stay zero.
using MultiIndex = std::array<int, kMaxDim>;

inline int order(const MultiIndex& a) noexcept { return a[0] + a[1] + a[2]; }

/// All multi-indices with |alpha| <= k in d dimensions, by order then reverse lexicographic.
inline std::vector<MultiIndex> multi_indices(int d, int k) {
  std::vector<MultiIndex> out;
  for (int m = 0; m <= k; ++m) {
    for (int a0 = m; a0 >= 0; --a0) {
      if (d == 1) {
        if (a0 == m) out.push_back({a0, 0, 0});
        continue;
      }
      for (int a1 = m - a0; a1 >= 0; --a1) {
        const int a2 = m - a0 - a1;
        if (d == 2 && a2 != 0) continue;
        out.push_back({a0, a1, a2});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Profile phi(t) = S((1 - t) / (3/4)), S(s) = h(s) / (h(s) + h(1 - s)), h(s) = exp(-1/s).

namespace detail {

// Within 1e-3 of either end h underflows far below double precision; returning the
// constant avoids inf * 0 in the derivative components.
inline constexpr double kStepGuard = 1e-3;

template <class T>
T smooth_step(const T& s) {
  using std::exp;
  const double s0 = primal(s);
  if (s0 <= kStepGuard) return T(0.0);
  if (s0 >= 1.0 - kStepGuard) return T(1.0);
  const T a = exp(-1.0 / s);
  const T b = exp(-1.0 / (1.0 - s));
  return a / (a + b);
}

template <class T>
T profile(const T& t) {
  return smooth_step((1.0 - t) / 0.75);
}

inline void check_radius(double delta) {
  if (!(delta > 0.0)) throw Error(ErrorKind::NonpositiveRadius, "radius must be positive, got " + format_double(delta));
}

}  // namespace detail

/// phi and its first three derivatives at t.
inline std::array<double, 4> profile_jet(double t) {
  const auto r = detail::profile(seeded_variable<3>(t, 0b111U));
  return {r.v.v.v, r.v.v.d, r.v.d.d, r.d.d.d};
}

inline double profile_eval(double t, int derivative_order) {
  if (derivative_order < 0 || derivative_order > kMaxOrder) {
    throw Error(ErrorKind::UnsupportedOrder, "profile derivative order " + std::to_string(derivative_order));
  }
  if (!(t >= 0.0)) throw Error(ErrorKind::InvalidParams, "profile argument must be nonnegative");
  if (derivative_order == 0) return detail::profile(t);
  return profile_jet(t)[static_cast<std::size_t>(derivative_order)];
}

/// psi_delta(x) = phi(|x - c|^2 / delta^2).
inline double bump_eval(std::span<const double> center, double delta, std::span<const double> x) {
  detail::check_radius(delta);
  if (center.size() != x.size()) throw Error(ErrorKind::MismatchedLengths, "center and point differ in dimension");
  const double t = squared_distance(x, center) / (delta * delta);
  if (t >= 1.0) return 0.0;
  return detail::profile(t);
}

namespace detail {

template <int M>
double partial_ad(const MultiIndex& alpha, std::span<const double> center, double delta, std::span<const double> x) {
  // level l of the nested dual differentiates along axis dirs[l]
  std::array<int, kMaxOrder> dirs{};
  int level = 0;
  for (int j = 0; j < kMaxDim; ++j) {
    for (int r = 0; r < alpha[static_cast<std::size_t>(j)]; ++r) dirs[static_cast<std::size_t>(level++)] = j;
  }
  using T = nested_dual_t<M>;
  T t(0.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    unsigned seeds = 0;
    for (int l = 0; l < M; ++l) {
      if (dirs[static_cast<std::size_t>(l)] == static_cast<int>(j)) seeds |= 1U << l;
    }
    const T u = (seeded_variable<M>(x[j], seeds) - center[j]) / delta;
    t = t + u * u;
  }
  if (primal(t) >= 1.0) return 0.0;
  return top_coefficient(profile(t));
}

inline double int_pow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

/// Coefficient of phi^(m)(u^2) in d^a/du^a phi(u^2): a! / ((2m-a)! (a-m)!) (2u)^(2m-a).
inline double square_chain_coeff(int a, int m, double u) {
  static constexpr double fact[] = {1.0, 1.0, 2.0, 6.0, 24.0};
  return fact[a] / (fact[2 * m - a] * fact[a - m]) * int_pow(2.0 * u, 2 * m - a);
}

}  // namespace detail

/// D^alpha psi_1 at u from a precomputed profile jet at t = |u|^2 (Faa di Bruno for a
/// function of a sum of squares). Multiply by delta^{-|alpha|} for psi_delta.
inline double partial_from_jet(const MultiIndex& alpha, const std::array<double, 4>& jet, std::span<const double> u) {
  const int a0 = alpha[0];
  const int a1 = alpha[1];
  const int a2 = alpha[2];
  const double u0 = u.size() > 0 ? u[0] : 0.0;
  const double u1 = u.size() > 1 ? u[1] : 0.0;
  const double u2 = u.size() > 2 ? u[2] : 0.0;
  double sum = 0.0;
  for (int m0 = (a0 + 1) / 2; m0 <= a0; ++m0) {
    const double c0 = detail::square_chain_coeff(a0, m0, u0);
    for (int m1 = (a1 + 1) / 2; m1 <= a1; ++m1) {
      const double c1 = c0 * detail::square_chain_coeff(a1, m1, u1);
      for (int m2 = (a2 + 1) / 2; m2 <= a2; ++m2) {
        sum += jet[static_cast<std::size_t>(m0 + m1 + m2)] * c1 * detail::square_chain_coeff(a2, m2, u2);
      }
    }
  }
  return sum;
}

/// Exact mixed partial D^alpha psi_delta(x), by nested forward-mode differentiation.
inline double bump_partial(const MultiIndex& alpha, std::span<const double> center, double delta,
                           std::span<const double> x) {
  detail::check_radius(delta);
  if (center.size() != x.size()) throw Error(ErrorKind::MismatchedLengths, "center and point differ in dimension");
  if (x.empty() || x.size() > static_cast<std::size_t>(kMaxDim)) {
    throw Error(ErrorKind::InvalidParams, "dimension must be 1, 2 or 3");
  }
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    if (alpha[j] < 0 || (j >= x.size() && alpha[j] != 0)) {
      throw Error(ErrorKind::UnknownMultiIndex, "multi-index does not fit the dimension");
    }
  }
  switch (order(alpha)) {
    case 0: return bump_eval(center, delta, x);
    case 1: return detail::partial_ad<1>(alpha, center, delta, x);
    case 2: return detail::partial_ad<2>(alpha, center, delta, x);
    case 3: return detail::partial_ad<3>(alpha, center, delta, x);
    default: throw Error(ErrorKind::UnsupportedOrder, "derivative order " + std::to_string(order(alpha)) + " > 3");
  }
}

/// Same value as bump_partial, through the profile jet; this is the quadrature path.
inline double bump_partial_jet(const MultiIndex& alpha, std::span<const double> center, double delta,
                               std::span<const double> x) {
  detail::check_radius(delta);
  std::array<double, kMaxDim> u{};
  double t = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    u[j] = (x[j] - center[j]) / delta;
    t += u[j] * u[j];
  }
  if (t >= 1.0) return 0.0;
  return partial_from_jet(alpha, profile_jet(t), std::span<const double>(u.data(), x.size())) /
         detail::int_pow(delta, order(alpha));
}

inline double abs_pow(double v, double p) {
  const double a = std::abs(v);
  if (p == 2.0) return a * a;
  if (p == 1.0) return a;
  return std::pow(a, p);
}

// ---------------------------------------------------------------------------
// Reference moduli M_alpha = int |D^alpha psi_1|^p.

struct ReferenceModuli {
  SobolevParams params;
  std::vector<MultiIndex> indices;
  std::vector<double> values;
  std::size_t panels = 0;
  double rel_error = 0.0;

  [[nodiscard]] double at(const MultiIndex& alpha) const {
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (indices[i] == alpha) return values[i];
    }
    throw Error(ErrorKind::UnknownMultiIndex, "multi-index (" + std::to_string(alpha[0]) + "," + std::to_string(alpha[1]) +
                                                  "," + std::to_string(alpha[2]) + ") not in moduli table");
  }
};

/// int_{R^d} |D^alpha psi_1|^p for every |alpha| <= k. Uses the reflection symmetry of
/// |D^alpha psi_1| to integrate over [0,1]^d only; cells outside the unit ball are skipped.
inline ReferenceModuli compute_moduli(int d, int k, double p, const QuadratureOptions& opts = {}) {
  if (d < 1 || d > kMaxDim) throw Error(ErrorKind::InvalidParams, "moduli need d in {1,2,3}");
  if (k < 0 || k > kMaxOrder) throw Error(ErrorKind::UnsupportedOrder, "moduli need k <= 3");
  ReferenceModuli m;
  m.params = SobolevParams{k, p, d};
  m.indices = multi_indices(d, k);
  const std::size_t count = m.indices.size();

  auto integrand = [&](std::span<const double> x, std::span<double> out) {
    const double t = squared_norm(x);
    if (t >= 1.0) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    const auto jet = profile_jet(t);
    for (std::size_t i = 0; i < count; ++i) out[i] = abs_pow(partial_from_jet(m.indices[i], jet, x), p);
  };
  auto outside = [](std::span<const double> lo, std::span<const double>) { return squared_norm(lo) >= 1.0; };

  const std::vector<std::vector<double>> breaks(static_cast<std::size_t>(d), std::vector<double>{0.0, 0.5, 1.0});
  const QuadratureResult res = integrate_box_masked(breaks, count, integrand, outside, opts);
  const double fold = std::ldexp(1.0, d);
  m.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) m.values[i] = fold * res.values[i];
  m.panels = res.panels;
  m.rel_error = res.rel_change;
  return m;
}

inline ReferenceModuli reference_moduli(const SobolevParams& params, const QuadratureOptions& opts = {}) {
  const SobolevParams checked = make_params(params.k, params.p, params.d);
  return compute_moduli(checked.d, checked.k, checked.p, opts);
}

/// Process-wide memo of reference_moduli; entries are immutable once inserted.
inline const ReferenceModuli& cached_reference_moduli(const SobolevParams& params) {
  static std::mutex mutex;
  static std::map<std::tuple<int, double, int>, ReferenceModuli> cache;
  const auto key = std::make_tuple(params.k, params.p, params.d);
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, reference_moduli(params)).first;
  return it->second;
}

/// int psi_1^2, the p = 2, alpha = 0 modulus.
inline double l2_modulus(int d) {
  static std::mutex mutex;
  static std::map<int, double> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(d);
  if (it == cache.end()) it = cache.emplace(d, compute_moduli(d, 0, 2.0).values[0]).first;
  return it->second;
}

inline std::string format_hex(double v) {
  char buf[64];
  const bool neg = std::signbit(v);
  auto res = std::to_chars(buf, buf + sizeof(buf), std::abs(v), std::chars_format::hex);
  return std::string(neg ? "-0x" : "0x") + std::string(buf, res.ptr);
}

inline double parse_hex(const std::string& token, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size()) {
    throw Error(ErrorKind::ParseError, where + ": not a number: '" + token + "'");
  }
  return v;
}

/// Key-value cache file; every real is written as a hexadecimal float.
inline void save_moduli(const ReferenceModuli& m, std::ostream& out) {
  out << "k " << m.params.k << '\n';
  out << "p " << format_hex(m.params.p) << '\n';
  out << "d " << m.params.d << '\n';
  out << "panels " << m.panels << '\n';
  out << "error " << format_hex(m.rel_error) << '\n';
  for (std::size_t i = 0; i < m.indices.size(); ++i) {
    out << 'M';
    for (int j = 0; j < m.params.d; ++j) out << ' ' << m.indices[i][static_cast<std::size_t>(j)];
    out << ' ' << format_hex(m.values[i]) << '\n';
  }
}

inline ReferenceModuli load_moduli(std::istream& in) {
  ReferenceModuli m;
  m.params = SobolevParams{-1, 0.0, -1};
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::pair<MultiIndex, double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = "moduli line " + std::to_string(line_no);
    const auto trimmed = trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    std::vector<std::string> f;
    for (auto tok : split(trimmed, ' ')) {
      if (!tok.empty()) f.emplace_back(tok);
    }
    auto as_int = [&](const std::string& s) {
      int v = 0;
      auto r = std::from_chars(s.data(), s.data() + s.size(), v);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw Error(ErrorKind::ParseError, where + ": bad integer '" + s + "'");
      return v;
    };
    if (f[0] == "k" && f.size() == 2) {
      m.params.k = as_int(f[1]);
    } else if (f[0] == "p" && f.size() == 2) {
      m.params.p = parse_hex(f[1], where);
    } else if (f[0] == "d" && f.size() == 2) {
      m.params.d = as_int(f[1]);
    } else if (f[0] == "panels" && f.size() == 2) {
      m.panels = static_cast<std::size_t>(as_int(f[1]));
    } else if (f[0] == "error" && f.size() == 2) {
      m.rel_error = parse_hex(f[1], where);
    } else if (f[0] == "M" && m.params.d > 0 && f.size() == static_cast<std::size_t>(m.params.d) + 2) {
      MultiIndex a{};
      for (int j = 0; j < m.params.d; ++j) a[static_cast<std::size_t>(j)] = as_int(f[static_cast<std::size_t>(j) + 1]);
      rows.emplace_back(a, parse_hex(f.back(), where));
    } else {
      throw Error(ErrorKind::ParseError, where + ": unrecognised record '" + std::string(trimmed) + "'");
    }
  }
  if (m.params.k < 0 || m.params.d < 1 || m.params.d > kMaxDim || !(m.params.p >= 1.0)) {
    throw Error(ErrorKind::ParseError, "moduli file lacks a valid k, p, d header");
  }
  m.indices = multi_indices(m.params.d, m.params.k);
  if (rows.size() != m.indices.size()) throw Error(ErrorKind::ParseError, "moduli file has the wrong number of entries");
  m.values.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].first != m.indices[i]) throw Error(ErrorKind::ParseError, "moduli entries out of canonical order");
    m.values[i] = rows[i].second;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Scaled norms.

/// int |D^alpha psi_delta|^p = delta^{d - |alpha| p} M_alpha.
inline double scaled_seminorm(const MultiIndex& alpha, double delta, const ReferenceModuli& moduli) {
  detail::check_radius(delta);
  const double m = moduli.at(alpha);
  return std::pow(delta, moduli.params.d - order(alpha) * moduli.params.p) * m;
}

inline double bump_norm(double delta, const ReferenceModuli& moduli) {
  detail::check_radius(delta);
  double sum = 0.0;
  for (const auto& a : moduli.indices) sum += std::pow(scaled_seminorm(a, delta, moduli), 1.0 / moduli.params.p);
  return sum;
}

/// C = sum_alpha max(M_alpha^{1/p}, 1).
inline double bump_norm_constant(const ReferenceModuli& moduli) {
  double c = 0.0;
  for (double v : moduli.values) c += std::max(std::pow(v, 1.0 / moduli.params.p), 1.0);
  return c;
}

/// C max(1, delta)^{d/p} (1 + delta^{(d - kp)/p}); reduces to C (1 + delta^{(d-kp)/p}) for delta <= 1.
inline double bump_norm_upper_bound(double delta, const ReferenceModuli& moduli) {
  detail::check_radius(delta);
  const auto& q = moduli.params;
  return bump_norm_constant(moduli) * std::pow(std::max(1.0, delta), q.d / q.p) *
         (1.0 + std::pow(delta, (q.d - q.k * q.p) / q.p));
}

}  // namespace soblab
