#pragma once

// Independent reference computations used by the tests. Nothing here calls into the
// kd-tree, the jet-based derivatives or the panel-doubling quadrature.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "soblab/dataset.hpp"
#include "soblab/model.hpp"
#include "soblab/random.hpp"

namespace oracle {

inline double brute_d2(const soblab::Dataset& data, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (int a = 0; a < data.dim; ++a) {
    const double diff = data.coords[i * data.dim + a] - data.coords[j * data.dim + a];
    s += diff * diff;
  }
  return s;
}

inline std::vector<double> brute_min_d2(const soblab::Dataset& data) {
  const std::size_t n = data.size();
  std::vector<double> r(n, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) r[i] = std::min(r[i], brute_d2(data, i, j));
    }
  }
  return r;
}

inline std::vector<double> brute_radii(const soblab::Dataset& data) {
  auto r = brute_min_d2(data);
  for (auto& v : r) v = std::sqrt(v);
  return r;
}

/// In-degrees of the nearest-neighbour graph with every tied neighbour counted.
inline std::vector<std::size_t> brute_in_degrees(const soblab::Dataset& data) {
  const std::size_t n = data.size();
  const auto r = brute_min_d2(data);
  std::vector<std::size_t> deg(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && brute_d2(data, i, j) == r[i]) ++deg[j];
    }
  }
  return deg;
}

inline soblab::Dataset uniform_cube(int d, std::size_t n, std::uint64_t seed) {
  soblab::Rng rng(seed);
  std::vector<double> c(n * d);
  std::vector<double> y(n);
  for (auto& v : c) v = rng.uniform(-1.0, 1.0);
  for (auto& v : y) v = rng.normal();
  return soblab::make_dataset(d, std::move(c), std::move(y));
}

/// Smooth step and profile written out directly.
inline double step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / s);
  const double b = std::exp(-1.0 / (1.0 - s));
  return a / (a + b);
}

inline double bump(const std::vector<double>& c, double delta, const std::vector<double>& x) {
  double t = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) t += (x[j] - c[j]) * (x[j] - c[j]);
  t /= delta * delta;
  if (t >= 1.0) return 0.0;
  if (t <= 0.25) return 1.0;
  return step((1.0 - t) / 0.75);
}

/// Sixth-order central difference of f along axis `axis`.
inline double central_diff(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x, int axis, double h) {
  static const double w[] = {-1.0 / 60, 3.0 / 20, -3.0 / 4, 0.0, 3.0 / 4, -3.0 / 20, 1.0 / 60};
  const double x0 = x[axis];
  double s = 0.0;
  for (int k = -3; k <= 3; ++k) {
    x[axis] = x0 + k * h;
    s += w[k + 3] * f(x);
  }
  return s / h;
}

/// Mixed partial by nesting central differences, one axis per unit of alpha.
inline double partial_fd(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& x,
                         const std::vector<int>& alpha, double h) {
  std::vector<int> axes;
  for (std::size_t a = 0; a < alpha.size(); ++a) {
    for (int m = 0; m < alpha[a]; ++m) axes.push_back(static_cast<int>(a));
  }
  std::function<double(const std::vector<double>&, std::size_t)> rec = [&](const std::vector<double>& y, std::size_t level) {
    if (level == axes.size()) return f(y);
    return central_diff([&](const std::vector<double>& z) { return rec(z, level + 1); }, y, axes[level], h);
  };
  return rec(x, 0);
}

/// One Richardson step on partial_fd, cancelling the h^6 term.
inline double partial_fd_extrapolated(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& x,
                                      const std::vector<int>& alpha, double h) {
  const double coarse = partial_fd(f, x, alpha, h);
  const double fine = partial_fd(f, x, alpha, h / 2);
  return (64.0 * fine - coarse) / 63.0;
}

/// Composite Simpson on [a, b] with m (even) intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int m) {
  const double h = (b - a) / m;
  double s = f(a) + f(b);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace oracle
