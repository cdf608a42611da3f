#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "soblab/error.hpp"

namespace soblab {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// Gauss-Legendre nodes by Newton iteration on P_n.
inline GaussRule make_gauss_legendre(int order) {
  if (order < 2) throw Error(ErrorKind::InvalidParams, "Gauss-Legendre order must be at least 2");
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int j = 2; j <= order; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.nodes[static_cast<std::size_t>(order - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.weights[static_cast<std::size_t>(order - 1 - i)] = w;
  }
  return rule;
}

inline constexpr int kGaussOrder = 16;

inline const GaussRule& gauss_legendre_16() {
  static const GaussRule rule = make_gauss_legendre(kGaussOrder);
  return rule;
}

struct QuadratureOptions {
  double rel_tol = 1e-8;
  double abs_tol = 0.0;
  std::size_t initial_panels = 1;
  std::size_t max_panels = 256;
  bool throw_on_failure = true;  // otherwise return the finest estimate with its rel_change
};

struct QuadratureResult {
  std::vector<double> values;
  std::size_t panels = 0;    // panels per base interval at acceptance
  double rel_change = 0.0;   // largest relative change of the last doubling
};

namespace detail {

inline bool all_cells(std::span<const double>, std::span<const double>) { return false; }

/// One tensor-product pass: every base interval split into `panels` equal pieces.
template <class F, class Skip>
std::vector<double> tensor_pass(const std::vector<std::vector<double>>& breaks, std::size_t ncomp, std::size_t panels,
                                F& f, Skip& skip) {
  const GaussRule& rule = gauss_legendre_16();
  const std::size_t dim = breaks.size();
  const std::size_t q = rule.nodes.size();

  // per-axis list of panel edges
  std::vector<std::vector<double>> edges(dim);
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = 0; b + 1 < breaks[a].size(); ++b) {
      const double lo = breaks[a][b];
      const double hi = breaks[a][b + 1];
      for (std::size_t s = 0; s < panels; ++s) edges[a].push_back(lo + (hi - lo) * static_cast<double>(s) / static_cast<double>(panels));
    }
    edges[a].push_back(breaks[a].back());
  }

  std::vector<double> total(ncomp, 0.0);
  std::vector<double> cell(ncomp);
  std::vector<double> out(ncomp);
  std::vector<double> x(dim), lo(dim), hi(dim);
  std::vector<std::size_t> ci(dim, 0);
  std::vector<std::size_t> ni(dim, 0);

  for (;;) {
    for (std::size_t a = 0; a < dim; ++a) {
      lo[a] = edges[a][ci[a]];
      hi[a] = edges[a][ci[a] + 1];
    }
    if (!skip(std::span<const double>(lo), std::span<const double>(hi))) {
      std::fill(cell.begin(), cell.end(), 0.0);
      std::fill(ni.begin(), ni.end(), 0);
      for (;;) {
        double w = 1.0;
        for (std::size_t a = 0; a < dim; ++a) {
          const double half = 0.5 * (hi[a] - lo[a]);
          x[a] = lo[a] + half * (1.0 + rule.nodes[ni[a]]);
          w *= half * rule.weights[ni[a]];
        }
        f(std::span<const double>(x), std::span<double>(out));
        for (std::size_t c = 0; c < ncomp; ++c) cell[c] += w * out[c];
        std::size_t a = 0;
        while (a < dim && ++ni[a] == q) ni[a++] = 0;
        if (a == dim) break;
      }
      for (std::size_t c = 0; c < ncomp; ++c) total[c] += cell[c];
    }
    std::size_t a = 0;
    while (a < dim && ++ci[a] == edges[a].size() - 1) ci[a++] = 0;
    if (a == dim) break;
  }
  return total;
}

}  // namespace detail

/// Adaptive tensor-product Gauss-Legendre integration of a vector-valued integrand over a
/// box given by per-axis breakpoints. Each base interval is split into P panels and P
/// doubles until every component changes by at most rel_tol (relative) or abs_tol.
/// `skip(lo, hi)` may drop cells on which the integrand vanishes identically.
template <class F, class Skip>
QuadratureResult integrate_box_masked(const std::vector<std::vector<double>>& breaks, std::size_t ncomp, F&& f, Skip&& skip,
                               const QuadratureOptions& opts = {}) {
  for (const auto& b : breaks) {
    if (b.size() < 2) throw Error(ErrorKind::InvalidParams, "each axis needs at least two breakpoints");
  }
  std::size_t panels = std::max<std::size_t>(1, opts.initial_panels);
  QuadratureResult res;
  res.values = detail::tensor_pass(breaks, ncomp, panels, f, skip);
  for (;;) {
    const std::size_t next = panels * 2;
    if (next > opts.max_panels) {
      if (!opts.throw_on_failure) return res;
      throw Error(ErrorKind::QuadratureNotConverged,
                  "no convergence with " + std::to_string(panels) + " panels per interval (last relative change " +
                      std::to_string(res.rel_change) + ")");
    }
    std::vector<double> refined = detail::tensor_pass(breaks, ncomp, next, f, skip);
    double worst = 0.0;
    bool ok = true;
    for (std::size_t c = 0; c < ncomp; ++c) {
      const double diff = std::abs(refined[c] - res.values[c]);
      const double scale = std::abs(refined[c]);
      const double rel = scale > 0.0 ? diff / scale : (diff > 0.0 ? 1.0 : 0.0);
      worst = std::max(worst, rel);
      if (diff > opts.rel_tol * scale && diff > opts.abs_tol) ok = false;
    }
    res.values = std::move(refined);
    res.panels = next;
    res.rel_change = worst;
    if (ok) return res;
    panels = next;
  }
}

template <class F>
QuadratureResult integrate_box(const std::vector<std::vector<double>>& breaks, std::size_t ncomp, F&& f,
                               const QuadratureOptions& opts = {}) {
  return integrate_box_masked(breaks, ncomp, std::forward<F>(f), detail::all_cells, opts);
}

/// Scalar 1-D convenience wrapper over the same panel-doubling scheme.
template <class F>
double integrate_1d(std::vector<double> breaks, F&& f, const QuadratureOptions& opts = {}) {
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  if (breaks.size() < 2) return 0.0;
  auto g = [&](std::span<const double> x, std::span<double> out) { out[0] = f(x[0]); };
  return integrate_box({breaks}, 1, g, opts).values[0];
}

}  // namespace soblab
