#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "soblab/bump.hpp"
#include "soblab/dataset.hpp"
#include "soblab/error.hpp"
#include "soblab/geometry.hpp"
#include "soblab/kdtree.hpp"
#include "soblab/parallel.hpp"

namespace soblab {

/// f = sum_i w_i psi_{r_i}(. - c_i) with pairwise disjoint supports.
struct BumpInterpolant {
  SobolevParams params;
  double shrink = 1.0;
  int dim = 0;
  std::vector<double> centers;  // row-major
  std::vector<double> radii;    // support radii r_i
  std::vector<double> weights;
  KdTree index;

  [[nodiscard]] std::size_t size() const noexcept { return weights.size(); }
  [[nodiscard]] std::span<const double> center(std::size_t i) const noexcept {
    return {centers.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

namespace detail {

// Every support radius must be at most half the nearest-neighbour distance of its
// center. Then a point inside supp psi_j is strictly closer to c_j than to any other
// center, which is what lets eval consult the nearest center only.
inline void check_support_radii(const Dataset& centers, const std::vector<double>& radii) {
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw Error(ErrorKind::NonpositiveRadius, "support radius " + std::to_string(i) + " not positive");
  }
  if (centers.size() < 2) return;
  const NnRadii nn = nn_radii(centers);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] > 0.5 * nn.radii[i]) {
      throw Error(ErrorKind::InvalidParams, "support radius " + std::to_string(i) + " exceeds half its nearest-neighbour distance");
    }
  }
}

inline BumpInterpolant assemble(const SobolevParams& params, double shrink, const Dataset& data, std::vector<double> radii) {
  BumpInterpolant f;
  f.params = params;
  f.shrink = shrink;
  f.dim = data.dim;
  f.centers = data.coords;
  f.radii = std::move(radii);
  f.weights = data.labels;
  f.index = KdTree(f.centers, f.dim);
  return f;
}

}  // namespace detail

inline BumpInterpolant build(const Dataset& data, const NnRadii& radii, double shrink, const SobolevParams& params) {
  if (!(shrink > 0.0 && shrink <= 1.0)) throw Error(ErrorKind::InvalidShrink, "shrink must lie in (0, 1], got " + format_double(shrink));
  if (radii.radii.size() != data.size()) throw Error(ErrorKind::MismatchedLengths, "radii and dataset differ in length");
  if (params.d != data.dim) throw Error(ErrorKind::ParamsMismatch, "params dimension differs from dataset dimension");
  std::vector<double> r(data.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = shrink * radii.radii[i] / 2.0;
  detail::check_support_radii(data, r);
  return detail::assemble(params, shrink, data, std::move(r));
}

inline double eval(const BumpInterpolant& f, std::span<const double> x) {
  if (f.size() == 0) return 0.0;
  const auto nb = f.index.nearest(x);
  const std::size_t j = nb.indices.front();
  if (nb.d2 >= f.radii[j] * f.radii[j]) return 0.0;
  return 0.0 + f.weights[j] * bump_eval(f.center(j), f.radii[j], x);
}

/// Values at row-major query points, in query order.
inline std::vector<double> eval_many(const BumpInterpolant& f, std::span<const double> points, unsigned threads = 1) {
  const std::size_t dim = static_cast<std::size_t>(f.dim);
  const std::size_t m = points.size() / dim;
  std::vector<double> out(m);
  constexpr std::size_t kChunk = 1024;
  parallel_for((m + kChunk - 1) / kChunk, threads, [&](std::size_t c) {
    const std::size_t end = std::min(m, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) out[i] = eval(f, points.subspan(i * dim, dim));
  });
  return out;
}

/// D^alpha f at x, from the single active bump if there is one.
inline double eval_partial(const BumpInterpolant& f, const MultiIndex& alpha, std::span<const double> x) {
  if (f.size() == 0) return 0.0;
  const auto nb = f.index.nearest(x);
  const std::size_t j = nb.indices.front();
  if (nb.d2 >= f.radii[j] * f.radii[j]) return 0.0;
  return 0.0 + f.weights[j] * bump_partial_jet(alpha, f.center(j), f.radii[j], x);
}

inline double interpolation_error(const BumpInterpolant& f, const Dataset& data) {
  double worst = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) worst = std::max(worst, std::abs(eval(f, data.point(i)) - data.labels[i]));
  return worst;
}

/// Overlapping support pairs, via the packing check with radii 2 r_i.
inline std::vector<std::pair<std::size_t, std::size_t>> support_overlaps(const BumpInterpolant& f) {
  Dataset centers{f.dim, f.centers, f.weights};
  NnRadii doubled;
  doubled.radii.reserve(f.size());
  for (double r : f.radii) doubled.radii.push_back(2.0 * r);
  return check_packing(centers, doubled);
}

/// Sum over alpha of (M_alpha sum_i |w_i|^p r_i^{d - |alpha| p})^{1/p}; exact because the
/// supports are disjoint.
inline double sobolev_norm(const BumpInterpolant& f, const ReferenceModuli& moduli) {
  if (!(moduli.params == f.params)) throw Error(ErrorKind::ParamsMismatch, "moduli computed for different (k, p, d)");
  const double p = f.params.p;
  const int d = f.params.d;
  std::vector<double> wp(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) wp[i] = abs_pow(f.weights[i], p);
  double norm = 0.0;
  for (std::size_t a = 0; a < moduli.indices.size(); ++a) {
    const double e = d - order(moduli.indices[a]) * p;
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (wp[i] != 0.0) s += wp[i] * std::pow(f.radii[i], e);
    }
    norm += std::pow(moduli.values[a] * s, 1.0 / p);
  }
  return norm;
}

/// C_M = N^{p-1} 2^{kp-d} sum_alpha M_alpha, N the number of multi-indices.
inline double min_norm_constant(const ReferenceModuli& moduli) {
  const auto& q = moduli.params;
  double sum = 0.0;
  for (double v : moduli.values) sum += v;
  return std::pow(static_cast<double>(moduli.values.size()), q.p - 1.0) * std::pow(2.0, q.k * q.p - q.d) * sum;
}

/// Upper bound on ||f_{s=1}||^p, hence on ||f*||^p:
/// C_M max(1, max_i delta_i)^{kp} sum_i (1 + |y_i|^p delta_i^{d - kp}).
inline double min_norm_upper_bound(const Dataset& data, const NnRadii& radii, const ReferenceModuli& moduli) {
  if (radii.radii.size() != data.size()) throw Error(ErrorKind::MismatchedLengths, "radii and dataset differ in length");
  const auto& q = moduli.params;
  double sum = 0.0;
  double largest = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    sum += 1.0 + abs_pow(data.labels[i], q.p) * std::pow(radii.radii[i], q.d - q.k * q.p);
    largest = std::max(largest, radii.radii[i]);
  }
  return min_norm_constant(moduli) * std::pow(std::max(1.0, largest), q.k * q.p) * sum;
}

struct GammaReport {
  double norm_f = 0.0;
  double bump_upper_bound_norm = 0.0;
  double gamma_lower_bound = 1.0;
};

inline constexpr double kInterpolationTolerance = 1e-9;

/// Certified lower bound on gamma for f, using the s = 1 interpolant as the
/// upper bound on the minimum norm.
inline GammaReport gamma_report(const BumpInterpolant& f, const Dataset& data, const NnRadii& radii, const ReferenceModuli& moduli) {
  const double err = interpolation_error(f, data);
  if (!(err <= kInterpolationTolerance)) {
    throw Error(ErrorKind::NotInterpolating, "max interpolation error " + format_double(err));
  }
  GammaReport rep;
  rep.norm_f = sobolev_norm(f, moduli);
  rep.bump_upper_bound_norm = f.shrink == 1.0 ? rep.norm_f : sobolev_norm(build(data, radii, 1.0, f.params), moduli);
  rep.gamma_lower_bound = rep.bump_upper_bound_norm > 0.0 ? rep.norm_f / rep.bump_upper_bound_norm : 1.0;
  return rep;
}

// ---------------------------------------------------------------------------
// CSV: a header record `k,p,d,shrink` with its values, then `c1..cd,radius,weight` rows.

inline void write_interpolant_csv(const BumpInterpolant& f, std::ostream& out) {
  out << "k,p,d,shrink\n";
  out << f.params.k << ',' << format_double(f.params.p) << ',' << f.params.d << ',' << format_double(f.shrink) << '\n';
  for (int j = 0; j < f.dim; ++j) out << 'c' << (j + 1) << ',';
  out << "radius,weight\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (double v : f.center(i)) out << format_double(v) << ',';
    out << format_double(f.radii[i]) << ',' << format_double(f.weights[i]) << '\n';
  }
}

inline BumpInterpolant read_interpolant_csv(std::istream& in) {
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) lines.push_back(line);
  }
  if (lines.size() < 3 || trim(lines[0]) != "k,p,d,shrink") throw Error(ErrorKind::ParseError, "missing interpolant header record");
  const auto head = split(lines[1], ',');
  if (head.size() != 4) throw Error(ErrorKind::ParseError, "line 2: expected k,p,d,shrink values");
  const int k = static_cast<int>(parse_double(head[0], "line 2"));
  const double p = parse_double(head[1], "line 2");
  const int d = static_cast<int>(parse_double(head[2], "line 2"));
  const double shrink = parse_double(head[3], "line 2");
  const SobolevParams params = make_params(k, p, d);
  const auto cols = split(lines[2], ',');
  if (cols.size() != static_cast<std::size_t>(d) + 2) throw Error(ErrorKind::ParseError, "line 3: expected c1..cd,radius,weight");
  std::vector<double> coords;
  std::vector<double> radii;
  std::vector<double> weights;
  for (std::size_t l = 3; l < lines.size(); ++l) {
    const std::string where = "line " + std::to_string(l + 1);
    const auto fields = split(lines[l], ',');
    if (fields.size() != cols.size()) throw Error(ErrorKind::ParseError, where + ": wrong column count");
    for (int j = 0; j < d; ++j) coords.push_back(parse_double(fields[static_cast<std::size_t>(j)], where));
    radii.push_back(parse_double(fields[static_cast<std::size_t>(d)], where));
    weights.push_back(parse_double(fields.back(), where));
  }
  if (!(shrink > 0.0 && shrink <= 1.0)) throw Error(ErrorKind::InvalidShrink, "shrink must lie in (0, 1]");
  const Dataset data = make_dataset(d, std::move(coords), std::move(weights));
  detail::check_support_radii(data, radii);
  return detail::assemble(params, shrink, data, std::move(radii));
}

}  // namespace soblab
