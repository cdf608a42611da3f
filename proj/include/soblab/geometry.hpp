#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "soblab/dataset.hpp"
#include "soblab/error.hpp"
#include "soblab/kdtree.hpp"

namespace soblab {

/// Below this size every geometric query falls back to an O(n^2) scan.
inline constexpr std::size_t kBruteForceBelow = 64;

struct NnRadii {
  std::vector<double> radii;
};

struct NnGraph {
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (i, j): x_j is a nearest neighbour of x_i
};

/// Kissing number tau(d); only the exactly known low-dimensional values are tabulated.
inline int kissing_number(int d) {
  switch (d) {
    case 1: return 2;
    case 2: return 6;
    case 3: return 12;
    default:
      throw Error(ErrorKind::KissingUndefined, "kissing number not tabulated for d = " + std::to_string(d));
  }
}

/// Upper bound on how many radii a single-point replacement can change.
inline int changed_radii_bound(int d) { return 1 + 2 * kissing_number(d); }

namespace detail {

inline void require_points(const Dataset& data) {
  if (data.size() < 2) throw Error(ErrorKind::TooFewPoints, "need at least 2 points, got " + std::to_string(data.size()));
}

inline void duplicate_error(std::size_t i, std::size_t j) {
  throw Error(ErrorKind::DuplicatePoints, "points " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
}

}  // namespace detail

/// For every point, the squared distance to its nearest other point and all indices
/// attaining it. Spatial index above kBruteForceBelow points, plain scan below.
inline std::vector<KdTree::Nearest> nearest_neighbors(const Dataset& data) {
  detail::require_points(data);
  const std::size_t n = data.size();
  std::vector<KdTree::Nearest> out(n);
  if (n < kBruteForceBelow) {
    for (std::size_t i = 0; i < n; ++i) {
      auto& nb = out[i];
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double d2 = squared_distance(data.point(i), data.point(j));
        if (d2 < nb.d2) {
          nb.d2 = d2;
          nb.indices.assign(1, j);
        } else if (d2 == nb.d2) {
          nb.indices.push_back(j);
        }
      }
    }
  } else {
    const KdTree tree(data.coords, data.dim);
    for (std::size_t i = 0; i < n; ++i) tree.nearest(data.point(i), i, out[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (out[i].d2 == 0.0) detail::duplicate_error(i, out[i].indices.front());
  }
  return out;
}

inline NnRadii nn_radii(const Dataset& data) {
  const auto nbs = nearest_neighbors(data);
  NnRadii r;
  r.radii.reserve(nbs.size());
  for (const auto& nb : nbs) r.radii.push_back(std::sqrt(nb.d2));
  return r;
}

inline NnGraph nn_graph(const Dataset& data) {
  const auto nbs = nearest_neighbors(data);
  NnGraph g;
  g.n = nbs.size();
  for (std::size_t i = 0; i < nbs.size(); ++i) {
    for (std::size_t j : nbs[i].indices) g.edges.emplace_back(i, j);
  }
  return g;
}

inline std::vector<std::size_t> in_degrees(const NnGraph& graph, std::size_t n) {
  std::vector<std::size_t> deg(n, 0);
  for (const auto& [from, to] : graph.edges) {
    if (to >= n || from >= n) throw Error(ErrorKind::MismatchedLengths, "edge endpoint outside graph");
    ++deg[to];
  }
  return deg;
}

/// True when some point has two or more equidistant nearest neighbours.
inline bool has_ties(const NnGraph& graph) {
  std::vector<std::size_t> out(graph.n, 0);
  for (const auto& e : graph.edges) {
    if (++out[e.first] > 1) return true;
  }
  return false;
}

/// Pairs (i < j) whose half-radius balls overlap, i.e. ||x_i - x_j|| < (r_i + r_j) / 2.
/// Radii may be arbitrary positive numbers; an overlapping pair always lies within the
/// larger of its two radii, which bounds the spatial query.
inline std::vector<std::pair<std::size_t, std::size_t>> check_packing(const Dataset& data, const NnRadii& radii) {
  const std::size_t n = data.size();
  if (radii.radii.size() != n) {
    throw Error(ErrorKind::MismatchedLengths,
                std::to_string(radii.radii.size()) + " radii for " + std::to_string(n) + " points");
  }
  std::vector<std::pair<std::size_t, std::size_t>> violations;
  auto overlaps = [&](std::size_t i, std::size_t j, double d2) {
    return 2.0 * std::sqrt(d2) < radii.radii[i] + radii.radii[j];
  };
  if (n < kBruteForceBelow) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (overlaps(i, j, squared_distance(data.point(i), data.point(j)))) violations.emplace_back(i, j);
      }
    }
    return violations;
  }
  const KdTree tree(data.coords, data.dim);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = radii.radii[i];
    const double reach2 = r * r * (1.0 + 1e-12);
    tree.within(data.point(i), reach2, [&](std::size_t j, double d2) {
      if (j == i) return;
      // each pair is reported from the endpoint with the larger radius (lower index on ties)
      const double rj = radii.radii[j];
      if (rj > r || (rj == r && j < i)) return;
      if (overlaps(i, j, d2)) violations.emplace_back(std::min(i, j), std::max(i, j));
    });
  }
  std::sort(violations.begin(), violations.end());
  violations.erase(std::unique(violations.begin(), violations.end()), violations.end());
  return violations;
}

/// Number of indices whose nearest-neighbour radius changes when point `index` is
/// replaced by `replacement`.
inline std::size_t perturbation_changed_radii(const Dataset& data, std::size_t index, std::span<const double> replacement) {
  detail::require_points(data);
  if (index >= data.size()) throw Error(ErrorKind::MismatchedLengths, "replacement index out of range");
  if (replacement.size() != static_cast<std::size_t>(data.dim)) {
    throw Error(ErrorKind::MismatchedLengths, "replacement has wrong dimension");
  }
  const NnRadii before = nn_radii(data);
  Dataset moved = data;
  for (int j = 0; j < data.dim; ++j) {
    moved.coords[index * static_cast<std::size_t>(data.dim) + static_cast<std::size_t>(j)] = replacement[static_cast<std::size_t>(j)];
  }
  const NnRadii after = nn_radii(moved);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < data.size(); ++i) changed += before.radii[i] != after.radii[i] ? 1 : 0;
  return changed;
}

}  // namespace soblab
