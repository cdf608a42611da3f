#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "soblab/dataset.hpp"

namespace soblab {

/// Exact k-d tree over a flat row-major point array. Queries are exact: pruning uses
/// the per-axis gap, which never exceeds the floating-point squared distance, so
/// results match a brute-force scan bit for bit, ties included.
class KdTree {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  struct Nearest {
    double d2 = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> indices;  // every point attaining d2
  };

  KdTree() = default;

  KdTree(std::span<const double> coords, int dim, std::size_t leaf_size = 8)
      : dim_(dim), coords_(coords.begin(), coords.end()), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
    const std::size_t n = dim_ > 0 ? coords_.size() / static_cast<std::size_t>(dim_) : 0;
    perm_.resize(n);
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    if (n > 0) {
      nodes_.reserve(2 * n / leaf_size_ + 2);
      build(0, n);
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return perm_.size(); }
  [[nodiscard]] int dim() const noexcept { return dim_; }

  [[nodiscard]] std::span<const double> point(std::size_t i) const noexcept {
    return {coords_.data() + i * static_cast<std::size_t>(dim_), static_cast<std::size_t>(dim_)};
  }

  /// Nearest points to `query`, skipping index `exclude`; all ties are reported
  /// in ascending index order.
  void nearest(std::span<const double> query, std::size_t exclude, Nearest& out) const {
    out.d2 = std::numeric_limits<double>::infinity();
    out.indices.clear();
    if (!nodes_.empty()) nearest_rec(0, query, exclude, out);
    std::sort(out.indices.begin(), out.indices.end());
  }

  [[nodiscard]] Nearest nearest(std::span<const double> query, std::size_t exclude = npos) const {
    Nearest out;
    nearest(query, exclude, out);
    return out;
  }

  /// Calls visit(index, d2) for every point with d2 <= radius2.
  template <class Visit>
  void within(std::span<const double> query, double radius2, Visit&& visit) const {
    if (!nodes_.empty()) within_rec(0, query, radius2, visit);
  }

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    double split = 0.0;
    int axis = -1;  // -1 marks a leaf
    std::uint32_t left = 0;
    std::uint32_t right = 0;
  };

  double coord(std::size_t i, int axis) const noexcept {
    return coords_[i * static_cast<std::size_t>(dim_) + static_cast<std::size_t>(axis)];
  }

  std::uint32_t build(std::size_t begin, std::size_t end) {
    const auto id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= leaf_size_) return id;

    int axis = 0;
    double best_spread = -1.0;
    for (int a = 0; a < dim_; ++a) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::size_t k = begin; k < end; ++k) {
        lo = std::min(lo, coord(perm_[k], a));
        hi = std::max(hi, coord(perm_[k], a));
      }
      if (hi - lo > best_spread) {
        best_spread = hi - lo;
        axis = a;
      }
    }
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(perm_.begin() + static_cast<std::ptrdiff_t>(begin), perm_.begin() + static_cast<std::ptrdiff_t>(mid),
                     perm_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return coord(a, axis) < coord(b, axis); });
    const double split = coord(perm_[mid], axis);
    const std::uint32_t left = build(begin, mid);
    const std::uint32_t right = build(mid, end);
    Node& node = nodes_[id];
    node.axis = axis;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
  }

  void nearest_rec(std::uint32_t id, std::span<const double> q, std::size_t exclude, Nearest& out) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::size_t k = node.begin; k < node.end; ++k) {
        const std::size_t i = perm_[k];
        if (i == exclude) continue;
        const double d2 = squared_distance(q, point(i));
        if (d2 < out.d2) {
          out.d2 = d2;
          out.indices.clear();
          out.indices.push_back(i);
        } else if (d2 == out.d2) {
          out.indices.push_back(i);
        }
      }
      return;
    }
    const double diff = q[static_cast<std::size_t>(node.axis)] - node.split;
    const std::uint32_t near_child = diff < 0.0 ? node.left : node.right;
    const std::uint32_t far_child = diff < 0.0 ? node.right : node.left;
    nearest_rec(near_child, q, exclude, out);
    if (diff * diff <= out.d2) nearest_rec(far_child, q, exclude, out);
  }

  template <class Visit>
  void within_rec(std::uint32_t id, std::span<const double> q, double radius2, Visit& visit) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::size_t k = node.begin; k < node.end; ++k) {
        const std::size_t i = perm_[k];
        const double d2 = squared_distance(q, point(i));
        if (d2 <= radius2) visit(i, d2);
      }
      return;
    }
    const double diff = q[static_cast<std::size_t>(node.axis)] - node.split;
    const std::uint32_t near_child = diff < 0.0 ? node.left : node.right;
    const std::uint32_t far_child = diff < 0.0 ? node.right : node.left;
    within_rec(near_child, q, radius2, visit);
    if (diff * diff <= radius2) within_rec(far_child, q, radius2, visit);
  }

  int dim_ = 0;
  std::vector<double> coords_;
  std::vector<std::size_t> perm_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_ = 8;
};

}  // namespace soblab
