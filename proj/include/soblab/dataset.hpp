#pragma once

#include <charconv>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "soblab/error.hpp"

namespace soblab {

/// n labelled points in R^d, stored row-major.
struct Dataset {
  int dim = 0;
  std::vector<double> coords;
  std::vector<double> labels;

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }

  [[nodiscard]] std::span<const double> point(std::size_t i) const noexcept {
    return {coords.data() + i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
  }
};

inline Dataset make_dataset(int dim, std::vector<double> coords, std::vector<double> labels) {
  if (dim < 1) throw Error(ErrorKind::InvalidParams, "dimension must be positive");
  if (coords.size() != labels.size() * static_cast<std::size_t>(dim)) {
    throw Error(ErrorKind::MismatchedLengths, "coordinate count " + std::to_string(coords.size()) +
                                                  " does not match " + std::to_string(labels.size()) +
                                                  " labels in dimension " + std::to_string(dim));
  }
  return Dataset{dim, std::move(coords), std::move(labels)};
}

/// Summation order is fixed (axis 0 first) so every caller gets the same bits.
inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = a[j] - b[j];
    s += diff * diff;
  }
  return s;
}

inline double squared_norm(std::span<const double> a) noexcept {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

// ---------------------------------------------------------------------------
// Text helpers shared by every CSV surface.

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

inline double parse_double(std::string_view token, std::string_view where) {
  double v = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw Error(ErrorKind::ParseError, std::string(where) + ": not a number: '" + std::string(token) + "'");
  }
  return v;
}

/// CSV layout: header `x1,...,xd,y`, then one row per point.
inline void write_csv(const Dataset& data, std::ostream& out) {
  for (int j = 0; j < data.dim; ++j) out << 'x' << (j + 1) << ',';
  out << "y\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.point(i)) out << format_double(v) << ',';
    out << format_double(data.labels[i]) << '\n';
  }
}

inline Dataset read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  int dim = -1;
  std::vector<double> coords;
  std::vector<double> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(line, ',');
    const std::string where = "line " + std::to_string(line_no);
    if (dim < 0) {
      if (fields.size() < 2 || fields.back() != "y") {
        throw Error(ErrorKind::ParseError, where + ": expected header x1,...,xd,y");
      }
      for (std::size_t j = 0; j + 1 < fields.size(); ++j) {
        if (fields[j] != "x" + std::to_string(j + 1)) {
          throw Error(ErrorKind::ParseError, where + ": unexpected header column '" + std::string(fields[j]) + "'");
        }
      }
      dim = static_cast<int>(fields.size()) - 1;
      continue;
    }
    if (fields.size() != static_cast<std::size_t>(dim) + 1) {
      throw Error(ErrorKind::ParseError, where + ": expected " + std::to_string(dim + 1) + " columns");
    }
    for (int j = 0; j < dim; ++j) coords.push_back(parse_double(fields[static_cast<std::size_t>(j)], where));
    labels.push_back(parse_double(fields.back(), where));
  }
  if (dim < 0) throw Error(ErrorKind::ParseError, "missing header row");
  return make_dataset(dim, std::move(coords), std::move(labels));
}

}  // namespace soblab
