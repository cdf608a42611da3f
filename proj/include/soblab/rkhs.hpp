#pragma once

#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "soblab/dataset.hpp"
#include "soblab/error.hpp"

namespace soblab {

/// Matern kernel with smoothness nu in {1/2, 3/2} and lengthscale ell.
struct KernelSpec {
  double nu = 0.5;
  double lengthscale = 1.0;
};

/// nu = k - d/2, the Matern smoothness whose RKHS is norm-equivalent to W^{k,2}.
inline KernelSpec kernel_for(int k, int d, double lengthscale = 1.0) { return {k - d / 2.0, lengthscale}; }

inline void validate_kernel(const KernelSpec& spec) {
  if (spec.nu != 0.5 && spec.nu != 1.5) throw Error(ErrorKind::UnsupportedNu, "supported nu are 1/2 and 3/2, got " + format_double(spec.nu));
  if (!(spec.lengthscale > 0.0)) throw Error(ErrorKind::InvalidParams, "lengthscale must be positive");
}

inline double kernel_eval(const KernelSpec& spec, double r) {
  validate_kernel(spec);
  if (!(r >= 0.0)) throw Error(ErrorKind::InvalidParams, "kernel distance must be nonnegative");
  const double s = r / spec.lengthscale;
  if (spec.nu == 0.5) return std::exp(-s);
  const double a = std::sqrt(3.0) * s;
  return (1.0 + a) * std::exp(-a);
}

struct KernelInterpolant {
  int dim = 0;
  std::vector<double> centers;
  std::vector<double> coefficients;
  KernelSpec kernel;
  double jitter = 0.0;
  double residual = 0.0;
  double norm = 0.0;  // sqrt(c^T K c) with the unjittered K

  [[nodiscard]] std::size_t size() const noexcept { return coefficients.size(); }
};

/// Dense Gram matrix; entry (i, j) is computed once and mirrored, so K is symmetric to the bit.
inline Eigen::MatrixXd gram_matrix(const Dataset& data, const KernelSpec& spec) {
  validate_kernel(spec);
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double r = std::sqrt(squared_distance(data.point(static_cast<std::size_t>(i)), data.point(static_cast<std::size_t>(j))));
      K(i, j) = K(j, i) = kernel_eval(spec, r);
    }
  }
  return K;
}

inline constexpr std::size_t kMaxKernelPoints = 4096;
inline constexpr double kKernelResidualTolerance = 1e-6;

/// Solves K c = y by Cholesky, escalating a diagonal jitter through 0, 1e-12, 1e-10, 1e-8
/// until the interpolation residual is within 1e-6.
inline KernelInterpolant min_norm_interpolant(const Dataset& data, const KernelSpec& spec) {
  validate_kernel(spec);
  if (data.size() > kMaxKernelPoints) throw Error(ErrorKind::InvalidParams, "dense kernel solve limited to 4096 points");
  const Eigen::MatrixXd K = gram_matrix(data, spec);
  const Eigen::Map<const Eigen::VectorXd> y(data.labels.data(), static_cast<Eigen::Index>(data.size()));
  for (double jitter : {0.0, 1e-12, 1e-10, 1e-8}) {
    Eigen::MatrixXd A = K;
    A.diagonal().array() += jitter;
    const Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) continue;
    const Eigen::VectorXd c = llt.solve(y);
    if (!c.allFinite()) continue;
    const double residual = (K * c - y).cwiseAbs().maxCoeff();
    if (!(residual <= kKernelResidualTolerance)) continue;
    KernelInterpolant u;
    u.dim = data.dim;
    u.centers = data.coords;
    u.coefficients.assign(c.data(), c.data() + c.size());
    u.kernel = spec;
    u.jitter = jitter;
    u.residual = residual;
    u.norm = std::sqrt(std::max(0.0, c.dot(K * c)));
    return u;
  }
  throw Error(ErrorKind::SolveFailed, "Cholesky failed or residual above 1e-6 at every jitter level");
}

inline double eval(const KernelInterpolant& u, std::span<const double> x) {
  double s = 0.0;
  const std::size_t d = static_cast<std::size_t>(u.dim);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const std::span<const double> c(u.centers.data() + i * d, d);
    s += u.coefficients[i] * kernel_eval(u.kernel, std::sqrt(squared_distance(x, c)));
  }
  return s;
}

inline double rkhs_norm(const KernelInterpolant& u) { return u.norm; }

inline void write_coefficients_csv(const KernelInterpolant& u, std::ostream& out) {
  for (int j = 0; j < u.dim; ++j) out << 'x' << (j + 1) << ',';
  out << "coefficient\n";
  const std::size_t d = static_cast<std::size_t>(u.dim);
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) out << format_double(u.centers[i * d + j]) << ',';
    out << format_double(u.coefficients[i]) << '\n';
  }
}

}  // namespace soblab
