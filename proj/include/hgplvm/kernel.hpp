#pragma once

// Hyperboloid exponential kernel k(x, y) = sigma * exp(-d_L(x, y) / kappa).

#include <hgplvm/lorentz.hpp>

#include <vector>

namespace hgplvm {

struct HEKernelParams {
  double sigma = 1.0; ///< variance
  double kappa = 1.0; ///< length scale, fixed during training

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw ParameterError("kernel sigma must be positive");
    }
    if (!(kappa > 0.0)) {
      throw ParameterError("kernel kappa must be positive");
    }
  }
};

enum class PointRole { Data, Inducing };

struct GramMatrix {
  Matrix values;
  PointRole row_role = PointRole::Data;
  PointRole col_role = PointRole::Data;
};

using PointList = std::vector<LorentzPoint>;

/// Columns of the result are the ambient coordinates of the points.
inline Matrix stack(const PointList &points) {
  if (points.empty()) {
    return Matrix(0, 0);
  }
  Matrix out(points.front().coords().size(), points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = points[i].coords();
  }
  return out;
}

inline PointList unstack(const Matrix &cols) {
  PointList out;
  out.reserve(cols.cols());
  for (Eigen::Index i = 0; i < cols.cols(); ++i) {
    out.push_back(LorentzPoint::from_coords(cols.col(i)));
  }
  return out;
}

namespace detail {

inline double kernel(const HEKernelParams &p, VectorRef x, VectorRef y) {
  return p.sigma * std::exp(-distance(x, y) / p.kappa);
}

/// Entry (i, j) is k(rows_i, cols_j); both arguments hold one point per
/// column.
inline Matrix gram(const HEKernelParams &p, const Matrix &rows,
                   const Matrix &cols) {
  Matrix k(rows.cols(), cols.cols());
  for (Eigen::Index j = 0; j < cols.cols(); ++j) {
    for (Eigen::Index i = 0; i < rows.cols(); ++i) {
      k(i, j) = kernel(p, rows.col(i), cols.col(j));
    }
  }
  return k;
}

/// Symmetric gram of one point set; the diagonal is exactly sigma.
inline Matrix gram_sym(const HEKernelParams &p, const Matrix &pts) {
  const auto n = pts.cols();
  Matrix k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = p.sigma;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      k(i, j) = kernel(p, pts.col(i), pts.col(j));
      k(j, i) = k(i, j);
    }
  }
  return k;
}

/// Ambient gradient of d_L(x, y) in x. Uses the extension
/// d = 2 asinh(||x - y||_L / 2), whose gradient g_l (x - y) / sinh d has no
/// large cancelling terms; it differs from the acosh(-<x,y>) extension only
/// along the normal direction. Zero when the points coincide.
inline Vector distance_grad(VectorRef x, VectorRef y) {
  const double d = distance(x, y);
  Vector g = x - y;
  if (d < 1e-9) {
    g.setZero();
    return g;
  }
  const auto n = x.size() - 1;
  g[0] = -(x.tail(n) - y.tail(n)).dot(x.tail(n) + y.tail(n)) / (x[0] + y[0]);
  return g / std::sinh(d);
}

inline Vector kernel_grad(const HEKernelParams &p, VectorRef x, VectorRef y) {
  const double d = distance(x, y);
  if (d < 1e-9) {
    return Vector::Zero(x.size());
  }
  const double k = p.sigma * std::exp(-d / p.kappa);
  return (-k / p.kappa) * distance_grad(x, y);
}

/// Reduce an ambient gradient to the Q free spatial coordinates, with
/// x_0 = sqrt(1 + |x~|^2) treated as dependent.
inline Vector spatial_gradient(VectorRef x, VectorRef ambient) {
  const auto n = x.size() - 1;
  return ambient.tail(n) + ambient[0] * x.tail(n) / x[0];
}

} // namespace detail

inline double kernel_eval(const HEKernelParams &p, const LorentzPoint &x,
                          const LorentzPoint &y) {
  return p.sigma * std::exp(-distance(x, y) / p.kappa);
}

inline GramMatrix gram(const HEKernelParams &p, const PointList &rows,
                       const PointList &cols,
                       PointRole row_role = PointRole::Data,
                       PointRole col_role = PointRole::Data) {
  if (rows.empty() || cols.empty()) {
    throw ArgumentError("gram: empty point list");
  }
  if (rows.front().dim() != cols.front().dim()) {
    throw DimensionError("gram: point dimensions differ");
  }
  return {detail::gram(p, stack(rows), stack(cols)), row_role, col_role};
}

/// Ambient-space gradient of k(x, y) with respect to x.
inline Vector kernel_grad_point(const HEKernelParams &p, const LorentzPoint &x,
                                const LorentzPoint &y) {
  if (x.dim() != y.dim()) {
    throw DimensionError("kernel_grad_point: dimension mismatch");
  }
  return detail::kernel_grad(p, x.coords(), y.coords());
}

/// (1/sigma) * sum_ij dF_dK_ij K_ij. Every gram entry is proportional to
/// sigma, so this is dF/dsigma for one gram block.
inline double variance_grad(const HEKernelParams &p, const Matrix &dF_dK,
                            const Matrix &K) {
  if (dF_dK.rows() != K.rows() || dF_dK.cols() != K.cols()) {
    throw DimensionError("variance_grad: shape mismatch");
  }
  return dF_dK.cwiseProduct(K).sum() / p.sigma;
}

inline double variance_grad(const HEKernelParams &p, const Matrix &dF_dK,
                            const GramMatrix &K) {
  return variance_grad(p, dF_dK, K.values);
}

} // namespace hgplvm
