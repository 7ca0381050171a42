#pragma once

// Arithmetic on the Lorentz (hyperboloid) model of hyperbolic space with
// curvature -1. Points live on the upper sheet {x : <x,x>_L = -1, x_0 > 0}
// of R^{Q+1}; coordinate 0 is the time-like one.

#include <hgplvm/errors.hpp>

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <utility>

namespace hgplvm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<const Vector>;

/// Absolute tolerance of the hyperboloid constraint for points near the
/// origin. Far from the origin the float error of <x,x>_L grows like x_0^2,
/// so checks scale the tolerance by max(1, x_0^2).
inline constexpr double kConstraintTol = 1e-9;
inline constexpr double kTangentTol = 1e-8;

/// -a_0 b_0 + sum_{q>=1} a_q b_q
inline double lorentz_inner(VectorRef a, VectorRef b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw DimensionError("lorentz_inner: vectors of length " +
                         std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  const auto n = a.size() - 1;
  return -a[0] * b[0] + a.tail(n).dot(b.tail(n));
}

namespace detail {

/// sinh(r)/r, series below 1e-4.
inline double sinhc(double r) {
  if (std::abs(r) < 1e-4) {
    const double r2 = r * r;
    return 1.0 + r2 / 6.0 + r2 * r2 / 120.0 + r2 * r2 * r2 / 5040.0;
  }
  return std::sinh(r) / r;
}

/// (r cosh r - sinh r) / r^3, the derivative of sinhc divided by r.
inline double sinhc_prime_over_r(double r) {
  if (std::abs(r) < 1e-2) {
    const double r2 = r * r;
    return 1.0 / 3.0 + r2 / 30.0 + r2 * r2 / 840.0 + r2 * r2 * r2 / 45360.0;
  }
  return (r * std::cosh(r) - std::sinh(r)) / (r * r * r);
}

/// (coth r - 1/r) / r, i.e. d/dr log(sinh r / r) divided by r.
inline double log_sinhc_prime_over_r(double r) {
  if (std::abs(r) < 1e-2) {
    const double r2 = r * r;
    return 1.0 / 3.0 - r2 / 45.0 + 2.0 * r2 * r2 / 945.0 -
           r2 * r2 * r2 / 4725.0;
  }
  return (1.0 / std::tanh(r) - 1.0 / r) / r;
}

/// log(sinh r / r) without overflow for large r.
inline double log_sinhc(double r) {
  r = std::abs(r);
  if (r < 1e-4) {
    return r * r / 6.0;
  }
  if (r > 20.0) {
    // sinh r = e^r (1 - e^{-2r}) / 2
    return r + std::log1p(-std::exp(-2.0 * r)) - std::log(2.0 * r);
  }
  return std::log(std::sinh(r) / r);
}

/// Squared Lorentz norm of x - y, computed from spatial differences so that
/// nearby points keep their relative precision.
inline double lorentz_sqdist(VectorRef x, VectorRef y) {
  const auto n = x.size() - 1;
  const double spatial_sq = (x.tail(n) - y.tail(n)).squaredNorm();
  const double dt = (x.tail(n) - y.tail(n)).dot(x.tail(n) + y.tail(n)) /
                    (x[0] + y[0]);
  return std::max(0.0, spatial_sq - dt * dt);
}

/// Geodesic distance of two hyperboloid points. Equivalent to
/// acosh(max(1, -<x,y>_L)), evaluated as 2 asinh(||x-y||_L / 2).
inline double distance(VectorRef x, VectorRef y) {
  return 2.0 * std::asinh(0.5 * std::sqrt(lorentz_sqdist(x, y)));
}

/// Re-derive x_0 from the spatial coordinates.
inline void reproject(Eigen::Ref<Vector> x) {
  const auto n = x.size() - 1;
  x[0] = std::sqrt(1.0 + x.tail(n).squaredNorm());
}

/// Exp_mu(v) = cosh(|v|) mu + sinh(|v|) v / |v|, re-projected.
inline Vector exp_map(VectorRef mu, VectorRef v) {
  const double r = std::sqrt(std::max(0.0, lorentz_inner(v, v)));
  Vector out = std::cosh(r) * mu + sinhc(r) * v;
  reproject(out);
  return out;
}

/// g + <mu,g>_L mu
inline Vector proj_tangent(VectorRef mu, VectorRef g) {
  return g + lorentz_inner(mu, g) * mu;
}

/// Transport of v from T_nu to T_mu along the geodesic.
inline Vector parallel_transport(VectorRef nu, VectorRef mu, VectorRef v) {
  const double alpha = -lorentz_inner(mu, nu);
  if (alpha + 1.0 < 1e-12) {
    return v;
  }
  const double coef = (lorentz_inner(mu, v) - alpha * lorentz_inner(nu, v)) /
                      (alpha + 1.0);
  return v + coef * (mu + nu);
}

inline double constraint_scale(double x0) { return std::max(1.0, x0 * x0); }

inline bool on_hyperboloid(VectorRef x, double tol = kConstraintTol) {
  if (x.size() < 2 || !x.allFinite() || !(x[0] > 0.0)) {
    return false;
  }
  return std::abs(lorentz_inner(x, x) + 1.0) <= tol * constraint_scale(x[0]);
}

inline bool is_tangent(VectorRef base, VectorRef v, double tol = kTangentTol) {
  const double scale = std::max(1.0, base.norm() * v.norm());
  return std::abs(lorentz_inner(base, v)) <= tol * scale;
}

} // namespace detail

/// A point on the upper hyperboloid H^Q embedded in R^{Q+1}.
class LorentzPoint {
public:
  /// The origin mu_0 = [1, 0, ..., 0].
  static LorentzPoint origin(Eigen::Index q) {
    Vector c = Vector::Zero(q + 1);
    c[0] = 1.0;
    return LorentzPoint(std::move(c));
  }

  /// [sqrt(1 + |s|^2), s]
  static LorentzPoint lift(VectorRef spatial) {
    if (spatial.size() < 1) {
      throw DimensionError("lift: empty spatial vector");
    }
    if (!spatial.allFinite()) {
      throw NumericError("lift: non-finite spatial coordinates");
    }
    Vector c(spatial.size() + 1);
    c.tail(spatial.size()) = spatial;
    detail::reproject(c);
    return LorentzPoint(std::move(c));
  }

  /// Accepts ambient coordinates that already satisfy the constraint; the
  /// coordinates are kept bit-for-bit.
  static LorentzPoint from_coords(Vector coords) {
    if (!detail::on_hyperboloid(coords)) {
      throw ArgumentError("from_coords: coordinates are not on the upper "
                          "hyperboloid");
    }
    return LorentzPoint(std::move(coords));
  }

  const Vector &coords() const noexcept { return coords_; }
  Eigen::Index dim() const noexcept { return coords_.size() - 1; }
  double time() const noexcept { return coords_[0]; }
  auto spatial() const { return coords_.tail(dim()); }

  bool operator==(const LorentzPoint &) const = default;

private:
  explicit LorentzPoint(Vector coords) : coords_(std::move(coords)) {}

  Vector coords_;
};

/// An element of the tangent space at `base`, in ambient coordinates.
struct TangentVector {
  LorentzPoint base;
  Vector vec;

  /// sqrt(<v,v>_L); tangent vectors are space-like so this is real.
  double norm() const {
    return std::sqrt(std::max(0.0, lorentz_inner(vec, vec)));
  }
};

/// A point in the open unit ball (Poincare model).
struct PoincarePoint {
  Vector coords;
};

/// Tangent vector at the origin with time component 0.
inline TangentVector tangent_at_origin(VectorRef spatial) {
  Vector v = Vector::Zero(spatial.size() + 1);
  v.tail(spatial.size()) = spatial;
  return {LorentzPoint::origin(spatial.size()), std::move(v)};
}

inline LorentzPoint lift(VectorRef spatial) { return LorentzPoint::lift(spatial); }

inline double lorentz_inner(const LorentzPoint &a, const LorentzPoint &b) {
  return lorentz_inner(a.coords(), b.coords());
}

/// Geodesic distance cosh^{-1}(-<x,y>_L).
inline double distance(const LorentzPoint &x, const LorentzPoint &y) {
  if (x.dim() != y.dim()) {
    throw DimensionError("distance: points of different dimension");
  }
  return detail::distance(x.coords(), y.coords());
}

inline LorentzPoint exp_map(const LorentzPoint &mu, const TangentVector &v) {
  if (v.vec.size() != mu.coords().size()) {
    throw DimensionError("exp_map: tangent dimension mismatch");
  }
  if (!detail::is_tangent(mu.coords(), v.vec)) {
    throw ArgumentError("exp_map: vector is not tangent at the base point");
  }
  return LorentzPoint::from_coords(detail::exp_map(mu.coords(), v.vec));
}

inline TangentVector proj_tangent(const LorentzPoint &mu, VectorRef g) {
  if (g.size() != mu.coords().size()) {
    throw DimensionError("proj_tangent: gradient dimension mismatch");
  }
  return {mu, detail::proj_tangent(mu.coords(), g)};
}

inline TangentVector parallel_transport(const LorentzPoint &nu,
                                        const LorentzPoint &mu,
                                        const TangentVector &v) {
  if (nu.dim() != mu.dim() || v.vec.size() != nu.coords().size()) {
    throw DimensionError("parallel_transport: dimension mismatch");
  }
  // Re-project: rounding in the lifted time coordinate leaves a small normal
  // component that would otherwise build up over long chains.
  return {mu, detail::proj_tangent(
                  mu.coords(),
                  detail::parallel_transport(nu.coords(), mu.coords(), v.vec))};
}

inline PoincarePoint to_poincare(const LorentzPoint &x) {
  return {x.spatial() / (1.0 + x.time())};
}

} // namespace hgplvm
