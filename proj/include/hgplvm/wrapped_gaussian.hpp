#pragma once

// Wrapped Gaussian N^w(mu, S) on the Lorentz model: draw v~ ~ N(0, S) in the
// tangent space at the origin, transport it to mu, and wrap it with Exp_mu.
// The density is
//   log N^w(x | mu, S) = log N(v~ | 0, S) - (Q-1) log(sinh|u| / |u|)
// which is the change of variables through the exponential map.

#include <hgplvm/lorentz.hpp>

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace hgplvm {

/// Variational posterior of one latent point; `s` holds the diagonal of S.
struct VariationalState {
  LorentzPoint mu;
  Vector s;

  void validate() const {
    if (s.size() != mu.dim()) {
      throw DimensionError("VariationalState: variance length differs from Q");
    }
    if (!((s.array() > 0.0).all()) || !s.allFinite()) {
      throw ParameterError("VariationalState: variances must be positive");
    }
  }
};

/// One reparameterized draw; x = Exp_mu(u) with u = PT_{mu0 -> mu}(v).
struct ReparamSample {
  Vector zeta;
  TangentVector v; ///< at the origin, time component 0
  TangentVector u; ///< at mu
  LorentzPoint x;
};

namespace detail {

inline constexpr double kLog2Pi = 1.8378770664093453; // log(2 pi)

/// Draw from the chain for ambient mean `mu`; returns u and x.
struct ChainOut {
  Vector vt; ///< S^{1/2} zeta
  Vector u;
  Vector x;
};

inline ChainOut sample_chain(VectorRef mu, VectorRef s, VectorRef zeta) {
  const auto q = s.size();
  ChainOut out;
  out.vt = s.cwiseSqrt().cwiseProduct(zeta);
  // PT_{mu0 -> mu}(v) with v = [0, vt]: alpha = mu_0 and <mu - alpha mu0, v>
  // reduces to mu~ . vt.
  const double c = mu.tail(q).dot(out.vt) / (mu[0] + 1.0);
  out.u = c * mu;
  out.u[0] += c;
  out.u.tail(q) += out.vt;
  out.x = exp_map(mu, out.u);
  return out;
}

/// log N^w(x | mu0, I) evaluated through r = d(mu0, x) = asinh |x~|.
inline double log_prior_density(VectorRef x) {
  const auto q = x.size() - 1;
  const double r = std::asinh(x.tail(q).norm());
  return -0.5 * static_cast<double>(q) * kLog2Pi - 0.5 * r * r -
         static_cast<double>(q - 1) * log_sinhc(r);
}

/// Ambient gradient of log_prior_density; its time component is zero.
inline Vector log_prior_grad(VectorRef x) {
  const auto q = x.size() - 1;
  const double sh = x.tail(q).norm();
  const double r = std::asinh(sh);
  const double coef = (1.0 + static_cast<double>(q - 1) *
                                 log_sinhc_prime_over_r(r)) /
                      (sinhc(r) * std::sqrt(1.0 + sh * sh));
  Vector g = Vector::Zero(q + 1);
  g.tail(q) = -coef * x.tail(q);
  return g;
}

/// log q for a cached draw; |u|_L = |vt| by isometry of the transport.
inline double log_q_cached(VectorRef s, VectorRef vt) {
  const auto q = s.size();
  const double r = vt.norm();
  return -0.5 * static_cast<double>(q) * kLog2Pi -
         0.5 * s.array().log().sum() -
         0.5 * (vt.array().square() / s.array()).sum() -
         static_cast<double>(q - 1) * log_sinhc(r);
}

/// d log q / d s_q for a cached draw with zeta held fixed.
inline Vector log_q_grad_s(VectorRef s, VectorRef vt) {
  const auto q = s.size();
  const double h = log_sinhc_prime_over_r(vt.norm());
  return (-0.5 - 0.5 * static_cast<double>(q - 1) * h *
                     vt.array().square()) /
         s.array();
}

/// Jacobians of the (unprojected) chain output x in ambient mu and in s.
struct ChainJacobians {
  Matrix dx_dmu; ///< (Q+1) x (Q+1)
  Matrix dx_ds;  ///< (Q+1) x Q
};

inline ChainJacobians chain_jacobians(VectorRef mu, VectorRef s,
                                      VectorRef zeta, const ChainOut &c) {
  const auto q = s.size();
  const auto dim = q + 1;
  const double a = mu[0] + 1.0;
  const double proj = mu.tail(q).dot(c.vt);
  const double n = std::sqrt(std::max(0.0, lorentz_inner(c.u, c.u)));
  const double ch = std::cosh(n);
  const double f1 = sinhc(n);
  const double f2 = sinhc_prime_over_r(n);

  Vector w = mu;
  w[0] += 1.0;
  // Common direction multiplying <u, du>.
  const Vector radial = f1 * mu + f2 * c.u;

  ChainJacobians j{Matrix(dim, dim), Matrix(dim, q)};
  Vector du(dim);
  for (Eigen::Index col = 0; col < dim; ++col) {
    if (col == 0) {
      du = (-proj / (a * a)) * w;
      du[0] += proj / a;
    } else {
      du = (c.vt[col - 1] / a) * w;
      du[col] += proj / a;
    }
    Vector dx = f1 * du + lorentz_inner(c.u, du) * radial;
    dx[col] += ch;
    j.dx_dmu.col(col) = dx;
  }
  for (Eigen::Index col = 0; col < q; ++col) {
    // d vt_col / d s_col = zeta / (2 sqrt(s))
    const double dvt = zeta[col] / (2.0 * std::sqrt(s[col]));
    du = (dvt * mu[col + 1] / a) * w;
    du[col + 1] += dvt;
    j.dx_ds.col(col) = f1 * du + lorentz_inner(c.u, du) * radial;
  }
  return j;
}

/// Log map at mu (only used to invert the chain for arbitrary x).
inline Vector log_map(VectorRef mu, VectorRef x) {
  const double d = distance(mu, x);
  const double sh = std::sinh(d / 2.0);
  const double cosh_d = 1.0 + 2.0 * sh * sh;
  Vector diff = x - cosh_d * mu;
  if (d < 1e-12) {
    return proj_tangent(mu, x - mu);
  }
  return diff / sinhc(d);
}

} // namespace detail

/// Deterministic reparameterized draw for a given standard normal zeta.
inline ReparamSample wg_sample(const VariationalState &state, VectorRef zeta) {
  state.validate();
  if (zeta.size() != state.s.size()) {
    throw DimensionError("wg_sample: zeta length differs from Q");
  }
  auto c = detail::sample_chain(state.mu.coords(), state.s, zeta);
  const auto q = state.s.size();
  Vector v = Vector::Zero(q + 1);
  v.tail(q) = c.vt;
  return {zeta, {LorentzPoint::origin(q), std::move(v)},
          {state.mu, std::move(c.u)},
          LorentzPoint::from_coords(std::move(c.x))};
}

/// Log density at an arbitrary hyperboloid point, inverting the chain.
inline double wg_log_density(const VariationalState &state,
                             const LorentzPoint &x) {
  state.validate();
  if (x.dim() != state.mu.dim()) {
    throw DimensionError("wg_log_density: dimension mismatch");
  }
  const auto q = state.s.size();
  const Vector u = detail::log_map(state.mu.coords(), x.coords());
  const Vector origin = LorentzPoint::origin(q).coords();
  const Vector v =
      detail::parallel_transport(state.mu.coords(), origin, u);
  return detail::log_q_cached(state.s, v.tail(q));
}

/// Log density at a draw of this state, using the cached tangent vector.
inline double wg_log_density(const VariationalState &state,
                             const ReparamSample &sample) {
  state.validate();
  const auto q = state.s.size();
  return detail::log_q_cached(state.s, sample.v.vec.tail(q));
}

struct KLEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Monte-Carlo KL[q || N^w(mu0, I)] with its standard error.
inline KLEstimate kl_mc_estimate(const VariationalState &state,
                                 std::span<const ReparamSample> samples) {
  if (samples.empty()) {
    throw ArgumentError("kl_mc: empty sample list");
  }
  state.validate();
  const auto q = state.s.size();
  std::vector<double> terms;
  terms.reserve(samples.size());
  for (const auto &smp : samples) {
    terms.push_back(detail::log_q_cached(state.s, smp.v.vec.tail(q)) -
                    detail::log_prior_density(smp.x.coords()));
  }
  const double h = static_cast<double>(terms.size());
  double mean = 0.0;
  for (double t : terms) {
    mean += t;
  }
  mean /= h;
  double var = 0.0;
  for (double t : terms) {
    var += (t - mean) * (t - mean);
  }
  const double se =
      terms.size() > 1 ? std::sqrt(var / (h - 1.0) / h) : 0.0;
  return {mean, se};
}

inline double kl_mc(const VariationalState &state,
                    std::span<const ReparamSample> samples) {
  return kl_mc_estimate(state, samples).mean;
}

struct ReparamGrads {
  Matrix dx_dmu;  ///< (Q+1) x (Q+1), ambient mean coordinates
  Matrix dx_ds;   ///< (Q+1) x Q
  Vector dkl_dmu; ///< ambient gradient of this draw's KL term
  Vector dkl_ds;  ///< gradient of this draw's KL term in s
};

/// Jacobians of one draw and the gradient of its KL contribution
/// log q(x) - log p(x), zeta held fixed.
inline ReparamGrads reparam_grads(const VariationalState &state,
                                  const ReparamSample &sample) {
  state.validate();
  const auto q = state.s.size();
  const Vector &mu = state.mu.coords();
  const auto chain = detail::sample_chain(mu, state.s, sample.zeta);
  auto jac = detail::chain_jacobians(mu, state.s, sample.zeta, chain);
  const Vector gp = detail::log_prior_grad(sample.x.coords());
  ReparamGrads out;
  out.dkl_dmu = -jac.dx_dmu.transpose() * gp;
  out.dkl_ds = detail::log_q_grad_s(state.s, sample.v.vec.tail(q)) -
               jac.dx_ds.transpose() * gp;
  out.dx_dmu = std::move(jac.dx_dmu);
  out.dx_ds = std::move(jac.dx_ds);
  return out;
}

} // namespace hgplvm
