#pragma once

// GP-LVM objectives with the hyperboloid exponential kernel:
//   full       F    = log N(Y | 0, K_nn + beta^{-1} I)
//   sparse     F'   = collapsed inducing-point bound with A = K_mm + beta K_mn K_nm
//   Bayesian   F'_b = the same bound with Monte-Carlo Psi statistics minus KL
// Each evaluation returns the value and the gradients needed by the trainer:
// ambient per-point gradients plus gradients in log sigma, log beta and
// (Bayesian) log s.

#include <hgplvm/kernel.hpp>
#include <hgplvm/wrapped_gaussian.hpp>

#include <Eigen/Cholesky>

#include <numbers>
#include <string>
#include <vector>

namespace hgplvm {

enum class Variant { Full, Sparse, Bayesian };

inline std::string to_string(Variant v) {
  switch (v) {
  case Variant::Full:
    return "full";
  case Variant::Sparse:
    return "sparse";
  case Variant::Bayesian:
    return "bayesian";
  }
  return "unknown";
}

struct ModelConfig {
  Variant variant = Variant::Full;
  Eigen::Index Q = 2;
  Eigen::Index M = 0; ///< inducing points (Sparse, Bayesian)
  Eigen::Index H = 1; ///< Monte-Carlo draws per point (Bayesian)
  HEKernelParams kernel;
  double beta = 100.0;
  /// Relative jitter on K_mm, and the retry level used when a
  /// factorization fails.
  double jitter = 1e-8;
  double retry_jitter = 1e-4;

  void validate(Eigen::Index n) const {
    kernel.validate();
    if (Q < 1) {
      throw ConfigError("model: Q must be at least 1");
    }
    if (!(beta > 0.0) || !std::isfinite(beta)) {
      throw ConfigError("model: beta must be positive");
    }
    if (variant != Variant::Full && (M < 1 || M > n)) {
      throw ConfigError("model: inducing count M must satisfy 1 <= M <= N");
    }
    if (variant == Variant::Bayesian && H < 1) {
      throw ConfigError("model: sample count H must be at least 1");
    }
  }
};

struct Gradients {
  Matrix latent;        ///< (Q+1) x N ambient gradients (variational means)
  Matrix log_s;         ///< Q x N, Bayesian only
  double log_sigma = 0; ///< d/d log sigma
  double log_beta = 0;  ///< d/d log beta
};

struct ObjectiveEval {
  double value = 0.0;
  double kl = 0.0; ///< sum_i KL_i, Bayesian only
  Gradients grads;
};

struct HyperGrads {
  double dlog_sigma = 0.0;
  double dlog_beta = 0.0;
};

inline HyperGrads hyperparam_grads(const ObjectiveEval &eval) {
  return {eval.grads.log_sigma, eval.grads.log_beta};
}

namespace detail {

inline constexpr double kLogTwoPi = 1.8378770664093453;

/// Cholesky of `a + jitter I`, retrying once with the larger jitter.
struct SpdFactor {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;

  double logdet() const {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  Matrix inverse() const {
    return llt.solve(Matrix::Identity(llt.rows(), llt.cols()));
  }
};

inline bool llt_ok(const Eigen::LLT<Matrix> &llt) {
  return llt.info() == Eigen::Success &&
         llt.matrixLLT().diagonal().allFinite() &&
         (llt.matrixLLT().diagonal().array() > 0.0).all();
}

inline SpdFactor factorize(const Matrix &a, double jitter, double retry,
                           const char *what) {
  SpdFactor f;
  for (double j : {jitter, retry}) {
    Matrix b = a;
    b.diagonal().array() += j;
    f.llt.compute(b);
    f.jitter = j;
    if (llt_ok(f.llt)) {
      return f;
    }
  }
  throw ConditioningError(std::string("factorization of ") + what +
                          " failed after jitter retry (jitter " +
                          std::to_string(retry) + ")");
}

/// Accumulate sum_j W_ij * grad_{x_i} k(x_i, c_j) into out.col(i), where
/// rows index `pts` and columns index `centers`.
inline void chain_kernel_grads(const HEKernelParams &p, const Matrix &pts,
                               const Matrix &centers, const Matrix &weights,
                               const Matrix &kvals, Matrix &out) {
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    for (Eigen::Index j = 0; j < centers.cols(); ++j) {
      const double w = weights(i, j);
      if (w == 0.0) {
        continue;
      }
      const double d = distance(pts.col(i), centers.col(j));
      if (d < 1e-9) {
        continue;
      }
      out.col(i) += (-w * kvals(i, j) / p.kappa) *
                    distance_grad(pts.col(i), centers.col(j));
    }
  }
}

inline void check_data(const Matrix &Y, Eigen::Index n, Eigen::Index dim) {
  if (Y.rows() != n) {
    throw DimensionError("objective: Y has " + std::to_string(Y.rows()) +
                         " rows but there are " + std::to_string(n) +
                         " latent points");
  }
  if (Y.cols() < 1 || n < 1) {
    throw DimensionError("objective: empty data");
  }
  if (dim < 2) {
    throw DimensionError("objective: latent points must have Q >= 1");
  }
}

/// Pieces shared by the sparse and Bayesian bounds once the gram statistics
/// are known. `stat1` is K_mn (or Psi_1), `stat2` is K_mn K_nm (or Psi_2).
struct CollapsedBound {
  double value = 0.0;
  Matrix dF_dstat1; ///< M x N
  Matrix dF_dstat2; ///< M x M, symmetric
  Matrix dF_dKmm;   ///< M x M, symmetric, with respect to jittered K_mm
  double dF_dbeta = 0.0;
  Matrix kmm_jittered;
};

inline CollapsedBound collapsed_bound(const Matrix &Y, const Matrix &Kmm,
                                      const Matrix &stat1,
                                      const Matrix &stat2, double psi0,
                                      const ModelConfig &cfg) {
  const double beta = cfg.beta;
  const double sigma = cfg.kernel.sigma;
  const auto n = static_cast<double>(Y.rows());
  const auto dd = static_cast<double>(Y.cols());

  auto kf = factorize(Kmm, cfg.jitter * sigma, cfg.retry_jitter * sigma,
                      "K_mm");
  Matrix kmm = Kmm;
  kmm.diagonal().array() += kf.jitter;
  const Matrix A = kmm + beta * stat2;
  auto af = factorize(A, 0.0, cfg.retry_jitter * sigma, "A");

  const Matrix Ki = kf.inverse();
  const Matrix B = af.inverse();
  const Matrix P = stat1 * Y; // M x D
  const Matrix BP = B * P;
  const double yy = Y.squaredNorm();
  const double trace_pbp = P.cwiseProduct(BP).sum();
  const double trace_ki_s2 = Ki.cwiseProduct(stat2).sum();

  CollapsedBound out;
  out.value = -0.5 * dd *
                  (n * kLogTwoPi + af.logdet() - n * std::log(beta) -
                   kf.logdet()) -
              0.5 * beta * yy + 0.5 * beta * beta * trace_pbp -
              0.5 * beta * dd * psi0 + 0.5 * beta * dd * trace_ki_s2;

  // d/dA of -D/2 log|A| + beta^2/2 tr(A^{-1} P P^T)
  const Matrix GA = -0.5 * dd * B - 0.5 * beta * beta * BP * BP.transpose();
  out.dF_dstat1 = beta * beta * BP * Y.transpose();
  out.dF_dstat2 = beta * GA + 0.5 * beta * dd * Ki;
  out.dF_dKmm = GA + 0.5 * dd * Ki - 0.5 * beta * dd * Ki * stat2 * Ki;
  out.dF_dbeta = 0.5 * n * dd / beta - 0.5 * yy + beta * trace_pbp -
                 0.5 * dd * psi0 + 0.5 * dd * trace_ki_s2 +
                 GA.cwiseProduct(stat2).sum();
  out.kmm_jittered = std::move(kmm);
  return out;
}

} // namespace detail

/// Exact marginal log-likelihood.
inline ObjectiveEval objective_full(const Matrix &Y, const PointList &X,
                                    const ModelConfig &cfg) {
  const auto n = static_cast<Eigen::Index>(X.size());
  const Matrix pts = stack(X);
  detail::check_data(Y, n, pts.rows());
  ModelConfig c = cfg;
  c.variant = Variant::Full;
  c.validate(n);
  const auto &kp = cfg.kernel;
  const double beta = cfg.beta;
  const auto dd = static_cast<double>(Y.cols());

  const Matrix K = detail::gram_sym(kp, pts);
  Matrix C = K;
  C.diagonal().array() += 1.0 / beta;
  auto cf = detail::factorize(C, 0.0, cfg.retry_jitter * kp.sigma,
                              "K_nn + I/beta");
  const Matrix Ci = cf.inverse();
  const Matrix alpha = Ci * Y; // N x D

  ObjectiveEval ev;
  ev.value = -0.5 * static_cast<double>(n) * dd * detail::kLogTwoPi -
             0.5 * dd * cf.logdet() - 0.5 * Y.cwiseProduct(alpha).sum();

  // dF/dK, symmetric.
  const Matrix G = 0.5 * (alpha * alpha.transpose()) - 0.5 * dd * Ci;

  Matrix grad = Matrix::Zero(pts.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double d = detail::distance(pts.col(i), pts.col(j));
      if (d < 1e-9) {
        continue;
      }
      // K_ij and K_ji both depend on x_i and x_j.
      const Vector e = (-2.0 * G(i, j) * K(i, j) / kp.kappa) *
                       detail::distance_grad(pts.col(i), pts.col(j));
      grad.col(i) += e;
      grad.col(j) -= e;
    }
  }
  ev.grads.latent = std::move(grad);
  ev.grads.log_sigma = G.cwiseProduct(K).sum();
  ev.grads.log_beta = -G.trace() / beta;
  return ev;
}

/// Collapsed sparse bound with fixed inducing positions Z.
inline ObjectiveEval objective_sparse(const Matrix &Y, const PointList &X,
                                      const PointList &Z,
                                      const ModelConfig &cfg) {
  const auto n = static_cast<Eigen::Index>(X.size());
  const Matrix pts = stack(X);
  detail::check_data(Y, n, pts.rows());
  if (Z.empty()) {
    throw ConfigError("objective_sparse: no inducing points");
  }
  ModelConfig c = cfg;
  c.M = static_cast<Eigen::Index>(Z.size());
  c.validate(n);
  const Matrix zs = stack(Z);
  if (zs.rows() != pts.rows()) {
    throw DimensionError("objective_sparse: inducing dimension mismatch");
  }
  const auto &kp = cfg.kernel;

  const Matrix Kmm = detail::gram_sym(kp, zs);
  const Matrix Kmn = detail::gram(kp, zs, pts);
  const Matrix KK = Kmn * Kmn.transpose();
  const double psi0 = static_cast<double>(n) * kp.sigma;
  auto b = detail::collapsed_bound(Y, Kmm, Kmn, KK, psi0, c);

  // K_mn enters directly and through K_mn K_nm.
  const Matrix dF_dKmn = b.dF_dstat1 + 2.0 * b.dF_dstat2 * Kmn;

  ObjectiveEval ev;
  ev.value = b.value;
  ev.grads.latent = Matrix::Zero(pts.rows(), n);
  detail::chain_kernel_grads(kp, pts, zs, dF_dKmn.transpose(),
                             Kmn.transpose(), ev.grads.latent);
  const double dd = static_cast<double>(Y.cols());
  ev.grads.log_sigma = dF_dKmn.cwiseProduct(Kmn).sum() +
                       b.dF_dKmm.cwiseProduct(b.kmm_jittered).sum() -
                       0.5 * cfg.beta * dd * psi0;
  ev.grads.log_beta = cfg.beta * b.dF_dbeta;
  return ev;
}

struct PsiStats {
  Matrix psi1;       ///< M x N
  Matrix psi2;       ///< M x M
  double psi0 = 0.0; ///< N sigma
};

/// Monte-Carlo Psi statistics; samples[i] holds the H draws of point i.
inline PsiStats psi_stats(const std::vector<VariationalState> &states,
                          const PointList &Z,
                          const std::vector<std::vector<ReparamSample>> &samples,
                          const HEKernelParams &kp) {
  if (states.size() != samples.size()) {
    throw DimensionError("psi_stats: one sample list per state required");
  }
  const auto n = static_cast<Eigen::Index>(states.size());
  const Matrix zs = stack(Z);
  PsiStats ps;
  ps.psi1 = Matrix::Zero(zs.cols(), n);
  ps.psi2 = Matrix::Zero(zs.cols(), zs.cols());
  ps.psi0 = static_cast<double>(n) * kp.sigma;
  Vector kv(zs.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto &draws = samples[static_cast<std::size_t>(i)];
    if (draws.empty()) {
      throw ArgumentError("psi_stats: empty sample list");
    }
    const double inv_h = 1.0 / static_cast<double>(draws.size());
    for (const auto &smp : draws) {
      for (Eigen::Index k = 0; k < zs.cols(); ++k) {
        kv[k] = detail::kernel(kp, zs.col(k), smp.x.coords());
      }
      ps.psi1.col(i) += inv_h * kv;
      ps.psi2.noalias() += inv_h * kv * kv.transpose();
    }
  }
  return ps;
}

/// Standard normal draws for the Bayesian bound: column i*H + h is zeta_i^(h).
struct ZetaDraws {
  Eigen::Index H = 1;
  Matrix values; ///< Q x (N*H)
};

/// Monte-Carlo evidence lower bound with the pathwise gradient for fixed
/// draws.
inline ObjectiveEval
objective_bayesian(const Matrix &Y, const std::vector<VariationalState> &states,
                   const PointList &Z, const ZetaDraws &zeta,
                   const ModelConfig &cfg) {
  const auto n = static_cast<Eigen::Index>(states.size());
  if (n < 1) {
    throw DimensionError("objective_bayesian: no latent states");
  }
  const auto q = states.front().mu.dim();
  detail::check_data(Y, n, q + 1);
  ModelConfig c = cfg;
  c.M = static_cast<Eigen::Index>(Z.size());
  c.H = zeta.H;
  c.validate(n);
  if (zeta.values.rows() != q || zeta.values.cols() != n * zeta.H) {
    throw DimensionError("objective_bayesian: zeta draws must be Q x (N*H)");
  }
  const auto &kp = cfg.kernel;
  const Matrix zs = stack(Z);
  const auto m = zs.cols();
  const auto hh = zeta.H;
  const double inv_h = 1.0 / static_cast<double>(hh);

  // Forward pass: draws, kernel vectors, Psi statistics and KL.
  std::vector<detail::ChainOut> chains(static_cast<std::size_t>(n * hh));
  Matrix kvals(m, n * hh);
  Matrix psi1 = Matrix::Zero(m, n);
  Matrix psi2 = Matrix::Zero(m, m);
  double kl = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto &st = states[static_cast<std::size_t>(i)];
    st.validate();
    for (Eigen::Index h = 0; h < hh; ++h) {
      const auto col = i * hh + h;
      auto &ch = chains[static_cast<std::size_t>(col)];
      ch = detail::sample_chain(st.mu.coords(), st.s, zeta.values.col(col));
      for (Eigen::Index k = 0; k < m; ++k) {
        kvals(k, col) = detail::kernel(kp, zs.col(k), ch.x);
      }
      psi1.col(i) += inv_h * kvals.col(col);
      psi2.noalias() += inv_h * kvals.col(col) * kvals.col(col).transpose();
      kl += inv_h * (detail::log_q_cached(st.s, ch.vt) -
                     detail::log_prior_density(ch.x));
    }
  }
  const double psi0 = static_cast<double>(n) * kp.sigma;
  const Matrix Kmm = detail::gram_sym(kp, zs);
  auto b = detail::collapsed_bound(Y, Kmm, psi1, psi2, psi0, c);

  ObjectiveEval ev;
  ev.kl = kl;
  ev.value = b.value - kl;
  ev.grads.latent = Matrix::Zero(q + 1, n);
  ev.grads.log_s = Matrix::Zero(q, n);

  Vector gx(q + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto &st = states[static_cast<std::size_t>(i)];
    const Vector &mu = st.mu.coords();
    for (Eigen::Index h = 0; h < hh; ++h) {
      const auto col = i * hh + h;
      const auto &ch = chains[static_cast<std::size_t>(col)];
      // dF/dx for this draw through Psi_1 column i and Psi_2.
      const Vector w =
          inv_h * (b.dF_dstat1.col(i) + 2.0 * b.dF_dstat2 * kvals.col(col));
      gx.setZero();
      for (Eigen::Index k = 0; k < m; ++k) {
        const double d = detail::distance(ch.x, zs.col(k));
        if (d < 1e-9) {
          continue;
        }
        gx += (-w[k] * kvals(k, col) / kp.kappa) *
              detail::distance_grad(ch.x, zs.col(k));
      }
      // KL term: -(1/H) d(log q - log p); log q is independent of mu.
      gx += inv_h * detail::log_prior_grad(ch.x);
      const auto jac =
          detail::chain_jacobians(mu, st.s, zeta.values.col(col), ch);
      ev.grads.latent.col(i) += jac.dx_dmu.transpose() * gx;
      const Vector ds = jac.dx_ds.transpose() * gx -
                        inv_h * detail::log_q_grad_s(st.s, ch.vt);
      ev.grads.log_s.col(i) += ds.cwiseProduct(st.s);
    }
  }

  const double dd = static_cast<double>(Y.cols());
  ev.grads.log_sigma = b.dF_dstat1.cwiseProduct(psi1).sum() +
                       2.0 * b.dF_dstat2.cwiseProduct(psi2).sum() +
                       b.dF_dKmm.cwiseProduct(b.kmm_jittered).sum() -
                       0.5 * cfg.beta * dd * psi0;
  ev.grads.log_beta = cfg.beta * b.dF_dbeta;
  return ev;
}

/// Expand ZetaDraws into the per-point sample lists used by psi_stats and
/// kl_mc.
inline std::vector<std::vector<ReparamSample>>
draw_samples(const std::vector<VariationalState> &states,
             const ZetaDraws &zeta) {
  std::vector<std::vector<ReparamSample>> out(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (Eigen::Index h = 0; h < zeta.H; ++h) {
      out[i].push_back(wg_sample(
          states[i],
          zeta.values.col(static_cast<Eigen::Index>(i) * zeta.H + h)));
    }
  }
  return out;
}

} // namespace hgplvm
