#pragma once

// Riemannian gradient ascent for the hyperboloid GP-LVM variants, with
// inducing-point resampling from the current latents and the Bayesian
// variance freeze.

#include <hgplvm/objectives.hpp>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

namespace hgplvm {

using Rng = std::mt19937_64;

struct TrainConfig {
  int max_iter = 500;
  double lr_latent = 0.05;
  double lr_hyper = 0.005;
  int warmup_epochs = 10;
  int resample_every = 10;
  int variance_freeze_epochs = 100;
  double init_scale = 1e-3;
  double init_variance = 1e-5;
  bool learn_sigma = true;
  bool learn_beta = true;
  /// Divide every gradient by N*D, i.e. ascend the per-entry objective.
  bool normalize_gradients = true;
  /// Subtract the column means of Y before training.
  bool center_data = true;
  /// Bold-driver control for the deterministic objectives: an epoch whose
  /// objective fell below the previous one is undone and the step factor
  /// shrinks; otherwise the factor grows up to max_step_factor.
  bool adaptive_step = true;
  double step_growth = 1.1;
  double step_shrink = 0.5;
  double max_step_factor = 1.0;

  void validate() const {
    if (max_iter < 0) {
      throw ConfigError("train: max_iter must be non-negative");
    }
    if (!(lr_latent > 0.0) || !(lr_hyper >= 0.0)) {
      throw ConfigError("train: learning rates must be positive");
    }
    if (resample_every < 1) {
      throw ConfigError("train: resample_every must be at least 1");
    }
    if (warmup_epochs < 0 || variance_freeze_epochs < 0) {
      throw ConfigError("train: epoch counts must be non-negative");
    }
    if (!(step_growth >= 1.0) || !(step_shrink > 0.0 && step_shrink < 1.0) ||
        !(max_step_factor > 0.0)) {
      throw ConfigError("train: invalid step control factors");
    }
    if (!(init_scale > 0.0) || !(init_variance > 0.0)) {
      throw ConfigError("train: init scales must be positive");
    }
  }
};

struct TrainState {
  PointList latent;                     ///< Full / Sparse
  std::vector<VariationalState> states; ///< Bayesian
  PointList Z;
  double log_sigma = 0.0;
  double log_beta = 0.0;
  int epoch = 0;
  std::uint64_t rng_seed = 0;
  int rejected_steps = 0;

  /// Latent positions, or variational means for the Bayesian model.
  PointList positions() const {
    if (!states.empty()) {
      PointList out;
      out.reserve(states.size());
      for (const auto &s : states) {
        out.push_back(s.mu);
      }
      return out;
    }
    return latent;
  }
};

struct TraceRecord {
  int epoch = 0;
  double objective = 0.0;
  double log_sigma = 0.0;
  double log_beta = 0.0;
};

struct TrainResult {
  TrainState state;
  std::vector<TraceRecord> trace;
  double final_objective = 0.0;
};

class TrainingAborted : public Error {
public:
  using Error::Error;
};

struct StepOutcome {
  LorentzPoint point;
  bool rejected = false;
};

/// One ascent step: flip the time component of the ambient gradient
/// (g_l^{-1}), project onto T_x, and follow the geodesic for alpha.
inline StepOutcome riemannian_step(const LorentzPoint &x, VectorRef grad,
                                   double alpha) {
  if (grad.size() != x.coords().size()) {
    throw DimensionError("riemannian_step: gradient dimension mismatch");
  }
  if (!grad.allFinite()) {
    return {x, true};
  }
  Vector g = grad;
  g[0] = -g[0];
  const Vector tg = detail::proj_tangent(x.coords(), g);
  if (!tg.allFinite()) {
    return {x, true};
  }
  Vector next = detail::exp_map(x.coords(), alpha * tg);
  if (!next.allFinite()) {
    return {x, true};
  }
  return {LorentzPoint::from_coords(std::move(next)), false};
}

/// Spatial coordinates drawn from U(-scale, scale) and lifted.
inline PointList init_latent(Eigen::Index n, Eigen::Index q, Rng &rng,
                             double scale = 1e-3) {
  if (n < 1) {
    throw ArgumentError("init_latent: N must be at least 1");
  }
  std::uniform_real_distribution<double> unif(-scale, scale);
  PointList out;
  out.reserve(static_cast<std::size_t>(n));
  Vector s(q);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < q; ++j) {
      s[j] = unif(rng);
    }
    out.push_back(LorentzPoint::lift(s));
  }
  return out;
}

inline PointList init_latent(Eigen::Index n, Eigen::Index q,
                             std::uint64_t seed, double scale = 1e-3) {
  Rng rng(seed);
  return init_latent(n, q, rng, scale);
}

/// M distinct indices chosen by a seeded shuffle; Z copies those positions.
inline PointList resample_inducing(const PointList &positions, Eigen::Index m,
                                   Rng &rng) {
  const auto n = static_cast<Eigen::Index>(positions.size());
  if (m > n || m < 1) {
    throw ConfigError("resample_inducing: need 1 <= M <= N (M=" +
                      std::to_string(m) + ", N=" + std::to_string(n) + ")");
  }
  std::vector<std::size_t> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates; std::shuffle is not specified bit-for-bit.
  for (std::size_t i = 0; i < static_cast<std::size_t>(m); ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  PointList z;
  z.reserve(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < static_cast<std::size_t>(m); ++i) {
    z.push_back(positions[idx[i]]);
  }
  return z;
}

namespace detail {

inline ZetaDraws draw_zeta(Eigen::Index q, Eigen::Index n, Eigen::Index h,
                           Rng &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ZetaDraws z{h, Matrix(q, n * h)};
  for (Eigen::Index c = 0; c < z.values.cols(); ++c) {
    for (Eigen::Index r = 0; r < q; ++r) {
      z.values(r, c) = normal(rng);
    }
  }
  return z;
}

} // namespace detail

/// Evaluate the configured objective at the current state.
inline ObjectiveEval evaluate(const Matrix &Y, const TrainState &st,
                              const ModelConfig &base,
                              const ZetaDraws *zeta = nullptr) {
  ModelConfig cfg = base;
  cfg.kernel.sigma = std::exp(st.log_sigma);
  cfg.beta = std::exp(st.log_beta);
  switch (cfg.variant) {
  case Variant::Full:
    return objective_full(Y, st.latent, cfg);
  case Variant::Sparse:
    return objective_sparse(Y, st.latent, st.Z, cfg);
  case Variant::Bayesian:
    if (zeta == nullptr) {
      throw ArgumentError("evaluate: Bayesian objective needs zeta draws");
    }
    return objective_bayesian(Y, st.states, st.Z, *zeta, cfg);
  }
  throw ArgumentError("evaluate: unknown variant");
}

/// Full training loop. Deterministic in (Y, configs, seed).
inline TrainResult
train(const Matrix &Y, const ModelConfig &model, const TrainConfig &tc,
      std::uint64_t seed,
      const std::function<void(const TraceRecord &, const TrainState &)>
          &on_epoch = {}) {
  tc.validate();
  const auto n = Y.rows();
  model.validate(n);
  Rng rng(seed);
  const Matrix Yc = tc.center_data
                        ? Matrix(Y.rowwise() - Y.colwise().mean())
                        : Y;
  const double gscale =
      tc.normalize_gradients
          ? 1.0 / (static_cast<double>(n) * static_cast<double>(Y.cols()))
          : 1.0;

  TrainResult res;
  TrainState &st = res.state;
  st.rng_seed = seed;
  st.log_sigma = std::log(model.kernel.sigma);
  st.log_beta = std::log(model.beta);

  const PointList init = init_latent(n, model.Q, rng, tc.init_scale);
  if (model.variant == Variant::Bayesian) {
    // Small positive variances with a relative spread of 1e-5.
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    st.states.reserve(init.size());
    for (const auto &p : init) {
      Vector s(model.Q);
      for (Eigen::Index j = 0; j < model.Q; ++j) {
        s[j] = tc.init_variance * (1.0 + 1e-5 * unif(rng));
      }
      st.states.push_back({p, std::move(s)});
    }
  } else {
    st.latent = init;
  }

  const bool uses_inducing = model.variant != Variant::Full;
  const bool adaptive = tc.adaptive_step && model.variant != Variant::Bayesian;
  double factor = tc.max_step_factor;
  ObjectiveEval ev;
  std::optional<std::pair<TrainState, ObjectiveEval>> prev;
  for (int epoch = 0; epoch < tc.max_iter; ++epoch) {
    st.epoch = epoch;
    const bool resampled = uses_inducing && epoch % tc.resample_every == 0;
    if (resampled) {
      st.Z = resample_inducing(st.positions(), model.M, rng);
    }
    ZetaDraws zeta;
    if (model.variant == Variant::Bayesian) {
      zeta = detail::draw_zeta(model.Q, n, model.H, rng);
    }
    ev = evaluate(Yc, st, model, &zeta);
    if (adaptive && prev && !resampled && !(ev.value >= prev->second.value)) {
      const int rejected = st.rejected_steps;
      st = prev->first;
      st.epoch = epoch;
      st.rejected_steps = rejected;
      ev = prev->second;
      factor *= tc.step_shrink;
    } else if (prev) {
      factor = std::min(tc.max_step_factor, factor * tc.step_growth);
    }
    if (!std::isfinite(ev.value)) {
      throw TrainingAborted("objective became non-finite at epoch " +
                            std::to_string(epoch));
    }
    if (adaptive) {
      prev.emplace(st, ev);
    }
    TraceRecord rec{epoch, ev.value, st.log_sigma, st.log_beta};
    res.trace.push_back(rec);
    if (on_epoch) {
      on_epoch(rec, st);
    }

    const double ramp =
        tc.warmup_epochs > 0
            ? std::min(1.0, static_cast<double>(epoch + 1) / tc.warmup_epochs)
            : 1.0;
    const double lr = tc.lr_latent * ramp * gscale * factor;
    const double lr_h = tc.lr_hyper * ramp * gscale * factor;

    for (Eigen::Index i = 0; i < n; ++i) {
      LorentzPoint &x = model.variant == Variant::Bayesian
                            ? st.states[static_cast<std::size_t>(i)].mu
                            : st.latent[static_cast<std::size_t>(i)];
      auto step = riemannian_step(x, ev.grads.latent.col(i), lr);
      if (step.rejected) {
        ++st.rejected_steps;
      } else {
        x = std::move(step.point);
      }
    }
    if (model.variant == Variant::Bayesian &&
        epoch >= tc.variance_freeze_epochs) {
      for (Eigen::Index i = 0; i < n; ++i) {
        auto &s = st.states[static_cast<std::size_t>(i)].s;
        const Vector g = ev.grads.log_s.col(i);
        if (g.allFinite()) {
          s = (s.array().log() + lr * g.array()).exp().matrix();
        } else {
          ++st.rejected_steps;
        }
      }
    }
    if (tc.learn_sigma && std::isfinite(ev.grads.log_sigma)) {
      st.log_sigma += lr_h * ev.grads.log_sigma;
    }
    if (tc.learn_beta && std::isfinite(ev.grads.log_beta)) {
      st.log_beta += lr_h * ev.grads.log_beta;
    }
  }
  st.epoch = tc.max_iter;

  // Objective at the final parameters (fresh draws for the Bayesian bound).
  if (uses_inducing && tc.max_iter % tc.resample_every == 0) {
    st.Z = resample_inducing(st.positions(), model.M, rng);
  }
  ZetaDraws zeta;
  if (model.variant == Variant::Bayesian) {
    zeta = detail::draw_zeta(model.Q, n, model.H, rng);
  }
  res.final_objective = evaluate(Yc, st, model, &zeta).value;
  if (!std::isfinite(res.final_objective)) {
    throw TrainingAborted("final objective is non-finite");
  }
  return res;
}

} // namespace hgplvm
