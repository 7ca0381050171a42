// Acceptance report: one PASS/FAIL line per criterion, with the measured
// numbers. Exit status is 0 only if every criterion passes.
//
//   acceptance [--skip-training] [--extended]
//
// --skip-training  report criteria 1-3 as SKIP (they train full models)
// --extended       also run the optional depth-6 sparse check

#include <hgplvm/hgplvm.hpp>

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>

using namespace hgplvm;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string &detail) {
  if (!pass) {
    ++failures;
  }
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
}

void skip(int id, const std::string &why) {
  std::printf("criterion %d: SKIP  %s\n", id, why.c_str());
  std::fflush(stdout);
}

void info(const std::string &line) {
  std::printf("  %s\n", line.c_str());
  std::fflush(stdout);
}

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// ---------------------------------------------------------------- training

struct SbtRun {
  double dc = 0.0;
  double dcor = 0.0;
  double max_radius = 0.0;
  double seconds = 0.0;
  double final_objective = 0.0;
};

ExperimentSpec sbt_spec(const std::string &config, std::uint64_t seed,
                        const std::vector<std::string> &overrides) {
  auto cfg = RunConfig::load(std::string(HGPLVM_SOURCE_DIR) + "/configs/" +
                             config);
  for (const auto &o : overrides) {
    cfg.set(o);
  }
  cfg.set("run.seed", std::to_string(seed));
  return resolve(cfg);
}

SbtRun train_sbt(const ExperimentSpec &e) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset ds = make_dataset(e);
  const auto res = train(ds.Y, e.model, e.train, e.seed);
  SbtRun r;
  r.seconds = seconds_since(t0);
  r.final_objective = res.final_objective;
  const auto pts = res.state.positions();
  const auto lat = pairwise_distances(pts);
  const auto codes = pairwise_distances(ds.sample_codes(), Metric::Hamming);
  r.dc = distance_correlation(lat, codes);
  r.dcor = szekely_distance_correlation(lat, codes, pts.size());
  for (const auto &p : pts) {
    r.max_radius = std::max(r.max_radius, to_poincare(p).coords.norm());
  }
  return r;
}

void describe(const std::string &tag, const SbtRun &r) {
  std::ostringstream s;
  s << tag << ": pearson " << fmt("%.4f", r.dc) << ", szekely "
    << fmt("%.4f", r.dcor) << ", max radius " << fmt("%.4f", r.max_radius)
    << ", objective " << fmt("%.2f", r.final_objective) << ", "
    << fmt("%.1f", r.seconds) << " s";
  info(s.str());
}

std::vector<SbtRun> seed_sweep(const std::string &config, int depth,
                               const std::vector<std::string> &overrides) {
  std::vector<SbtRun> runs;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    runs.push_back(train_sbt(sbt_spec(config, seed, overrides)));
    describe("d=" + std::to_string(depth) + " seed " + std::to_string(seed),
             runs.back());
  }
  return runs;
}

void depth_criterion(int id, const std::vector<SbtRun> &runs, double target,
                     double budget) {
  double mean = 0.0;
  double mean_dcor = 0.0;
  double slowest = 0.0;
  for (const auto &r : runs) {
    mean += r.dc / static_cast<double>(runs.size());
    mean_dcor += r.dcor / static_cast<double>(runs.size());
    slowest = std::max(slowest, r.seconds);
  }
  std::ostringstream s;
  s << "mean distance correlation " << fmt("%.4f", mean) << " (target >= "
    << fmt("%.2f", target) << "), slowest run " << fmt("%.1f", slowest)
    << " s (budget " << fmt("%.0f", budget) << " s); szekely mean "
    << fmt("%.4f", mean_dcor);
  report(id, mean >= target && slowest <= budget, s.str());
}

// --------------------------------------------------------------- helpers

std::mt19937_64 &rng_for(std::uint64_t seed) {
  static std::mt19937_64 rng;
  rng.seed(seed);
  return rng;
}

LorentzPoint random_point(std::mt19937_64 &rng, Eigen::Index q, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector s(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    s[j] = normal(rng);
  }
  return LorentzPoint::lift(s);
}

PointList random_points(std::mt19937_64 &rng, Eigen::Index n, Eigen::Index q,
                        double scale) {
  PointList out;
  for (Eigen::Index i = 0; i < n; ++i) {
    out.push_back(random_point(rng, q, scale));
  }
  return out;
}

Matrix random_matrix(std::mt19937_64 &rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) {
      m(i, j) = normal(rng);
    }
  }
  return m;
}

Vector random_tangent(std::mt19937_64 &rng, const LorentzPoint &x,
                      double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector g(x.coords().size());
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    g[j] = normal(rng);
  }
  return detail::proj_tangent(x.coords(), g);
}

double central(const std::function<double(double)> &f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double rel_error(const Vector &analytic, const Vector &fd) {
  const double scale = std::max(analytic.norm(), fd.norm());
  return scale > 0.0 ? (analytic - fd).norm() / scale : 0.0;
}

// -------------------------------------------------------- criterion 4

void criterion_sparse_equivalence() {
  auto &rng = rng_for(404);
  std::uniform_int_distribution<int> size(5, 15);
  double worst_eq = 0.0;
  for (int t = 0; t < 10; ++t) {
    const int n = size(rng);
    const auto X = random_points(rng, n, 2, 1.0);
    const Matrix Y = random_matrix(rng, n, 3);
    ModelConfig cfg;
    cfg.variant = Variant::Sparse;
    cfg.M = n;
    cfg.kernel = {1.0, 2.0};
    cfg.beta = 5.0;
    const double full = objective_full(Y, X, cfg).value;
    const double sparse = objective_sparse(Y, X, X, cfg).value;
    worst_eq = std::max(worst_eq, std::abs(full - sparse) / std::abs(full));
  }
  int violations = 0;
  double worst_gap = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < 50; ++t) {
    const int n = size(rng);
    const auto X = random_points(rng, n, 2, 1.0);
    const Matrix Y = random_matrix(rng, n, 3);
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    const int m = std::uniform_int_distribution<int>(1, n - 1)(rng);
    PointList Z;
    for (int k = 0; k < m; ++k) {
      Z.push_back(X[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])]);
    }
    ModelConfig cfg;
    cfg.variant = Variant::Sparse;
    cfg.M = m;
    cfg.kernel = {1.0, 2.0};
    cfg.beta = 5.0;
    const double gap =
        objective_sparse(Y, X, Z, cfg).value - objective_full(Y, X, cfg).value;
    worst_gap = std::max(worst_gap, gap);
    if (gap > 0.0) {
      ++violations;
    }
  }
  std::ostringstream s;
  s << "Z=X worst |F_sparse-F_full|/|F| " << fmt("%.2e", worst_eq)
    << " (<= 1e-6, default jitter); sparse-full max gap "
    << fmt("%.3e", worst_gap) << ", " << violations << "/50 above full";
  report(4, worst_eq <= 1e-6 && violations == 0, s.str());
}

// -------------------------------------------------------- criterion 5

void criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  auto &rng = rng_for(505);
  const double h = 1e-6;
  double worst_full = 0.0;
  double worst_sparse = 0.0;
  double worst_bayes = 0.0;

  auto latent_fd = [&](const PointList &X,
                       const std::function<double(const PointList &)> &f) {
    const auto q = X.front().dim();
    Vector out(static_cast<Eigen::Index>(X.size()) * q);
    for (std::size_t i = 0; i < X.size(); ++i) {
      for (Eigen::Index j = 0; j < q; ++j) {
        out[static_cast<Eigen::Index>(i) * q + j] = central(
            [&](double v) {
              auto Xp = X;
              Vector s = X[i].spatial();
              s[j] = v;
              Xp[i] = LorentzPoint::lift(s);
              return f(Xp);
            },
            X[i].spatial()[j], h);
      }
    }
    return out;
  };
  auto latent_analytic = [](const PointList &X, const Matrix &amb) {
    const auto q = X.front().dim();
    Vector out(static_cast<Eigen::Index>(X.size()) * q);
    for (std::size_t i = 0; i < X.size(); ++i) {
      out.segment(static_cast<Eigen::Index>(i) * q, q) = detail::spatial_gradient(
          X[i].coords(), amb.col(static_cast<Eigen::Index>(i)));
    }
    return out;
  };
  auto hyper_fd = [&](const ModelConfig &cfg,
                      const std::function<double(const ModelConfig &)> &f) {
    Vector out(2);
    out[0] = central(
        [&](double ls) {
          auto c = cfg;
          c.kernel.sigma = std::exp(ls);
          return f(c);
        },
        std::log(cfg.kernel.sigma), h);
    out[1] = central(
        [&](double lb) {
          auto c = cfg;
          c.beta = std::exp(lb);
          return f(c);
        },
        std::log(cfg.beta), h);
    return out;
  };
  std::uniform_real_distribution<double> unif(0.5, 2.0);

  for (int t = 0; t < 20; ++t) {
    const int n = 6 + t % 5;
    const auto X = random_points(rng, n, 2, 0.8);
    const Matrix Y = random_matrix(rng, n, 3);
    ModelConfig cfg;
    cfg.kernel = {unif(rng), 1.0 + unif(rng)};
    cfg.beta = 2.0 + 5.0 * unif(rng);

    const auto ev = objective_full(Y, X, cfg);
    auto full = [&](const PointList &Xp) { return objective_full(Y, Xp, cfg).value; };
    worst_full = std::max(worst_full, rel_error(latent_analytic(X, ev.grads.latent),
                                                latent_fd(X, full)));
    worst_full = std::max(
        worst_full,
        rel_error(Vector{{ev.grads.log_sigma, ev.grads.log_beta}},
                  hyper_fd(cfg, [&](const ModelConfig &c) {
                    return objective_full(Y, X, c).value;
                  })));

    ModelConfig sc = cfg;
    sc.variant = Variant::Sparse;
    sc.M = 4;
    const auto Z = random_points(rng, 4, 2, 0.8);
    const auto es = objective_sparse(Y, X, Z, sc);
    worst_sparse = std::max(
        worst_sparse,
        rel_error(latent_analytic(X, es.grads.latent),
                  latent_fd(X, [&](const PointList &Xp) {
                    return objective_sparse(Y, Xp, Z, sc).value;
                  })));
    worst_sparse = std::max(
        worst_sparse,
        rel_error(Vector{{es.grads.log_sigma, es.grads.log_beta}},
                  hyper_fd(sc, [&](const ModelConfig &c) {
                    return objective_sparse(Y, X, Z, c).value;
                  })));

    ModelConfig bc = sc;
    bc.variant = Variant::Bayesian;
    bc.H = 2;
    std::vector<VariationalState> states;
    std::uniform_real_distribution<double> var(0.05, 0.4);
    for (const auto &x : X) {
      states.push_back({x, Vector{{var(rng), var(rng)}}});
    }
    const ZetaDraws zeta{2, random_matrix(rng, 2, n * 2)};
    const auto eb = objective_bayesian(Y, states, Z, zeta, bc);
    PointList mus;
    for (const auto &s : states) {
      mus.push_back(s.mu);
    }
    worst_bayes = std::max(
        worst_bayes,
        rel_error(latent_analytic(mus, eb.grads.latent),
                  latent_fd(mus, [&](const PointList &Mp) {
                    auto st = states;
                    for (std::size_t i = 0; i < st.size(); ++i) {
                      st[i].mu = Mp[i];
                    }
                    return objective_bayesian(Y, st, Z, zeta, bc).value;
                  })));
    Vector ls_fd(2 * n);
    Vector ls_an(2 * n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 2; ++j) {
        ls_an[2 * i + j] = eb.grads.log_s(j, i);
        ls_fd[2 * i + j] = central(
            [&](double v) {
              auto st = states;
              st[static_cast<std::size_t>(i)].s[j] = std::exp(v);
              return objective_bayesian(Y, st, Z, zeta, bc).value;
            },
            std::log(states[static_cast<std::size_t>(i)].s[j]), h);
      }
    }
    worst_bayes = std::max(worst_bayes, rel_error(ls_an, ls_fd));
    worst_bayes = std::max(
        worst_bayes,
        rel_error(Vector{{eb.grads.log_sigma, eb.grads.log_beta}},
                  hyper_fd(bc, [&](const ModelConfig &c) {
                    return objective_bayesian(Y, states, Z, zeta, c).value;
                  })));
  }
  const double secs = seconds_since(t0);
  std::ostringstream s;
  s << "worst relative error: full " << fmt("%.2e", worst_full) << ", sparse "
    << fmt("%.2e", worst_sparse) << " (<= 1e-4), bayesian "
    << fmt("%.2e", worst_bayes) << " (<= 1e-3); " << fmt("%.1f", secs)
    << " s (<= 60 s)";
  report(5, worst_full <= 1e-4 && worst_sparse <= 1e-4 && worst_bayes <= 1e-3 &&
                secs <= 60.0,
         s.str());
}

// -------------------------------------------------------- criterion 6

void criterion_geometry() {
  auto &rng = rng_for(606);
  // 10^4 exp-map / transport compositions.
  auto x = LorentzPoint::origin(2);
  TangentVector v{x, random_tangent(rng, x, 0.5)};
  double worst_constraint = 0.0;
  double worst_tangent = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto next = exp_map(x, TangentVector{x, random_tangent(rng, x, 0.5)});
    v = parallel_transport(x, next, v);
    x = next;
    if (x.time() > 50.0) {
      x = exp_map(LorentzPoint::origin(2),
                  tangent_at_origin(0.5 * to_poincare(x).coords));
      v = TangentVector{x, random_tangent(rng, x, 0.5)};
    }
    worst_constraint =
        std::max(worst_constraint, std::abs(lorentz_inner(x, x) + 1.0));
    worst_tangent = std::max(
        worst_tangent, std::abs(x.coords().dot(v.vec) - 2.0 * x.time() * v.vec[0]) /
                           std::max(1.0, v.vec.norm() * x.coords().norm()));
  }
  // Small pairs near the origin.
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  auto in_disk = [&](double radius) {
    Vector a(2);
    do {
      a << unif(rng), unif(rng);
    } while (a.norm() > 1.0);
    return Vector(radius * a);
  };
  int cubic_violations = 0;
  int radius_violations = 0;
  double worst_ratio = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vector a = in_disk(1e-2);
    const Vector b = in_disk(1e-2);
    const double de = (a - b).norm();
    const double dl = distance(lift(a), lift(b));
    const double err = std::abs(dl - de);
    if (err > 0.1 * de * de * de + 1e-12) {
      ++cubic_violations;
    }
    const double r = std::max(a.norm(), b.norm());
    if (err > de * r * r + 1e-15) {
      ++radius_violations;
    }
    if (de > 0.0) {
      worst_ratio = std::max(worst_ratio, err / (de * de * de));
    }
  }
  // Poincare range.
  double max_radius = 0.0;
  for (int i = 0; i < 1000; ++i) {
    max_radius = std::max(max_radius,
                          to_poincare(random_point(rng, 3, 5.0)).coords.norm());
  }
  info("compositions: worst |<x,x>+1| " + fmt("%.2e", worst_constraint) +
       ", worst transported tangency residual " + fmt("%.2e", worst_tangent));
  info("small pairs: " + std::to_string(cubic_violations) +
       "/1000 exceed 0.1*d_E^3 + 1e-12 (worst |d_L-d_E|/d_E^3 = " +
       fmt("%.3g", worst_ratio) + "); " + std::to_string(radius_violations) +
       "/1000 exceed d_E*r^2 with r the larger norm");
  info("poincare: max radius " + fmt("%.17g", max_radius) +
       " over 1000 points");
  std::ostringstream s;
  s << "constraint " << fmt("%.2e", worst_constraint) << " (<= 1e-9); cubic "
    << "bound violated on " << cubic_violations << "/1000 pairs; poincare "
    << "radius < 1: " << (max_radius < 1.0 ? "yes" : "no");
  report(6, worst_constraint <= 1e-9 && cubic_violations == 0 &&
                max_radius < 1.0,
         s.str());
}

// -------------------------------------------------------- criterion 7

void criterion_kernel_pd() {
  double worst = std::numeric_limits<double>::infinity();
  for (double kappa : {10.0, 100.0}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto &rng = rng_for(700 + seed);
      const auto pts = random_points(rng, 200, 2, 1.5);
      const HEKernelParams p{1.3, kappa};
      const Matrix K = gram(p, pts, pts).values;
      Eigen::SelfAdjointEigenSolver<Matrix> es(K, Eigen::EigenvaluesOnly);
      worst = std::min(worst, es.eigenvalues().minCoeff() / p.sigma);
    }
  }
  report(7, worst >= -1e-8,
         "min eigenvalue / sigma " + fmt("%.3e", worst) + " (>= -1e-8)");
}

// -------------------------------------------------------- criterion 8

void criterion_wrapped_gaussian() {
  auto draws = [](const VariationalState &st, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<ReparamSample> out;
    Vector z(st.s.size());
    for (int i = 0; i < h; ++i) {
      for (Eigen::Index j = 0; j < z.size(); ++j) {
        z[j] = normal(rng);
      }
      out.push_back(wg_sample(st, z));
    }
    return out;
  };
  const VariationalState prior{LorentzPoint::origin(2), Vector::Ones(2)};
  const auto e0 = kl_mc_estimate(prior, draws(prior, 10000, 1));
  // Every term vanishes in exact arithmetic, so the standard error can sit at
  // the rounding floor.
  const bool zero_ok =
      std::abs(e0.mean) <= std::max(3.0 * e0.std_error, 1e-12);

  const Vector s{{1e-4, 2e-4}};
  const VariationalState tiny{LorentzPoint::origin(2), s};
  const auto e1 = kl_mc_estimate(tiny, draws(tiny, 10000, 2));
  const double closed = 0.5 * (s.sum() - 2.0 - s.array().log().sum());
  const bool closed_ok = std::abs(e1.mean - closed) <= 3.0 * e1.std_error;

  std::mt19937_64 r1(3);
  const VariationalState st{random_point(r1, 2, 1.0), Vector{{0.3, 0.05}}};
  const auto a = draws(st, 100, 4);
  const auto b = draws(st, 100, 4);
  bool exact = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    exact = exact && a[i].x.coords() == b[i].x.coords();
  }
  std::ostringstream o;
  o << "KL(q=p) " << fmt("%.3e", e0.mean) << " (SE " << fmt("%.1e", e0.std_error)
    << "); tiny-variance KL " << fmt("%.6f", e1.mean) << " vs closed form "
    << fmt("%.6f", closed) << " (3 SE = " << fmt("%.2e", 3.0 * e1.std_error)
    << "); sampler bit-exact: " << (exact ? "yes" : "no");
  report(8, zero_ok && closed_ok && exact, o.str());
}

// -------------------------------------------------------- criterion 9

int tree_distance(int a, int b) {
  int d = 0;
  while (a != b) {
    if (a > b) {
      a = (a - 1) / 2;
    } else {
      b = (b - 1) / 2;
    }
    ++d;
  }
  return d;
}

void criterion_datasets() {
  bool shapes = true;
  const int expected[3][2] = {{300, 15}, {620, 31}, {1260, 63}};
  for (int d = 4; d <= 6; ++d) {
    const auto ds = sbt_dataset({d, 20, 0.1, 0});
    shapes = shapes && ds.Y.rows() == expected[d - 4][0] &&
             ds.Y.cols() == expected[d - 4][1];
  }
  int mismatches = 0;
  for (int d = 2; d <= 5; ++d) {
    const auto codes = sbt_codes(d);
    for (int i = 0; i < codes.rows(); ++i) {
      for (int j = 0; j < codes.rows(); ++j) {
        const int ham = static_cast<int>(
            (codes.row(i).array() != codes.row(j).array()).count());
        mismatches += ham != tree_distance(i, j);
      }
    }
  }
  const auto sp = spiral_dataset({});
  const bool spiral = sp.Y.rows() == 800 && sp.Y.cols() == 20;
  std::ostringstream s;
  s << "SBT shapes 300x15/620x31/1260x63: " << (shapes ? "yes" : "no")
    << "; hamming vs tree distance mismatches (d<=5): " << mismatches
    << "; spiral " << sp.Y.rows() << "x" << sp.Y.cols();
  report(9, shapes && mismatches == 0 && spiral, s.str());
}

// -------------------------------------------------------- criterion 10

int brute_rank(const Matrix &d, int i, int j) {
  int r = 1;
  for (int l = 0; l < d.rows(); ++l) {
    if (l != i && l != j &&
        (d(i, l) < d(i, j) || (d(i, l) == d(i, j) && l < j))) {
      ++r;
    }
  }
  return r;
}

double brute_neighbourhood(const Matrix &ranked, const Matrix &neigh, int k) {
  const int n = static_cast<int>(ranked.rows());
  double pen = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j != i && brute_rank(neigh, i, j) <= k) {
        pen += std::max(0, brute_rank(ranked, i, j) - k);
      }
    }
  }
  return 1.0 - 2.0 / (n * k * (2.0 * n - 3.0 * k - 1.0)) * pen;
}

// Spearman by counting: rank = 1 + #smaller + (#equal - 1)/2.
double brute_spearman(const DistanceVector &a, const DistanceVector &b) {
  auto ranks = [](const DistanceVector &v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0.0, equal = 0.0;
      for (double w : v) {
        less += w < v[i];
        equal += w == v[i];
      }
      r[i] = 1.0 + less + (equal - 1.0) / 2.0;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

void criterion_metrics() {
  auto &rng = rng_for(1010);
  double identity_gap = 0.0;
  double oracle_gap = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int n = 5 + t % 2; // 5 or 6 points, k = 1 or 2
    const int k = n == 6 ? 2 : 1;
    const Matrix Y = random_matrix(rng, n, 3);
    const auto obs = pairwise_distances(Y, Metric::Euclidean);
    const Matrix dobs = square_distances(obs, static_cast<std::size_t>(n));
    identity_gap = std::max(
        {identity_gap,
         std::abs(1.0 - trustworthiness_from_distances(dobs, dobs, k)),
         std::abs(1.0 - continuity_from_distances(dobs, dobs, k)),
         std::abs(1.0 - shepard_goodness(obs, obs))});

    const auto pts = random_points(rng, n, 2, 1.0);
    const auto lat = pairwise_distances(pts);
    const Matrix dlat = square_distances(lat, static_cast<std::size_t>(n));
    oracle_gap = std::max(
        {oracle_gap,
         std::abs(trustworthiness_from_distances(dobs, dlat, k) -
                  brute_neighbourhood(dobs, dlat, k)),
         std::abs(continuity_from_distances(dobs, dlat, k) -
                  brute_neighbourhood(dlat, dobs, k)),
         std::abs(shepard_goodness(obs, lat) - brute_spearman(obs, lat))});
  }
  std::ostringstream s;
  s << "identity embeddings max |1-score| " << fmt("%.1e", identity_gap)
    << "; brute-force oracle max gap " << fmt("%.1e", oracle_gap)
    << " (<= 1e-12)";
  report(10, identity_gap <= 1e-12 && oracle_gap <= 1e-12, s.str());
}

// -------------------------------------------------------- criterion 11

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void criterion_cli_determinism() {
  const auto dir = fs::temp_directory_path() / "hgplvm_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto cfg =
      std::string(HGPLVM_SOURCE_DIR) + "/configs/sbt_d4.cfg";
  bool ok = true;
  for (const char *name : {"a", "b"}) {
    const std::string cmd = std::string(HGPLVM_CLI_PATH) + " run -c " + cfg +
                            " --seed 11 --set train.max_iter=100 -o " +
                            (dir / name).string() + " > /dev/null";
    ok = ok && std::system(cmd.c_str()) == 0;
  }
  std::string detail;
  for (const char *f : {"embedding.csv", "trace.csv", "plot.svg"}) {
    const auto a = slurp(dir / "a" / f);
    const bool same = !a.empty() && a == slurp(dir / "b" / f);
    ok = ok && same;
    detail += std::string(f) + (same ? " identical; " : " DIFFERS; ");
  }
  report(11, ok, detail + "two runs, seed 11, d=4, 100 epochs");
}

} // namespace

int main(int argc, char **argv) {
  bool train_models = true;
  bool extended = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--skip-training") {
      train_models = false;
    } else if (a == "--extended") {
      extended = true;
    } else {
      std::fprintf(stderr, "usage: acceptance [--skip-training] [--extended]\n");
      return 2;
    }
  }

  if (train_models) {
    info("training settings: configs/sbt_d4.cfg and configs/sbt_d5.cfg");
    const auto d4 = seed_sweep("sbt_d4.cfg", 4, {});
    depth_criterion(1, d4, 0.78, 600.0);
    const auto d5 = seed_sweep("sbt_d5.cfg", 5, {});
    depth_criterion(2, d5, 0.86, 2700.0);
    if (extended) {
      const auto r = train_sbt(sbt_spec("sbt_d6_sparse.cfg", 0, {}));
      describe("d=6 sparse M=50 seed 0 (optional, target >= 0.80)", r);
    }
    // Length-scale trend on seed 0; kappa = 100 is the criterion-1 run.
    const auto k10 = train_sbt(sbt_spec("sbt_d4.cfg", 0, {"model.kappa=10"}));
    describe("kappa 10", k10);
    const auto k30 = train_sbt(sbt_spec("sbt_d4.cfg", 0, {"model.kappa=30"}));
    describe("kappa 30", k30);
    const auto &k100 = d4.front();
    describe("kappa 100", k100);
    std::ostringstream s;
    s << "max radius " << fmt("%.4f", k10.max_radius) << " < "
      << fmt("%.4f", k30.max_radius) << " < " << fmt("%.4f", k100.max_radius)
      << "; distance correlation kappa 100 " << fmt("%.4f", k100.dc)
      << " > kappa 10 " << fmt("%.4f", k10.dc);
    report(3, k10.max_radius < k30.max_radius &&
                  k30.max_radius < k100.max_radius && k100.dc > k10.dc,
           s.str());
  } else {
    for (int id = 1; id <= 3; ++id) {
      skip(id, "training disabled (--skip-training)");
    }
  }
  criterion_sparse_equivalence();
  criterion_gradients();
  criterion_geometry();
  criterion_kernel_pd();
  criterion_wrapped_gaussian();
  criterion_datasets();
  criterion_metrics();
  criterion_cli_determinism();
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
