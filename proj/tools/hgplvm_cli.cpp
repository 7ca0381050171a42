// hgplvm: run / render / metrics / gen-data.
//
// Exit codes: 0 ok, 1 training or I/O failure, 2 usage or config error,
// 3 output directory locked.

#include <hgplvm/hgplvm.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>

#include <fcntl.h>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace hgplvm;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitLocked = 3;

class LockError : public Error {
public:
  using Error::Error;
};

/// Exclusive lock file in the output directory, removed on destruction.
class DirLock {
public:
  explicit DirLock(const fs::path &dir) : path_(dir / ".hgplvm.lock") {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
      throw LockError("output directory '" + dir.string() +
                      "' is locked by another run (" + path_.string() + ")");
    }
    ::close(fd);
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock &) = delete;
  DirLock &operator=(const DirLock &) = delete;

private:
  fs::path path_;
};

RunConfig load_config(const std::string &path,
                      const std::vector<std::string> &overrides) {
  RunConfig cfg = path.empty() ? RunConfig{} : RunConfig::load(path);
  for (const auto &o : overrides) {
    cfg.set(o);
  }
  return cfg;
}

ojson config_snapshot(const ExperimentSpec &e) {
  ojson j;
  j["dataset"]["kind"] = e.dataset_kind;
  if (e.dataset_kind == "sbt") {
    j["dataset"]["depth"] = e.sbt.depth;
    j["dataset"]["samples_per_node"] = e.sbt.samples_per_node;
    j["dataset"]["flip_prob"] = e.sbt.flip_prob;
    j["dataset"]["seed"] = e.sbt.seed;
  } else {
    j["dataset"]["n_spirals"] = e.spiral.n_spirals;
    j["dataset"]["points_per_spiral"] = e.spiral.points_per_spiral;
    j["dataset"]["ambient_dim"] = e.spiral.ambient_dim;
    j["dataset"]["angular_rate"] = e.spiral.angular_rate;
    j["dataset"]["noise"] = e.spiral.noise;
    j["dataset"]["seed"] = e.spiral.seed;
  }
  const auto &m = e.model;
  j["model"]["variant"] = to_string(m.variant);
  j["model"]["q"] = m.Q;
  j["model"]["m"] = m.M;
  j["model"]["h"] = m.H;
  j["model"]["kappa"] = m.kernel.kappa;
  j["model"]["sigma"] = m.kernel.sigma;
  j["model"]["beta"] = m.beta;
  j["model"]["jitter"] = m.jitter;
  j["model"]["retry_jitter"] = m.retry_jitter;
  const auto &t = e.train;
  j["train"]["max_iter"] = t.max_iter;
  j["train"]["lr_latent"] = t.lr_latent;
  j["train"]["lr_hyper"] = t.lr_hyper;
  j["train"]["warmup_epochs"] = t.warmup_epochs;
  j["train"]["resample_every"] = t.resample_every;
  j["train"]["variance_freeze_epochs"] = t.variance_freeze_epochs;
  j["train"]["init_scale"] = t.init_scale;
  j["train"]["init_variance"] = t.init_variance;
  j["train"]["learn_sigma"] = t.learn_sigma;
  j["train"]["learn_beta"] = t.learn_beta;
  j["train"]["normalize_gradients"] = t.normalize_gradients;
  j["train"]["center_data"] = t.center_data;
  j["train"]["adaptive_step"] = t.adaptive_step;
  j["train"]["step_growth"] = t.step_growth;
  j["train"]["step_shrink"] = t.step_shrink;
  j["train"]["max_step_factor"] = t.max_step_factor;
  j["metrics"]["neighbourhood_k"] = e.neighbourhood_k;
  j["metrics"]["knn_k"] = e.knn_k;
  j["output"]["dir"] = e.out_dir;
  return j;
}

void write_manifest(const fs::path &dir, const ExperimentSpec &e,
                    const std::string &status, const std::string &error,
                    double seconds, const std::optional<TrainResult> &res,
                    const std::optional<MetricScores> &scores) {
  ojson j;
  j["version"] = kVersion;
  j["status"] = status;
  if (!error.empty()) {
    j["error"] = error;
  }
  j["seed"] = e.seed;
  j["config"] = config_snapshot(e);
  j["duration_seconds"] = seconds;
  if (res) {
    j["final_objective"] = res->final_objective;
    j["final_log_sigma"] = res->state.log_sigma;
    j["final_log_beta"] = res->state.log_beta;
    j["rejected_steps"] = res->state.rejected_steps;
  }
  j["metrics"] = scores ? to_json(*scores) : ojson::object();
  detail::write_file((dir / "manifest.json").string(), j.dump(2) + "\n");
}

int cmd_run(const std::string &config_path,
            const std::vector<std::string> &overrides, long long seed,
            const std::string &out) {
  RunConfig cfg = load_config(config_path, overrides);
  cfg.set("run.seed", std::to_string(seed));
  if (!out.empty()) {
    cfg.set("output.dir", out);
  }
  const ExperimentSpec e = resolve(cfg);
  const fs::path dir(e.out_dir);
  fs::create_directories(dir);
  DirLock lock(dir);

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };
  const Dataset ds = make_dataset(e);
  std::optional<TrainResult> res;
  try {
    res = train(ds.Y, e.model, e.train, e.seed);
  } catch (const Error &err) {
    write_manifest(dir, e, "failed", err.what(), elapsed(), std::nullopt,
                   std::nullopt);
    std::cerr << "hgplvm: training failed: " << err.what() << '\n';
    return kExitFailure;
  }
  export_embedding(res->state, ds.labels, (dir / "embedding.csv").string());
  detail::write_file((dir / "trace.csv").string(), trace_csv(res->trace));
  if (e.model.Q == 2) {
    Embedding emb{res->state.positions(), ds.labels, {}};
    detail::write_file((dir / "plot.svg").string(), poincare_svg(emb));
  }
  const auto scores = score_embedding(ds, res->state.positions(),
                                      e.neighbourhood_k, e.knn_k);
  write_manifest(dir, e, "ok", "", elapsed(), res, scores);
  std::cout << to_json(scores).dump() << '\n';
  return 0;
}

int cmd_render(const std::string &embedding, const std::string &out) {
  const auto emb = load_embedding(embedding);
  detail::write_file(out, poincare_svg(emb));
  return 0;
}

int cmd_metrics(const std::string &embedding, const std::string &config_path,
                const std::vector<std::string> &overrides, long long seed) {
  RunConfig cfg = load_config(config_path, overrides);
  cfg.set("run.seed", std::to_string(seed));
  const ExperimentSpec e = resolve_dataset(cfg);
  const auto emb = load_embedding(embedding);
  const auto scores =
      score_embedding(make_dataset(e), emb.points, e.neighbourhood_k, e.knn_k);
  std::cout << to_json(scores).dump(2) << '\n';
  return 0;
}

int cmd_gen_data(const std::string &config_path,
                 const std::vector<std::string> &overrides, long long seed,
                 const std::string &out) {
  RunConfig cfg = load_config(config_path, overrides);
  cfg.set("run.seed", std::to_string(seed));
  const ExperimentSpec e = resolve_dataset(cfg);
  const Dataset ds = make_dataset(e);
  std::ostringstream s;
  s << "label";
  for (Eigen::Index j = 0; j < ds.Y.cols(); ++j) {
    s << ",y" << j;
  }
  s << '\n';
  for (Eigen::Index i = 0; i < ds.Y.rows(); ++i) {
    s << ds.labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < ds.Y.cols(); ++j) {
      s << ',' << detail::fmt17(ds.Y(i, j));
    }
    s << '\n';
  }
  detail::write_file(out, s.str());
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Hyperboloid GP-LVM experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config;
  std::vector<std::string> overrides;
  long long seed = 0;
  std::string out;
  std::string embedding;

  auto *run = app.add_subcommand("run", "train and write all artifacts");
  run->add_option("-c,--config", config, "config file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "run seed")->required();
  run->add_option("-o,--out", out, "output directory (overrides output.dir)");
  run->add_option("--set", overrides, "override, section.key=value");

  auto *render = app.add_subcommand("render", "draw an embedding CSV as SVG");
  render->add_option("-e,--embedding", embedding, "embedding.csv")
      ->required()
      ->check(CLI::ExistingFile);
  render->add_option("-o,--out", out, "SVG path")->required();

  auto *metrics =
      app.add_subcommand("metrics", "score an embedding against its dataset");
  metrics->add_option("-e,--embedding", embedding, "embedding.csv")
      ->required()
      ->check(CLI::ExistingFile);
  metrics->add_option("-c,--config", config, "config file")
      ->required()
      ->check(CLI::ExistingFile);
  metrics->add_option("--seed", seed, "seed used for the run")->required();
  metrics->add_option("--set", overrides, "override, section.key=value");

  auto *gen = app.add_subcommand("gen-data", "write a dataset as CSV");
  gen->add_option("-c,--config", config, "config file");
  gen->add_option("--seed", seed, "dataset seed")->required();
  gen->add_option("-o,--out", out, "CSV path")->required();
  gen->add_option("--set", overrides, "override, section.key=value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run) {
      return cmd_run(config, overrides, seed, out);
    }
    if (*render) {
      return cmd_render(embedding, out);
    }
    if (*metrics) {
      return cmd_metrics(embedding, config, overrides, seed);
    }
    return cmd_gen_data(config, overrides, seed, out);
  } catch (const ConfigError &e) {
    std::cerr << "hgplvm: config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterError &e) {
    std::cerr << "hgplvm: invalid parameter: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ArgumentError &e) {
    std::cerr << "hgplvm: invalid argument: " << e.what() << '\n';
    return kExitUsage;
  } catch (const LockError &e) {
    std::cerr << "hgplvm: " << e.what() << '\n';
    return kExitLocked;
  } catch (const std::exception &e) {
    std::cerr << "hgplvm: " << e.what() << '\n';
    return kExitFailure;
  }
}
