#pragma once

// Run configuration (sectioned key=value text), embedding / trace CSV,
// manifest JSON and the Poincare-disk SVG.

#include <hgplvm/datasets.hpp>
#include <hgplvm/metrics.hpp>
#include <hgplvm/optimizer.hpp>

#include <nlohmann/json.hpp>

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace hgplvm {

class IoError : public Error {
public:
  using Error::Error;
};

inline constexpr const char *kVersion = "0.1.0";

/// Flat "section.key" -> value map read from
///   [section]
///   key = value   # comment
class RunConfig {
public:
  static RunConfig parse(std::istream &in) {
    RunConfig cfg;
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) {
        line.erase(hash);
      }
      line = trim(line);
      if (line.empty()) {
        continue;
      }
      if (line.front() == '[') {
        if (line.back() != ']') {
          throw ConfigError("line " + std::to_string(lineno) +
                            ": unterminated section header");
        }
        section = trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("line " + std::to_string(lineno) +
                          ": expected key = value");
      }
      std::string key = trim(line.substr(0, eq));
      if (!section.empty() && key.find('.') == std::string::npos) {
        key = section + "." + key;
      }
      cfg.values_[key] = trim(line.substr(eq + 1));
    }
    return cfg;
  }

  static RunConfig load(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
      throw IoError("cannot read config file '" + path + "'");
    }
    return parse(in);
  }

  /// "section.key=value" override.
  void set(const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("override '" + assignment + "' is not key=value");
    }
    values_[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
  }
  void set(const std::string &key, const std::string &value) {
    values_[key] = value;
  }

  bool has(const std::string &key) const { return values_.count(key) > 0; }

  const std::string &require(const std::string &key) const {
    auto it = values_.find(key);
    if (it == values_.end()) {
      throw MissingField(key);
    }
    return it->second;
  }

  std::string get(const std::string &key, const std::string &def) const {
    auto it = values_.find(key);
    return it == values_.end() ? def : it->second;
  }

  double number(const std::string &key) const {
    return to_double(key, require(key));
  }
  double number(const std::string &key, double def) const {
    return has(key) ? number(key) : def;
  }
  long long integer(const std::string &key) const {
    return to_int(key, require(key));
  }
  long long integer(const std::string &key, long long def) const {
    return has(key) ? integer(key) : def;
  }
  bool flag(const std::string &key, bool def) const {
    if (!has(key)) {
      return def;
    }
    const auto &v = require(key);
    if (v == "true" || v == "1" || v == "yes") {
      return true;
    }
    if (v == "false" || v == "0" || v == "no") {
      return false;
    }
    throw ConfigError("field '" + key + "': expected a boolean, got '" + v +
                      "'");
  }

  const std::map<std::string, std::string> &values() const { return values_; }

  class MissingField : public ConfigError {
  public:
    explicit MissingField(const std::string &key)
        : ConfigError("missing required field '" + key + "'"), key_(key) {}
    const std::string &key() const { return key_; }

  private:
    std::string key_;
  };

private:
  static std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
      return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static double to_double(const std::string &key, const std::string &v) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used == v.size()) {
        return d;
      }
    } catch (const std::exception &) {
    }
    throw ConfigError("field '" + key + "': expected a number, got '" + v +
                      "'");
  }

  static long long to_int(const std::string &key, const std::string &v) {
    long long out = 0;
    const auto *end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) {
      throw ConfigError("field '" + key + "': expected an integer, got '" + v +
                        "'");
    }
    return out;
  }

  std::map<std::string, std::string> values_;
};

/// Everything a run needs, resolved from a RunConfig.
struct ExperimentSpec {
  std::string dataset_kind; ///< "sbt" or "spiral"
  SbtSpec sbt;
  SpiralSpec spiral;
  ModelConfig model;
  TrainConfig train;
  std::string out_dir;
  std::uint64_t seed = 0;
  int neighbourhood_k = 3; ///< trustworthiness / continuity
  int knn_k = 5;
};

inline Variant parse_variant(const std::string &v) {
  if (v == "full") {
    return Variant::Full;
  }
  if (v == "sparse") {
    return Variant::Sparse;
  }
  if (v == "bayesian") {
    return Variant::Bayesian;
  }
  throw ConfigError("field 'model.variant': unknown variant '" + v + "'");
}

/// Dataset and metric settings only. Required: dataset.kind, run.seed and,
/// for SBT, dataset.depth.
inline ExperimentSpec resolve_dataset(const RunConfig &c) {
  ExperimentSpec e;
  e.seed = static_cast<std::uint64_t>(c.integer("run.seed"));
  e.dataset_kind = c.require("dataset.kind");
  const auto data_seed = static_cast<std::uint64_t>(
      c.integer("dataset.seed", static_cast<long long>(e.seed)));
  if (e.dataset_kind == "sbt") {
    e.sbt.depth = static_cast<int>(c.integer("dataset.depth"));
    e.sbt.samples_per_node =
        static_cast<int>(c.integer("dataset.samples_per_node", 20));
    e.sbt.flip_prob = c.number("dataset.flip_prob", 0.1);
    e.sbt.seed = data_seed;
    e.sbt.validate();
  } else if (e.dataset_kind == "spiral") {
    e.spiral.n_spirals = static_cast<int>(c.integer("dataset.n_spirals", 10));
    e.spiral.points_per_spiral =
        static_cast<int>(c.integer("dataset.points_per_spiral", 80));
    e.spiral.ambient_dim = static_cast<int>(c.integer("dataset.ambient_dim", 20));
    e.spiral.seed = data_seed;
  } else {
    throw ConfigError("field 'dataset.kind': unknown dataset '" +
                      e.dataset_kind + "'");
  }

  e.neighbourhood_k =
      static_cast<int>(c.integer("metrics.neighbourhood_k", 3));
  e.knn_k = static_cast<int>(c.integer("metrics.knn_k", 5));
  return e;
}

/// Full run settings. Required on top of resolve_dataset: model.variant,
/// model.kappa, train.max_iter and output.dir.
inline ExperimentSpec resolve(const RunConfig &c) {
  ExperimentSpec e = resolve_dataset(c);
  auto &m = e.model;
  m.variant = parse_variant(c.require("model.variant"));
  m.Q = c.integer("model.q", 2);
  m.M = c.integer("model.m", 0);
  m.H = c.integer("model.h", 1);
  m.kernel.kappa = c.number("model.kappa");
  m.kernel.sigma = c.number("model.sigma", 1.0);
  m.beta = c.number("model.beta", 100.0);
  m.jitter = c.number("model.jitter", m.jitter);
  m.kernel.validate();

  auto &t = e.train;
  t.max_iter = static_cast<int>(c.integer("train.max_iter"));
  t.lr_latent = c.number("train.lr_latent", t.lr_latent);
  t.lr_hyper = c.number("train.lr_hyper", 0.1 * t.lr_latent);
  t.warmup_epochs = static_cast<int>(c.integer("train.warmup_epochs", t.warmup_epochs));
  t.resample_every =
      static_cast<int>(c.integer("train.resample_every", t.resample_every));
  t.variance_freeze_epochs = static_cast<int>(
      c.integer("train.variance_freeze_epochs", t.variance_freeze_epochs));
  t.init_scale = c.number("train.init_scale", t.init_scale);
  t.init_variance = c.number("train.init_variance", t.init_variance);
  t.learn_sigma = c.flag("train.learn_sigma", t.learn_sigma);
  t.learn_beta = c.flag("train.learn_beta", t.learn_beta);
  t.normalize_gradients =
      c.flag("train.normalize_gradients", t.normalize_gradients);
  t.center_data = c.flag("train.center_data", t.center_data);
  t.adaptive_step = c.flag("train.adaptive_step", t.adaptive_step);
  t.validate();

  e.out_dir = c.require("output.dir");
  return e;
}

inline Dataset make_dataset(const ExperimentSpec &e) {
  return e.dataset_kind == "sbt" ? sbt_dataset(e.sbt)
                                 : spiral_dataset(e.spiral);
}

namespace detail {

inline std::string fmt17(double v) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

inline void write_file(const std::string &path, const std::string &content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write '" + path + "'");
  }
  out << content;
  if (!out) {
    throw IoError("write failed for '" + path + "'");
  }
}

inline std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    out.push_back(cur);
  }
  if (!s.empty() && s.back() == sep) {
    out.emplace_back();
  }
  return out;
}

} // namespace detail

/// One row per latent point: index,label,x0..xQ,p1..pQ[,s1..sQ].
inline std::string embedding_csv(const TrainState &st,
                                 const std::vector<int> &labels) {
  const PointList pts = st.positions();
  if (pts.empty()) {
    throw ArgumentError("embedding_csv: empty state");
  }
  const auto q = pts.front().dim();
  const bool bayes = !st.states.empty();
  std::ostringstream out;
  out << "index,label";
  for (Eigen::Index j = 0; j <= q; ++j) {
    out << ",x" << j;
  }
  for (Eigen::Index j = 1; j <= q; ++j) {
    out << ",p" << j;
  }
  if (bayes) {
    for (Eigen::Index j = 1; j <= q; ++j) {
      out << ",s" << j;
    }
  }
  out << '\n';
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out << i << ',' << (i < labels.size() ? labels[i] : -1);
    for (Eigen::Index j = 0; j <= q; ++j) {
      out << ',' << detail::fmt17(pts[i].coords()[j]);
    }
    const auto p = to_poincare(pts[i]);
    for (Eigen::Index j = 0; j < q; ++j) {
      out << ',' << detail::fmt17(p.coords[j]);
    }
    if (bayes) {
      for (Eigen::Index j = 0; j < q; ++j) {
        out << ',' << detail::fmt17(st.states[i].s[j]);
      }
    }
    out << '\n';
  }
  return out.str();
}

inline void export_embedding(const TrainState &st,
                             const std::vector<int> &labels,
                             const std::string &path) {
  detail::write_file(path, embedding_csv(st, labels));
}

struct Embedding {
  PointList points;
  std::vector<int> labels;
  Matrix variances; ///< Q x N, empty for point runs
};

inline Embedding parse_embedding(std::istream &in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw IoError("embedding: empty file");
  }
  const auto header = detail::split(line, ',');
  Eigen::Index q = 0;
  bool has_s = false;
  for (const auto &h : header) {
    if (!h.empty() && h[0] == 'p') {
      ++q;
    }
    if (!h.empty() && h[0] == 's') {
      has_s = true;
    }
  }
  if (q < 1 || header.size() < 2 ||
      header.size() != static_cast<std::size_t>(2 + (q + 1) + q +
                                                (has_s ? q : 0))) {
    throw IoError("embedding: malformed header");
  }
  Embedding e;
  std::vector<Vector> vars;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    const auto f = detail::split(line, ',');
    if (f.size() != header.size()) {
      throw IoError("embedding: row has " + std::to_string(f.size()) +
                    " fields, header has " + std::to_string(header.size()));
    }
    try {
      e.labels.push_back(std::stoi(f[1]));
      Vector c(q + 1);
      for (Eigen::Index j = 0; j <= q; ++j) {
        c[j] = std::stod(f[static_cast<std::size_t>(2 + j)]);
      }
      e.points.push_back(LorentzPoint::lift(c.tail(q)));
      if (has_s) {
        Vector s(q);
        for (Eigen::Index j = 0; j < q; ++j) {
          s[j] = std::stod(f[static_cast<std::size_t>(2 + 2 * q + 1 + j)]);
        }
        vars.push_back(s);
      }
    } catch (const std::invalid_argument &) {
      throw IoError("embedding: non-numeric field");
    }
  }
  if (has_s) {
    e.variances.resize(q, static_cast<Eigen::Index>(vars.size()));
    for (std::size_t i = 0; i < vars.size(); ++i) {
      e.variances.col(static_cast<Eigen::Index>(i)) = vars[i];
    }
  }
  return e;
}

inline Embedding load_embedding(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot read embedding '" + path + "'");
  }
  return parse_embedding(in);
}

inline std::string trace_csv(const std::vector<TraceRecord> &trace) {
  std::ostringstream out;
  out << "epoch,objective,log_sigma,log_beta\n";
  for (const auto &r : trace) {
    out << r.epoch << ',' << detail::fmt17(r.objective) << ','
        << detail::fmt17(r.log_sigma) << ',' << detail::fmt17(r.log_beta)
        << '\n';
  }
  return out.str();
}

/// Label colour: a fixed 10-colour cycle.
inline std::string label_color(int label) {
  static const std::array<const char *, 10> palette = {
      "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
      "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  const auto n = static_cast<int>(palette.size());
  return palette[static_cast<std::size_t>(((label % n) + n) % n)];
}

/// Unit-disk plot of a Q=2 embedding; one circle per point plus a legend.
inline std::string poincare_svg(const Embedding &e,
                                const std::map<int, std::string> &colors = {}) {
  if (e.points.empty()) {
    throw ArgumentError("render: empty embedding");
  }
  if (e.points.front().dim() != 2) {
    throw DimensionError("render: only Q=2 embeddings can be drawn (Q=" +
                         std::to_string(e.points.front().dim()) + ")");
  }
  const double size = 600.0;
  const double c = size / 2.0;
  const double r = size / 2.0 - 20.0;
  auto num = [](double v) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.3f", v);
    return std::string(buf.data());
  };
  auto color = [&](int label) {
    auto it = colors.find(label);
    return it != colors.end() ? it->second : label_color(label);
  };
  std::ostringstream out;
  const double width = size + 140.0;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
      << "\" height=\"" << num(size) << "\" viewBox=\"0 0 " << num(width)
      << ' ' << num(size) << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<circle class=\"boundary\" cx=\"" << num(c) << "\" cy=\"" << num(c)
      << "\" r=\"" << num(r) << "\" fill=\"none\" stroke=\"black\"/>\n";
  std::set<int> seen;
  for (std::size_t i = 0; i < e.points.size(); ++i) {
    const auto p = to_poincare(e.points[i]).coords;
    const int lab = i < e.labels.size() ? e.labels[i] : 0;
    seen.insert(lab);
    out << "<circle class=\"pt\" cx=\"" << num(c + r * p[0]) << "\" cy=\""
        << num(c - r * p[1]) << "\" r=\"3\" fill=\"" << color(lab)
        << "\" fill-opacity=\"0.8\"/>\n";
  }
  double y = 30.0;
  for (int lab : seen) {
    out << "<rect x=\"" << num(size + 10.0) << "\" y=\"" << num(y - 9.0)
        << "\" width=\"10\" height=\"10\" fill=\"" << color(lab) << "\"/>"
        << "<text x=\"" << num(size + 26.0) << "\" y=\"" << num(y)
        << "\" font-size=\"11\" font-family=\"sans-serif\">" << lab
        << "</text>\n";
    y += 14.0;
  }
  out << "</svg>\n";
  return out.str();
}

struct MetricScores {
  std::optional<double> distance_correlation;
  std::optional<double> trustworthiness;
  std::optional<double> continuity;
  std::optional<double> shepard;
  std::optional<double> knn_accuracy;
};

/// Scores of an embedding against its dataset. Distance correlation needs
/// SBT node codes; neighbourhood scores need k < (N-1)/2.
inline MetricScores score_embedding(const Dataset &ds, const PointList &pts,
                                    int neighbourhood_k, int knn_k) {
  if (static_cast<Eigen::Index>(pts.size()) != ds.size()) {
    throw DimensionError("metrics: embedding has " +
                         std::to_string(pts.size()) + " points, dataset " +
                         std::to_string(ds.size()));
  }
  MetricScores m;
  const auto lat = pairwise_distances(pts);
  if (ds.has_codes()) {
    m.distance_correlation = distance_correlation(
        lat, pairwise_distances(ds.sample_codes(), Metric::Hamming));
  }
  const auto obs = pairwise_distances(ds.Y, Metric::Euclidean);
  m.shepard = shepard_goodness(obs, lat);
  const auto n = pts.size();
  const int k = neighbourhood_k;
  if (k >= 1 &&
      static_cast<double>(k) < (static_cast<double>(n) - 1.0) / 2.0) {
    const Matrix dobs = square_distances(obs, n);
    const Matrix dlat = square_distances(lat, n);
    m.trustworthiness = trustworthiness_from_distances(dobs, dlat, k);
    m.continuity = continuity_from_distances(dobs, dlat, k);
  }
  if (knn_k >= 1 && static_cast<std::size_t>(knn_k) < n) {
    m.knn_accuracy = knn_accuracy(pts, ds.labels, knn_k);
  }
  return m;
}

inline nlohmann::ordered_json to_json(const MetricScores &m) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  auto put = [&](const char *key, const std::optional<double> &v) {
    if (v) {
      j[key] = *v;
    }
  };
  put("distance_correlation", m.distance_correlation);
  put("trustworthiness", m.trustworthiness);
  put("continuity", m.continuity);
  put("shepard_goodness", m.shepard);
  put("knn_accuracy", m.knn_accuracy);
  return j;
}

} // namespace hgplvm
