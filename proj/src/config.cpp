#include "embnoise/config.hpp"

#include <fstream>
#include <limits>
#include <set>

#include "embnoise/error.hpp"

namespace embnoise {

using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void check_identifier(const std::string& id, const char* what) {
  if (id.empty()) throw ConfigError(std::string("every ") + what + " needs a name");
  if (id.find_first_of(",|\n\r\"") != std::string::npos) {
    throw ConfigError(std::string(what) + " '" + id + "' must not contain , | \" or newlines");
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.contains(key)) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

}  // namespace

std::string NoiseTemplate::descriptor() const {
  switch (kind) {
    case Kind::Uniform: return "uniform";
    case Kind::Preset: return "asym:" + preset;
    case Kind::Custom: return "asym:custom";
  }
  return "?";
}

NoiseSpec NoiseTemplate::instantiate(double eta, std::uint64_t seed) const {
  NoiseSpec spec;
  spec.seed = seed;
  switch (kind) {
    case Kind::Uniform:
      spec.variant = UniformNoise{eta};
      break;
    case Kind::Preset:
      spec.variant = AsymmetricNoise{preset_matrix(preset, eta), eta};
      break;
    case Kind::Custom: {
      auto t = TransitionMatrix::from_rows(matrix);
      t.preset_name = "custom";
      spec.variant = AsymmetricNoise{std::move(t), eta};
      break;
    }
  }
  return spec;
}

LossSpec loss_spec_from_json(const json& j) {
  reject_unknown(j, {"kind", "q", "alpha", "beta", "A", "prob_floor"}, "loss");
  LossSpec s;
  try {
    s.kind = loss_kind_from_string(get_or<std::string>(j, "kind", "cce"));
    s.q = get_or(j, "q", s.q);
    s.alpha = get_or(j, "alpha", s.alpha);
    s.beta = get_or(j, "beta", s.beta);
    s.A = get_or(j, "A", s.A);
    s.prob_floor = get_or(j, "prob_floor", s.prob_floor);
    s.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("loss: ") + e.what());
  }
  return s;
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  reject_unknown(j,
                 {"lr_max", "lr_min", "epochs_max", "batch_size", "patience", "warmup_epochs", "aug_sigma", "seed",
                  "shuffle", "hidden"},
                 "train");
  c.lr_max = get_or(j, "lr_max", c.lr_max);
  c.lr_min = get_or(j, "lr_min", c.lr_min);
  c.epochs_max = get_or(j, "epochs_max", c.epochs_max);
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  c.patience = get_or(j, "patience", c.patience);
  c.warmup_epochs = get_or(j, "warmup_epochs", c.warmup_epochs);
  c.aug_sigma = get_or(j, "aug_sigma", c.aug_sigma);
  c.seed = get_or(j, "seed", c.seed);
  c.shuffle = get_or(j, "shuffle", c.shuffle);
  c.hidden = get_or(j, "hidden", c.hidden);
  try {
    c.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

KnnConfig knn_config_from_json(const json& j) {
  reject_unknown(j, {"k", "fraction", "metric", "seed"}, "knn");
  KnnConfig c;
  c.k = get_or(j, "k", c.k);
  c.subsample_fraction = get_or(j, "fraction", c.subsample_fraction);
  c.seed = get_or(j, "seed", c.seed);
  const auto metric = get_or<std::string>(j, "metric", "euclidean");
  if (metric == "euclidean") {
    c.metric = KnnMetric::Euclidean;
  } else if (metric == "cosine") {
    c.metric = KnnMetric::Cosine;
  } else {
    throw ConfigError("knn: metric must be euclidean or cosine");
  }
  try {
    c.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

SyntheticSpec synthetic_spec_from_json(const json& j) {
  reject_unknown(j, {"classes", "dim", "samples_per_class", "spread", "separation", "seed"}, "synthetic");
  SyntheticSpec s;
  s.n_classes = get_or(j, "classes", s.n_classes);
  s.dim = get_or(j, "dim", s.dim);
  s.samples_per_class = get_or(j, "samples_per_class", s.samples_per_class);
  s.cluster_spread = get_or(j, "spread", s.cluster_spread);
  s.center_separation = get_or(j, "separation", s.center_separation);
  s.seed = get_or(j, "seed", s.seed);
  try {
    s.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  return s;
}

NoiseTemplate noise_template_from_json(const json& j) {
  reject_unknown(j, {"type", "preset", "matrix", "etas", "eta"}, "noise_grid entry");
  NoiseTemplate t;
  const auto type = get_or<std::string>(j, "type", "uniform");
  if (type == "uniform") {
    t.kind = NoiseTemplate::Kind::Uniform;
  } else if (type == "asymmetric") {
    if (j.contains("preset") == j.contains("matrix")) {
      throw ConfigError("asymmetric noise needs exactly one of 'preset' or 'matrix'");
    }
    if (j.contains("preset")) {
      t.kind = NoiseTemplate::Kind::Preset;
      t.preset = get_or<std::string>(j, "preset", "");
      const auto names = preset_names();
      if (std::find(names.begin(), names.end(), t.preset) == names.end()) {
        throw ConfigError("unknown transition preset '" + t.preset + "'");
      }
    } else {
      t.kind = NoiseTemplate::Kind::Custom;
      t.matrix = get_or<std::vector<std::vector<double>>>(j, "matrix", {});
      try {
        TransitionMatrix::from_rows(t.matrix);
      } catch (const ValidationError& e) {
        throw ConfigError(std::string("noise matrix: ") + e.what());
      }
    }
  } else {
    throw ConfigError("noise type must be 'uniform' or 'asymmetric'");
  }

  if (j.contains("etas")) {
    t.etas = get_or<std::vector<double>>(j, "etas", {});
  } else if (j.contains("eta")) {
    t.etas = {get_or<double>(j, "eta", 0.0)};
  } else if (t.kind == NoiseTemplate::Kind::Custom) {
    t.etas = {1.0 - t.matrix.at(0).at(0)};
  }
  if (t.etas.empty()) throw ConfigError("noise_grid entry has no eta values");
  for (double eta : t.etas) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta values must lie in [0, 1]");
  }
  if (t.kind == NoiseTemplate::Kind::Custom && t.etas.size() != 1) {
    throw ConfigError("a custom matrix fixes eta; give a single value");
  }
  return t;
}

ExperimentConfig parse_experiment_config(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, {"seed", "split", "datasets", "methods", "noise_grid", "seeds", "parallelism", "output_dir"},
                 "experiment");
  ExperimentConfig cfg;
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
  if (j.contains("split")) {
    const auto& s = j.at("split");
    reject_unknown(s, {"train", "val", "test"}, "split");
    cfg.split.train = get_or(s, "train", cfg.split.train);
    cfg.split.val = get_or(s, "val", cfg.split.val);
    cfg.split.test = get_or(s, "test", cfg.split.test);
  }

  if (!j.contains("datasets") || !j.at("datasets").is_array() || j.at("datasets").empty()) {
    throw ConfigError("config needs a non-empty 'datasets' array");
  }
  std::set<std::string> dataset_names;
  for (const auto& d : j.at("datasets")) {
    reject_unknown(d, {"name", "path", "synthetic"}, "dataset");
    DatasetSource src;
    src.name = get_or<std::string>(d, "name", "");
    check_identifier(src.name, "dataset");
    if (!dataset_names.insert(src.name).second) throw ConfigError("duplicate dataset name '" + src.name + "'");
    if (d.contains("path") == d.contains("synthetic")) {
      throw ConfigError("dataset '" + src.name + "' needs exactly one of 'path' or 'synthetic'");
    }
    if (d.contains("path")) {
      std::filesystem::path p = get_or<std::string>(d, "path", "");
      src.path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    } else {
      src.synthetic = synthetic_spec_from_json(d.at("synthetic"));
      src.synthetic->name = src.name;
    }
    cfg.datasets.push_back(std::move(src));
  }

  if (!j.contains("methods") || !j.at("methods").is_array() || j.at("methods").empty()) {
    throw ConfigError("config needs a non-empty 'methods' array");
  }
  std::set<std::string> method_labels;
  for (const auto& m : j.at("methods")) {
    reject_unknown(m, {"label", "loss", "train", "knn"}, "method");
    MethodSpec spec;
    spec.label = get_or<std::string>(m, "label", "");
    check_identifier(spec.label, "method");
    if (!method_labels.insert(spec.label).second) throw ConfigError("duplicate method label '" + spec.label + "'");
    if (m.contains("knn")) {
      if (m.contains("loss") || m.contains("train")) throw ConfigError("knn methods take no loss/train settings");
      spec.knn = knn_config_from_json(m.at("knn"));
    } else {
      spec.loss = loss_spec_from_json(m.value("loss", json::object()));
      spec.train = train_config_from_json(m.value("train", json::object()));
    }
    cfg.methods.push_back(std::move(spec));
  }

  if (!j.contains("noise_grid") || !j.at("noise_grid").is_array() || j.at("noise_grid").empty()) {
    throw ConfigError("config needs a non-empty 'noise_grid' array");
  }
  for (const auto& n : j.at("noise_grid")) cfg.noise_grid.push_back(noise_template_from_json(n));

  cfg.seeds = get_or<std::vector<std::uint64_t>>(j, "seeds", {});
  if (cfg.seeds.empty()) throw ConfigError("config needs a non-empty 'seeds' array");
  if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size()) {
    throw ConfigError("seeds must be distinct");
  }
  cfg.parallelism = get_or<std::size_t>(j, "parallelism", 1);
  if (cfg.parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (j.contains("output_dir")) {
    std::filesystem::path out = get_or<std::string>(j, "output_dir", "results");
    cfg.output_dir = out.is_relative() && !base_dir.empty() ? base_dir / out : out;
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_experiment_config(j, path.parent_path());
}

json to_json(const LossSpec& s) {
  json j = {{"kind", to_string(s.kind)}, {"prob_floor", s.prob_floor}};
  if (s.kind == LossKind::GCE) j["q"] = s.q;
  if (s.kind == LossKind::RCE || s.kind == LossKind::APL) j["A"] = s.A;
  if (s.kind == LossKind::APL) {
    j["alpha"] = s.alpha;
    j["beta"] = s.beta;
  }
  return j;
}

json to_json(const TrainConfig& c) {
  return {{"lr_max", c.lr_max},           {"lr_min", c.lr_min},       {"epochs_max", c.epochs_max},
          {"batch_size", c.batch_size},   {"patience", c.patience},   {"warmup_epochs", c.warmup_epochs},
          {"aug_sigma", c.aug_sigma},     {"seed", c.seed},           {"shuffle", c.shuffle},
          {"hidden", c.hidden}};
}

json to_json(const TrainRecord& r) {
  json epochs = json::array(), lr = json::array(), loss = json::array(), val = json::array();
  for (const auto& e : r.epochs) {
    epochs.push_back(e.epoch);
    lr.push_back(e.lr);
    loss.push_back(e.train_loss);
    val.push_back(e.val_accuracy);
  }
  return {{"epoch", epochs},
          {"lr", lr},
          {"train_loss", loss},
          {"val_accuracy", val},
          {"best_epoch", r.best_epoch},
          {"best_val_accuracy", r.best_val_accuracy},
          {"stopped_reason", to_string(r.stopped_reason)},
          {"test_accuracy", r.test_accuracy}};
}

json to_json(const SpectralReport& r) {
  json j = {{"n_rows", r.n_rows},
            {"k", r.k},
            {"rank", r.rank},
            {"rank_deficient", r.rank_deficient},
            {"alignment", r.alignment},
            {"singular_values", r.singular_values}};
  // JSON has no infinity; the sentinel is a string.
  if (std::isinf(r.gap_ratio)) {
    j["gap_ratio"] = "inf";
  } else {
    j["gap_ratio"] = r.gap_ratio;
  }
  return j;
}

}  // namespace embnoise
