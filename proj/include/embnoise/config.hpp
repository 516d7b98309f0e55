#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "embnoise/knn.hpp"
#include "embnoise/losses.hpp"
#include "embnoise/noise.hpp"
#include "embnoise/spectral.hpp"
#include "embnoise/split.hpp"
#include "embnoise/synthetic.hpp"
#include "embnoise/trainer.hpp"

namespace embnoise {

struct DatasetSource {
  std::string name;
  std::optional<std::filesystem::path> path;  // EMB1 or CSV
  std::optional<SyntheticSpec> synthetic;
};

/// A trained head (loss + train config) or a k-NN probe.
struct MethodSpec {
  std::string label;
  std::optional<LossSpec> loss;
  TrainConfig train;
  std::optional<KnnConfig> knn;

  bool is_knn() const { return knn.has_value(); }
};

/// One family of noise specs: uniform, a preset matrix, or a custom matrix,
/// each instantiated at every listed eta.
struct NoiseTemplate {
  enum class Kind { Uniform, Preset, Custom };
  Kind kind = Kind::Uniform;
  std::string preset;                         // Kind::Preset
  std::vector<std::vector<double>> matrix;    // Kind::Custom
  std::vector<double> etas;

  std::string descriptor() const;
  NoiseSpec instantiate(double eta, std::uint64_t seed) const;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  SplitFractions split;
  std::vector<DatasetSource> datasets;
  std::vector<MethodSpec> methods;
  std::vector<NoiseTemplate> noise_grid;
  std::vector<std::uint64_t> seeds;
  std::size_t parallelism = 1;
  std::filesystem::path output_dir = "results";
};

/// Throws ConfigError on schema violations. Relative dataset paths resolve
/// against `base_dir`.
ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

LossSpec loss_spec_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
KnnConfig knn_config_from_json(const nlohmann::json& j);
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
NoiseTemplate noise_template_from_json(const nlohmann::json& j);

nlohmann::json to_json(const LossSpec& spec);
nlohmann::json to_json(const TrainConfig& cfg);
nlohmann::json to_json(const TrainRecord& record);
nlohmann::json to_json(const SpectralReport& report);

}  // namespace embnoise
