#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "embnoise/config.hpp"
#include "embnoise/dataset.hpp"

namespace embnoise {

enum class TrialStatus { Ok, Failed };

struct TrialResult {
  std::string dataset;
  std::string method;
  std::string noise;  // NoiseTemplate descriptor
  double eta = 0.0;
  std::uint64_t seed = 0;
  TrialStatus status = TrialStatus::Ok;
  double test_accuracy = 0.0;
  std::optional<double> best_val_accuracy;  // absent for k-NN trials
  std::size_t epochs_run = 0;
  double wall_time = 0.0;  // seconds; kept out of results.csv
  std::string error;

  /// dataset|method|noise|eta|seed
  std::string key() const;
};

/// (dataset, method, noise, eta, seed) ordering.
bool canonical_less(const TrialResult& a, const TrialResult& b);
void canonical_sort(std::vector<TrialResult>& results);

/// Shortest decimal that round-trips the double.
std::string format_double(double v);

struct RunOptions {
  std::optional<std::size_t> parallelism;     // overrides the config
  std::optional<std::size_t> max_new_trials;  // stop launching after this many
  bool write_outputs = true;
};

struct RunOutcome {
  std::vector<TrialResult> results;  // canonical order, includes resumed trials
  std::size_t total_trials = 0;
  std::size_t resumed = 0;
  std::size_t executed = 0;
  std::size_t failed = 0;

  bool complete() const { return results.size() == total_trials && failed == 0; }
};

/// Prepared dataset plus its fixed split.
struct LoadedDataset {
  std::string name;
  EmbeddingDataset data;
  SplitSpec split;
};

/// Loads/generates every dataset, splits it, and checks every method and
/// noise template against it. Throws before any trial runs.
std::vector<LoadedDataset> prepare_datasets(const ExperimentConfig& cfg);

/// Runs one trial in the calling thread.
TrialResult run_trial(const ExperimentConfig& cfg, const LoadedDataset& dataset, const MethodSpec& method,
                      const NoiseTemplate& noise, double eta, std::uint64_t seed);

/// Executes the full dataset x method x noise x eta x seed grid. Completed
/// trials are appended to `<output_dir>/ledger.jsonl` as they finish and are
/// skipped when the run is resumed. Writes results.csv, summary.csv,
/// summary.txt and curves.csv at the end.
RunOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

std::string format_results_csv(const std::vector<TrialResult>& results);
std::vector<TrialResult> parse_results_csv(std::string_view text);

}  // namespace embnoise
