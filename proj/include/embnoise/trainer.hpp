#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "embnoise/dataset.hpp"
#include "embnoise/head.hpp"
#include "embnoise/losses.hpp"
#include "embnoise/split.hpp"

namespace embnoise {

struct TrainConfig {
  double lr_max = 5e-4;
  double lr_min = 0.0;
  std::size_t epochs_max = 200;
  std::size_t batch_size = 128;
  std::size_t patience = 20;
  std::size_t warmup_epochs = 5;  // CCE is used for epochs [0, warmup_epochs)
  double aug_sigma = 0.0;         // x' = x + sigma * N(0, I) per presentation
  std::uint64_t seed = 0;
  bool shuffle = true;
  std::vector<std::size_t> hidden = {512, 256, 128};

  void validate() const;
};

/// lr_min + (lr_max - lr_min) (1 + cos(pi t / T)) / 2
double cosine_lr(double t, double T, double lr_max, double lr_min);

enum class StopReason { EarlyStop, MaxEpochs };
std::string_view to_string(StopReason reason);

struct EpochMetrics {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;   // sample-weighted mean of pre-update batch losses
  double val_accuracy = 0.0; // against the (noisy) validation labels

  bool operator==(const EpochMetrics&) const = default;
};

struct TrainRecord {
  std::vector<EpochMetrics> epochs;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
  StopReason stopped_reason = StopReason::MaxEpochs;
  double test_accuracy = 0.0;  // best-epoch weights, clean labels

  bool operator==(const TrainRecord&) const = default;
};

struct TrainResult {
  HeadModel head;  // restored to the best epoch
  TrainRecord record;
};

/// Minibatch SGD on the train split with `noisy_labels` (indexed by dataset
/// row). Validation accuracy uses `noisy_labels` too; test accuracy always
/// uses the dataset's clean labels.
TrainResult train(const EmbeddingDataset& dataset, const SplitSpec& split, std::span<const Label> noisy_labels,
                  const LossSpec& loss, const TrainConfig& cfg);

/// Same, starting from a given head (its input width must equal dataset.dim).
TrainResult train(const EmbeddingDataset& dataset, const SplitSpec& split, std::span<const Label> noisy_labels,
                  const LossSpec& loss, const TrainConfig& cfg, HeadModel initial);

}  // namespace embnoise
