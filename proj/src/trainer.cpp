#include "embnoise/trainer.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "embnoise/error.hpp"
#include "embnoise/random.hpp"

namespace embnoise {

void TrainConfig::validate() const {
  if (!(lr_min >= 0.0) || !(lr_max > lr_min)) throw ValidationError("train: need lr_max > lr_min >= 0");
  if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (patience < 1) throw ValidationError("train: patience must be >= 1");
  if (epochs_max < 1) throw ValidationError("train: epochs_max must be >= 1");
  if (!(aug_sigma >= 0.0) || !std::isfinite(aug_sigma)) throw ValidationError("train: aug_sigma must be >= 0");
}

double cosine_lr(double t, double T, double lr_max, double lr_min) {
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * t / T));
}

std::string_view to_string(StopReason reason) {
  return reason == StopReason::EarlyStop ? "early-stop" : "max-epochs";
}

TrainResult train(const EmbeddingDataset& dataset, const SplitSpec& split, std::span<const Label> noisy_labels,
                  const LossSpec& loss, const TrainConfig& cfg) {
  return train(dataset, split, noisy_labels, loss, cfg,
               init_head(dataset.dim, dataset.n_classes, cfg.hidden, derive_seed(cfg.seed, "train.init")));
}

TrainResult train(const EmbeddingDataset& dataset, const SplitSpec& split, std::span<const Label> noisy_labels,
                  const LossSpec& loss, const TrainConfig& cfg, HeadModel initial) {
  cfg.validate();
  loss.validate();
  validate_split(split, dataset.n_samples);
  if (noisy_labels.size() != dataset.n_samples) throw ValidationError("train: noisy label count must equal N");
  if (initial.input_dim() != dataset.dim) {
    throw ValidationError("train: head expects dim " + std::to_string(initial.input_dim()) + ", dataset has " +
                          std::to_string(dataset.dim));
  }
  if (initial.n_classes() != dataset.n_classes) throw ValidationError("train: head output width must equal K");
  if (split.train_idx.empty() || split.val_idx.empty()) throw ValidationError("train: empty train or val split");
  for (Label y : noisy_labels) {
    if (y >= dataset.n_classes) throw ValidationError("train: noisy label out of range");
  }

  TrainResult result{std::move(initial), {}};
  HeadModel& head = result.head;
  TrainRecord& record = result.record;
  HeadModel best_head = head;
  double best_val = -1.0;
  std::size_t since_best = 0;

  std::vector<std::size_t> order(split.train_idx);
  std::vector<Label> targets;
  const LossSpec warmup_loss = loss.as_cce();
  record.stopped_reason = StopReason::MaxEpochs;

  for (std::size_t epoch = 0; epoch < cfg.epochs_max; ++epoch) {
    const double lr = cosine_lr(static_cast<double>(epoch), static_cast<double>(cfg.epochs_max), cfg.lr_max,
                                cfg.lr_min);
    const LossSpec& active = epoch < cfg.warmup_epochs ? warmup_loss : loss;

    if (cfg.shuffle) {
      CounterRng shuffle_rng(derive_seed(cfg.seed, "train.shuffle", epoch));
      shuffle(std::span<std::size_t>(order), shuffle_rng);
    }
    CounterRng aug_rng(derive_seed(cfg.seed, "train.augment", epoch));

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const auto idx = std::span<const std::size_t>(order).subspan(start, std::min(cfg.batch_size, order.size() - start));
      Eigen::MatrixXf batch = gather_batch(dataset, idx);
      if (cfg.aug_sigma > 0.0) {
        for (Eigen::Index b = 0; b < batch.cols(); ++b) {
          for (Eigen::Index j = 0; j < batch.rows(); ++j) {
            batch(j, b) += static_cast<float>(cfg.aug_sigma * aug_rng.normal());
          }
        }
      }
      targets.clear();
      for (std::size_t i : idx) targets.push_back(noisy_labels[i]);
      try {
        loss_sum += sgd_step(head, batch, targets, active, lr) * static_cast<double>(idx.size());
      } catch (const DivergenceError& e) {
        throw DivergenceError(epoch, batch_index,
                              std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                                  std::to_string(batch_index));
      }
    }

    const double val_acc = evaluate(head, dataset, split.val_idx, noisy_labels);
    record.epochs.push_back({epoch, lr, loss_sum / static_cast<double>(order.size()), val_acc});

    if (val_acc > best_val) {
      best_val = val_acc;
      record.best_epoch = epoch;
      best_head = head;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      record.stopped_reason = StopReason::EarlyStop;
      break;
    }
  }

  record.best_val_accuracy = best_val;
  head = std::move(best_head);
  record.test_accuracy = split.test_idx.empty() ? 0.0 : evaluate(head, dataset, split.test_idx, dataset.labels);
  return result;
}

}  // namespace embnoise
