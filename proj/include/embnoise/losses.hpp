#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embnoise/dataset.hpp"

namespace embnoise {

enum class LossKind { CCE, MAE, GCE, NCE, RCE, APL };

std::string_view to_string(LossKind kind);
LossKind loss_kind_from_string(std::string_view name);

struct LossSpec {
  LossKind kind = LossKind::CCE;
  double q = 0.7;       // GCE exponent, (0, 1]
  double alpha = 0.6;   // APL weight on NCE
  double beta = 0.4;    // APL weight on RCE
  double A = -4.0;      // RCE value substituted for log 0
  double prob_floor = 1e-7;

  void validate() const;
  /// Same floor, kind switched to CCE (used for warmup epochs).
  LossSpec as_cce() const;
};

// Per-row losses on a probability vector p (assumed on the simplex and
// strictly positive where a log is taken). `y` indexes p.
double cce(std::span<const double> p, std::size_t y);
double mae(std::span<const double> p, std::size_t y);
double gce(std::span<const double> p, std::size_t y, double q);
double nce(std::span<const double> p, std::size_t y);
double rce(std::span<const double> p, std::size_t y, double A);
double apl(std::span<const double> p, std::size_t y, double alpha, double beta, double A);

/// Clamps every entry to [floor, 1] and renormalizes the row.
std::vector<double> clamp_probs(std::span<const double> p, double floor);

/// Clamps p, then evaluates the loss selected by `spec`.
double loss_value(const LossSpec& spec, std::span<const double> p, std::size_t y);

/// Numerically stable softmax of one row.
std::vector<double> softmax(std::span<const double> scores);

struct LossBatch {
  std::size_t batch = 0;
  std::size_t classes = 0;
  std::vector<double> probs;        // batch x classes, raw softmax output
  std::vector<Label> targets;
  double value = 0.0;               // mean loss over the batch
  std::vector<double> grad_scores;  // d(mean loss) / d(scores), batch x classes
};

/// Softmax, clamp-and-renormalize, loss, and the analytic gradient with
/// respect to the pre-softmax scores. Coordinates held at the floor by the
/// clamp contribute no gradient through it.
LossBatch loss_and_grad(const LossSpec& spec, std::span<const double> scores, std::size_t batch, std::size_t classes,
                        std::span<const Label> targets);

}  // namespace embnoise
