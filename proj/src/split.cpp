#include "embnoise/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "embnoise/error.hpp"
#include "embnoise/random.hpp"

namespace embnoise {

std::vector<std::size_t> apportion(std::size_t count, std::span<const double> fractions) {
  std::vector<std::size_t> out(fractions.size(), 0);
  std::vector<double> remainder(fractions.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < fractions.size(); ++j) {
    const double exact = static_cast<double>(count) * fractions[j];
    out[j] = static_cast<std::size_t>(std::floor(exact));
    remainder[j] = exact - static_cast<double>(out[j]);
    assigned += out[j];
  }
  // Floor rounding can at most leave fractions.size() - 1 items unassigned
  // (or overshoot by float error, which the clamp below absorbs).
  std::vector<std::size_t> order(fractions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t r = 0; assigned < count; r = (r + 1) % order.size()) {
    if (fractions[order[r]] > 0.0) {
      ++out[order[r]];
      ++assigned;
    }
  }
  while (assigned > count) {
    auto it = std::max_element(out.begin(), out.end());
    --*it;
    --assigned;
  }
  return out;
}

namespace {

void check_fractions(const SplitFractions& f) {
  const auto a = f.as_array();
  for (double x : a) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError("split fractions must be finite and >= 0");
  }
  if (std::abs(a[0] + a[1] + a[2] - 1.0) > 1e-9) throw ValidationError("split fractions must sum to 1");
  if (a[0] <= 0.0) throw ValidationError("train fraction must be positive");
}

}  // namespace

SplitSpec make_split(const EmbeddingDataset& dataset, const SplitFractions& fractions, std::uint64_t seed) {
  check_fractions(fractions);
  const auto fr = fractions.as_array();
  const auto nonzero = static_cast<std::size_t>(std::count_if(fr.begin(), fr.end(), [](double x) { return x > 0.0; }));

  std::vector<std::vector<std::size_t>> by_class(dataset.n_classes);
  for (std::size_t i = 0; i < dataset.n_samples; ++i) by_class.at(dataset.labels[i]).push_back(i);

  SplitSpec split;
  split.seed = seed;
  split.fractions = fractions;
  std::array<std::vector<std::size_t>*, 3> targets = {&split.train_idx, &split.val_idx, &split.test_idx};

  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < nonzero) {
      throw StratificationError("class " + std::to_string(c) + " has " + std::to_string(members.size()) +
                                " samples but " + std::to_string(nonzero) + " nonzero splits were requested");
    }
    CounterRng rng(derive_seed(seed, "split", c));
    shuffle(std::span<std::size_t>(members), rng);

    auto counts = apportion(members.size(), fr);
    // Every nonzero split gets at least one sample of each class.
    for (std::size_t j = 0; j < 3; ++j) {
      if (fr[j] > 0.0 && counts[j] == 0) {
        auto donor = std::max_element(counts.begin(), counts.end());
        --*donor;
        ++counts[j];
      }
    }
    std::size_t offset = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      targets[j]->insert(targets[j]->end(), members.begin() + static_cast<std::ptrdiff_t>(offset),
                         members.begin() + static_cast<std::ptrdiff_t>(offset + counts[j]));
      offset += counts[j];
    }
  }
  for (auto* t : targets) std::sort(t->begin(), t->end());
  return split;
}

std::vector<std::size_t> stratified_subsample(const EmbeddingDataset& dataset, std::span<const std::size_t> indices,
                                              double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("subsample fraction must be in (0, 1]");
  std::vector<std::vector<std::size_t>> by_class(dataset.n_classes);
  for (std::size_t i : indices) {
    if (i >= dataset.n_samples) throw ValidationError("index out of range");
    by_class[dataset.labels[i]].push_back(i);
  }
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    CounterRng rng(derive_seed(seed, "subsample", c));
    shuffle(std::span<std::size_t>(members), rng);
    auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    keep = std::clamp<std::size_t>(keep, 1, members.size());
    out.insert(out.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(keep));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void validate_split(const SplitSpec& split, std::size_t n_samples) {
  std::vector<char> seen(n_samples, 0);
  for (const auto* part : {&split.train_idx, &split.val_idx, &split.test_idx}) {
    for (std::size_t i : *part) {
      if (i >= n_samples) throw ValidationError("split index " + std::to_string(i) + " >= N");
      if (seen[i]) throw ValidationError("split index " + std::to_string(i) + " appears twice");
      seen[i] = 1;
    }
  }
}

}  // namespace embnoise
