#include "embnoise/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "embnoise/error.hpp"
#include "embnoise/random.hpp"

namespace embnoise {

namespace {

constexpr double kRowSumTolerance = 1e-9;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_labels(std::span<const Label> labels, std::size_t k) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= k) {
      throw ValidationError("label " + std::to_string(labels[i]) + " at " + std::to_string(i) + " is not < K");
    }
  }
}

}  // namespace

TransitionMatrix TransitionMatrix::identity(std::size_t k) {
  TransitionMatrix t;
  t.k = k;
  t.rows.assign(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) t.rows[i * k + i] = 1.0;
  return t;
}

TransitionMatrix TransitionMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  TransitionMatrix t;
  t.k = rows.size();
  for (const auto& r : rows) {
    if (r.size() != rows.size()) throw ValidationError("transition matrix must be square");
    t.rows.insert(t.rows.end(), r.begin(), r.end());
  }
  t.validate();
  return t;
}

void TransitionMatrix::validate() const {
  if (k < 2) throw ValidationError("transition matrix needs K >= 2");
  if (rows.size() != k * k) throw ValidationError("transition matrix must be K x K");
  for (std::size_t i = 0; i < k; ++i) {
    double sum = 0.0;
    for (double v : row(i)) {
      if (!std::isfinite(v) || v < 0.0) throw ValidationError("transition matrix entries must be finite and >= 0");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw ValidationError("transition matrix row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
}

double NoiseSpec::eta() const {
  return std::visit(overloaded{[](const UniformNoise& u) { return u.eta; },
                               [](const AsymmetricNoise& a) { return a.eta; }},
                    variant);
}

std::string NoiseSpec::descriptor() const {
  return std::visit(overloaded{[](const UniformNoise&) { return std::string("uniform"); },
                               [](const AsymmetricNoise& a) {
                                 return "asym:" + a.matrix.preset_name.value_or("custom");
                               }},
                    variant);
}

double max_uniform_eta(std::size_t k) { return static_cast<double>(k - 1) / static_cast<double>(k); }

std::vector<Label> inject_uniform(std::span<const Label> labels, std::size_t k, double eta, std::uint64_t seed) {
  if (k < 2) throw ValidationError("uniform noise needs K >= 2");
  if (!(eta >= 0.0)) throw ValidationError("noise rate must be >= 0");
  if (eta > max_uniform_eta(k)) {
    throw NoiseRateError("uniform noise rate " + std::to_string(eta) + " exceeds (K-1)/K = " +
                         std::to_string(max_uniform_eta(k)));
  }
  check_labels(labels, k);

  std::vector<Label> noisy(labels.begin(), labels.end());
  if (eta == 0.0) return noisy;
  const std::uint64_t key = derive_seed(seed, "noise.uniform");
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    CounterRng rng(key, i);
    if (rng.uniform() < eta) {
      const auto r = static_cast<Label>(rng.below(k - 1));
      noisy[i] = r < labels[i] ? r : static_cast<Label>(r + 1);
    }
  }
  return noisy;
}

std::vector<Label> inject_asymmetric(std::span<const Label> labels, const TransitionMatrix& matrix,
                                     std::uint64_t seed) {
  matrix.validate();
  const std::size_t k = matrix.k;
  check_labels(labels, k);

  std::vector<double> cumulative(k * k);
  std::vector<std::size_t> last_positive(k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      acc += matrix.at(i, j);
      cumulative[i * k + j] = acc;
      if (matrix.at(i, j) > 0.0) last_positive[i] = j;
    }
  }

  const std::uint64_t key = derive_seed(seed, "noise.asymmetric");
  std::vector<Label> noisy(labels.size());
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const std::size_t y = labels[n];
    CounterRng rng(key, n);
    const double u = rng.uniform();
    const auto cum = std::span<const double>(cumulative).subspan(y * k, k);
    // First j with u < cum[j]; zero-mass entries repeat the previous bound and
    // are therefore never selected.
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    std::size_t j = it == cum.end() ? last_positive[y] : static_cast<std::size_t>(it - cum.begin());
    noisy[n] = static_cast<Label>(j);
  }
  return noisy;
}

void validate_noise(const NoiseSpec& spec, std::size_t k) {
  std::visit(overloaded{[&](const UniformNoise& u) {
                          if (!(u.eta >= 0.0)) throw ValidationError("noise rate must be >= 0");
                          if (u.eta > max_uniform_eta(k)) {
                            throw NoiseRateError("uniform noise rate " + std::to_string(u.eta) +
                                                 " exceeds (K-1)/K for K=" + std::to_string(k));
                          }
                        },
                        [&](const AsymmetricNoise& a) {
                          a.matrix.validate();
                          if (a.matrix.k != k) {
                            throw ValidationError("transition matrix is " + std::to_string(a.matrix.k) +
                                                  "x" + std::to_string(a.matrix.k) + " but K=" + std::to_string(k));
                          }
                          for (std::size_t i = 0; i < k; ++i) {
                            if (std::abs(a.matrix.at(i, i) - (1.0 - a.eta)) > kRowSumTolerance) {
                              throw ValidationError("transition matrix diagonal must equal 1 - eta");
                            }
                          }
                        }},
             spec.variant);
}

std::vector<Label> inject(std::span<const Label> labels, std::size_t k, const NoiseSpec& spec) {
  validate_noise(spec, k);
  return std::visit(overloaded{[&](const UniformNoise& u) { return inject_uniform(labels, k, u.eta, spec.seed); },
                               [&](const AsymmetricNoise& a) { return inject_asymmetric(labels, a.matrix, spec.seed); }},
                    spec.variant);
}

namespace {

// Off-diagonal mass as a fraction of eta: 1 -> eta, 2 -> eta/2, 3 -> eta/3.
// 0 means no transition. The diagonal is always 1 - eta.
struct PresetTable {
  std::string_view name;
  std::vector<std::string> classes;
  std::vector<std::vector<int>> divisors;
};

const std::vector<PresetTable>& preset_tables() {
  static const std::vector<PresetTable> tables = {
      {"nct-crc",
       {"ADI", "BACK", "DEB", "LYM", "MUC", "MUS", "NORM", "STR", "TUM"},
       {
           {0, 0, 0, 0, 0, 2, 2, 0, 0},  // ADI
           {0, 0, 3, 3, 3, 0, 0, 0, 0},  // BACK
           {0, 3, 0, 3, 3, 0, 0, 0, 0},  // DEB
           {0, 3, 3, 0, 3, 0, 0, 0, 0},  // LYM
           {0, 3, 3, 3, 0, 0, 0, 0, 0},  // MUC
           {2, 0, 0, 0, 0, 0, 2, 0, 0},  // MUS
           {2, 0, 0, 0, 0, 2, 0, 0, 0},  // NORM
           {0, 0, 0, 0, 0, 0, 0, 0, 1},  // STR
           {0, 0, 0, 0, 0, 0, 0, 1, 0},  // TUM
       }},
      {"bach",
       {"Benign", "CIS", "CI", "Normal"},
       {
           {0, 1, 0, 0},
           {2, 0, 2, 0},
           {0, 2, 0, 2},
           {0, 0, 1, 0},
       }},
      {"lc25000",
       {"ColonACA", "BenignColon", "LungACA", "BenignLung", "LungSCC"},
       {
           {0, 2, 2, 0, 0},
           {2, 0, 0, 2, 0},
           {2, 0, 0, 0, 2},
           {0, 1, 0, 0, 0},
           {0, 0, 1, 0, 0},
       }},
  };
  return tables;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& t : preset_tables()) names.emplace_back(t.name);
  return names;
}

TransitionMatrix preset_matrix(std::string_view name, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ValidationError("preset eta must lie in [0, 1]");
  const auto& tables = preset_tables();
  const auto it = std::find_if(tables.begin(), tables.end(), [&](const PresetTable& t) { return t.name == name; });
  if (it == tables.end()) throw ValidationError("unknown transition preset '" + std::string(name) + "'");

  TransitionMatrix t;
  t.k = it->classes.size();
  t.preset_name = std::string(name);
  t.class_names = it->classes;
  t.rows.assign(t.k * t.k, 0.0);
  for (std::size_t i = 0; i < t.k; ++i) {
    for (std::size_t j = 0; j < t.k; ++j) {
      const int div = it->divisors[i][j];
      t.rows[i * t.k + j] = i == j ? 1.0 - eta : (div == 0 ? 0.0 : eta / div);
    }
  }
  return t;
}

std::vector<bool> flip_mask(std::span<const Label> clean, std::span<const Label> noisy) {
  if (clean.size() != noisy.size()) throw ValidationError("flip_mask: length mismatch");
  std::vector<bool> mask(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) mask[i] = clean[i] != noisy[i];
  return mask;
}

std::string format_noise_csv(std::span<const Label> clean, std::span<const Label> noisy) {
  const auto mask = flip_mask(clean, noisy);
  std::string out = "index,clean,noisy,flipped\n";
  for (std::size_t i = 0; i < clean.size(); ++i) {
    out += std::to_string(i) + ',' + std::to_string(clean[i]) + ',' + std::to_string(noisy[i]) + ',' +
           (mask[i] ? '1' : '0') + '\n';
  }
  return out;
}

}  // namespace embnoise
