#include "embnoise/runner.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "embnoise/error.hpp"
#include "embnoise/random.hpp"
#include "embnoise/summary.hpp"

namespace embnoise {

using nlohmann::json;

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string TrialResult::key() const {
  return dataset + "|" + method + "|" + noise + "|" + format_double(eta) + "|" + std::to_string(seed);
}

bool canonical_less(const TrialResult& a, const TrialResult& b) {
  return std::tie(a.dataset, a.method, a.noise, a.eta, a.seed) < std::tie(b.dataset, b.method, b.noise, b.eta, b.seed);
}

void canonical_sort(std::vector<TrialResult>& results) {
  std::sort(results.begin(), results.end(), canonical_less);
}

namespace {

std::uint64_t trial_stream(const ExperimentConfig& cfg, const std::string& tag, std::uint64_t seed) {
  return derive_seed(cfg.seed, tag, seed);
}

json result_to_json(const TrialResult& r) {
  json j = {{"dataset", r.dataset},
            {"method", r.method},
            {"noise", r.noise},
            {"eta", r.eta},
            {"seed", r.seed},
            {"status", r.status == TrialStatus::Ok ? "ok" : "failed"},
            {"test_accuracy", r.test_accuracy},
            {"epochs_run", r.epochs_run},
            {"wall_time", r.wall_time},
            {"error", r.error}};
  if (r.best_val_accuracy) j["best_val_accuracy"] = *r.best_val_accuracy;
  return j;
}

TrialResult result_from_json(const json& j) {
  TrialResult r;
  r.dataset = j.at("dataset").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.noise = j.at("noise").get<std::string>();
  r.eta = j.at("eta").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.status = j.at("status").get<std::string>() == "ok" ? TrialStatus::Ok : TrialStatus::Failed;
  r.test_accuracy = j.at("test_accuracy").get<double>();
  if (j.contains("best_val_accuracy")) r.best_val_accuracy = j.at("best_val_accuracy").get<double>();
  r.epochs_run = j.at("epochs_run").get<std::size_t>();
  r.wall_time = j.value("wall_time", 0.0);
  r.error = j.value("error", "");
  return r;
}

std::map<std::string, TrialResult> read_ledger(const std::filesystem::path& path) {
  std::map<std::string, TrialResult> done;
  std::ifstream in(path);
  std::string line;
  bool torn = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    // A crash can leave a torn final line; anything unparsable is re-run.
    try {
      auto r = result_from_json(json::parse(line));
      done.insert_or_assign(r.key(), std::move(r));
    } catch (const json::exception&) {
      torn = true;
    }
  }
  in.close();
  if (torn) {
    // Rewrite without the damaged records so appends start on a fresh line.
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
      std::ofstream out(tmp, std::ios::trunc);
      for (const auto& [key, r] : done) out << result_to_json(r).dump() << '\n';
      if (!out) throw IoError("cannot rewrite ledger " + path.string());
    }
    std::filesystem::rename(tmp, path);
  }
  return done;
}

struct TrialSpec {
  std::size_t dataset;
  std::size_t method;
  std::size_t noise;
  double eta;
  std::uint64_t seed;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::vector<LoadedDataset> prepare_datasets(const ExperimentConfig& cfg) {
  if (cfg.datasets.empty()) throw ConfigError("no datasets configured");
  if (cfg.methods.empty()) throw ConfigError("no methods configured");
  if (cfg.noise_grid.empty()) throw ConfigError("empty noise grid");
  if (cfg.seeds.empty()) throw ConfigError("no seeds configured");

  std::vector<LoadedDataset> out;
  for (const auto& src : cfg.datasets) {
    LoadedDataset ld;
    ld.name = src.name;
    try {
      ld.data = src.synthetic ? gen_synthetic(*src.synthetic) : load_dataset(*src.path);
      ld.data.validate();
      ld.split = make_split(ld.data, cfg.split, trial_stream(cfg, "split|" + src.name, 0));
    } catch (const Error& e) {
      throw ConfigError("dataset '" + src.name + "': " + e.what());
    }
    const std::size_t k = ld.data.n_classes;
    for (const auto& tmpl : cfg.noise_grid) {
      for (double eta : tmpl.etas) {
        const NoiseSpec spec = [&] {
          try {
            return tmpl.instantiate(eta, 0);
          } catch (const ValidationError& e) {
            throw ConfigError("noise " + tmpl.descriptor() + ": " + e.what());
          }
        }();
        try {
          validate_noise(spec, k);
        } catch (const NoiseRateError&) {
          throw;
        } catch (const Error& e) {
          throw ConfigError("dataset '" + src.name + "', noise " + tmpl.descriptor() + " eta=" + format_double(eta) +
                            ": " + e.what());
        }
      }
    }
    for (const auto& m : cfg.methods) {
      if (!m.is_knn()) continue;
      const auto support = stratified_subsample(ld.data, ld.split.train_idx, m.knn->subsample_fraction, 0);
      if (m.knn->k > support.size()) {
        throw ConfigError("method '" + m.label + "': k exceeds the subsample size " + std::to_string(support.size()) +
                          " of dataset '" + src.name + "'");
      }
    }
    out.push_back(std::move(ld));
  }
  return out;
}

TrialResult run_trial(const ExperimentConfig& cfg, const LoadedDataset& dataset, const MethodSpec& method,
                      const NoiseTemplate& noise, double eta, std::uint64_t seed) {
  TrialResult r;
  r.dataset = dataset.name;
  r.method = method.label;
  r.noise = noise.descriptor();
  r.eta = eta;
  r.seed = seed;
  const auto started = std::chrono::steady_clock::now();

  // Streams exclude the method (all methods see the same corrupted labels) and
  // eta (flips are nested across rates and training draws are shared).
  const std::string cell = dataset.name + "|" + r.noise;
  const NoiseSpec noise_spec = noise.instantiate(eta, trial_stream(cfg, "noise|" + cell, seed));
  const std::uint64_t method_seed = trial_stream(cfg, "method|" + method.label + "|" + cell, seed);

  try {
    if (method.is_knn()) {
      KnnConfig kc = *method.knn;
      kc.seed = method_seed;
      r.test_accuracy = knn_experiment(dataset.data, dataset.split, noise_spec, kc);
    } else {
      auto noisy = inject(dataset.data.labels, dataset.data.n_classes, noise_spec);
      for (std::size_t i : dataset.split.test_idx) noisy[i] = dataset.data.labels[i];
      const auto flipped = flip_mask(dataset.data.labels, noisy);
      for (std::size_t i : dataset.split.test_idx) {
        if (flipped[i]) throw std::logic_error("test labels must stay clean");
      }
      TrainConfig tc = method.train;
      tc.seed = method_seed;
      const auto trained = train(dataset.data, dataset.split, noisy, *method.loss, tc);
      r.test_accuracy = trained.record.test_accuracy;
      r.best_val_accuracy = trained.record.best_val_accuracy;
      r.epochs_run = trained.record.epochs.size();
    }
  } catch (const DivergenceError& e) {
    r.status = TrialStatus::Failed;
    r.error = e.what();
  }
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return r;
}

RunOutcome run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  const auto datasets = prepare_datasets(cfg);

  std::vector<TrialSpec> grid;
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d) {
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      for (std::size_t n = 0; n < cfg.noise_grid.size(); ++n) {
        for (double eta : cfg.noise_grid[n].etas) {
          for (std::uint64_t seed : cfg.seeds) grid.push_back({d, m, n, eta, seed});
        }
      }
    }
  }

  auto key_of = [&](const TrialSpec& t) {
    TrialResult probe;
    probe.dataset = cfg.datasets[t.dataset].name;
    probe.method = cfg.methods[t.method].label;
    probe.noise = cfg.noise_grid[t.noise].descriptor();
    probe.eta = t.eta;
    probe.seed = t.seed;
    return probe.key();
  };

  std::filesystem::create_directories(cfg.output_dir);
  const auto ledger_path = cfg.output_dir / "ledger.jsonl";
  auto done = read_ledger(ledger_path);

  RunOutcome outcome;
  outcome.total_trials = grid.size();
  std::vector<TrialSpec> pending;
  for (const auto& t : grid) {
    const auto key = key_of(t);
    if (auto it = done.find(key); it != done.end()) {
      outcome.results.push_back(it->second);
      ++outcome.resumed;
    } else {
      pending.push_back(t);
    }
  }
  if (options.max_new_trials && pending.size() > *options.max_new_trials) pending.resize(*options.max_new_trials);

  std::ofstream ledger(ledger_path, std::ios::app);
  if (!ledger) throw IoError("cannot open ledger " + ledger_path.string());
  std::mutex ledger_mutex;
  std::vector<TrialResult> fresh(pending.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= pending.size()) return;
      const auto& t = pending[i];
      try {
        fresh[i] = run_trial(cfg, datasets[t.dataset], cfg.methods[t.method], cfg.noise_grid[t.noise], t.eta, t.seed);
      } catch (const std::exception& e) {
        fresh[i] = TrialResult{};
        fresh[i].dataset = cfg.datasets[t.dataset].name;
        fresh[i].method = cfg.methods[t.method].label;
        fresh[i].noise = cfg.noise_grid[t.noise].descriptor();
        fresh[i].eta = t.eta;
        fresh[i].seed = t.seed;
        fresh[i].status = TrialStatus::Failed;
        fresh[i].error = e.what();
      }
      std::lock_guard lock(ledger_mutex);
      try {
        ledger << result_to_json(fresh[i]).dump() << '\n';
        ledger.flush();
        if (!ledger) throw IoError("ledger write failed");
      } catch (...) {
        if (!fatal) fatal = std::current_exception();
        next.store(pending.size());
        return;
      }
    }
  };

  const std::size_t threads = std::max<std::size_t>(
      1, std::min(options.parallelism.value_or(cfg.parallelism), std::max<std::size_t>(pending.size(), 1)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  outcome.executed = fresh.size();
  outcome.results.insert(outcome.results.end(), fresh.begin(), fresh.end());
  canonical_sort(outcome.results);
  outcome.failed = static_cast<std::size_t>(std::count_if(outcome.results.begin(), outcome.results.end(),
                                                          [](const TrialResult& r) { return r.status != TrialStatus::Ok; }));

  if (options.write_outputs) {
    const auto summary = summarize(outcome.results, cfg.seeds.size());
    write_text(cfg.output_dir / "results.csv", format_results_csv(outcome.results));
    write_text(cfg.output_dir / "summary.csv", format_summary_csv(summary));
    write_text(cfg.output_dir / "summary.txt", format_summary_table(summary));
    write_text(cfg.output_dir / "curves.csv", format_curves_csv(curve_export(outcome.results)));
  }
  return outcome;
}

std::string format_results_csv(const std::vector<TrialResult>& results) {
  std::string out = "dataset,method,noise,eta,seed,status,test_accuracy,best_val_accuracy,epochs_run\n";
  for (const auto& r : results) {
    out += r.dataset + ',' + r.method + ',' + r.noise + ',' + format_double(r.eta) + ',' + std::to_string(r.seed) + ',' +
           (r.status == TrialStatus::Ok ? "ok" : "failed") + ',' + format_double(r.test_accuracy) + ',' +
           (r.best_val_accuracy ? format_double(*r.best_val_accuracy) : "") + ',' + std::to_string(r.epochs_run) + '\n';
  }
  return out;
}

std::vector<TrialResult> parse_results_csv(std::string_view text) {
  std::vector<TrialResult> out;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw FormatError("results.csv: empty");
  auto parse_d = [](const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw FormatError("results.csv: bad number '" + s + "'");
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 9) throw FormatError("results.csv: expected 9 columns");
    TrialResult r;
    r.dataset = f[0];
    r.method = f[1];
    r.noise = f[2];
    r.eta = parse_d(f[3]);
    r.seed = std::stoull(f[4]);
    r.status = f[5] == "ok" ? TrialStatus::Ok : TrialStatus::Failed;
    r.test_accuracy = parse_d(f[6]);
    if (!f[7].empty()) r.best_val_accuracy = parse_d(f[7]);
    r.epochs_run = std::stoull(f[8]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace embnoise
