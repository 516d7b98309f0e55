// Command-line workbench: synthetic data, noise injection, single trials,
// k-NN probes, spectral reports and full sweeps.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "embnoise/config.hpp"
#include "embnoise/dataset.hpp"
#include "embnoise/error.hpp"
#include "embnoise/knn.hpp"
#include "embnoise/noise.hpp"
#include "embnoise/random.hpp"
#include "embnoise/runner.hpp"
#include "embnoise/spectral.hpp"
#include "embnoise/split.hpp"
#include "embnoise/summary.hpp"
#include "embnoise/synthetic.hpp"
#include "embnoise/trainer.hpp"

using namespace embnoise;
using nlohmann::json;

namespace {

constexpr const char* kParallelismEnv = "EMBNOISE_PARALLELISM";

struct NoiseOptions {
  std::vector<double> etas;
  std::string preset;
  std::string matrix_file;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--eta", etas, "Noise rate(s); uniform unless --preset/--matrix is given")->delimiter(',');
    cmd->add_option("--preset", preset, "Asymmetric preset: nct-crc, bach, lc25000");
    cmd->add_option("--matrix", matrix_file, "JSON file holding a K x K transition matrix");
  }

  NoiseTemplate to_template() const {
    json j;
    if (!preset.empty() && !matrix_file.empty()) throw ConfigError("give either --preset or --matrix");
    if (!preset.empty()) {
      j = {{"type", "asymmetric"}, {"preset", preset}};
    } else if (!matrix_file.empty()) {
      std::ifstream in(matrix_file);
      if (!in) throw IoError("cannot open " + matrix_file);
      j = {{"type", "asymmetric"}, {"matrix", json::parse(in)}};
    } else {
      j = {{"type", "uniform"}};
    }
    if (!etas.empty()) j["etas"] = etas;
    if (!j.contains("etas") && !j.contains("matrix")) j["etas"] = std::vector<double>{0.0};
    return noise_template_from_json(j);
  }
};

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

SplitFractions parse_fractions(const std::vector<double>& f) {
  if (f.size() != 3) throw ConfigError("--split takes three fractions: train,val,test");
  return {f[0], f[1], f[2]};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-noise experiments on frozen embeddings"};
  app.require_subcommand(1);

  // gen
  SyntheticSpec syn;
  std::string gen_out;
  bool gen_csv = false;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic embedding dataset");
  gen->add_option("--classes", syn.n_classes, "Number of classes K")->capture_default_str();
  gen->add_option("--dim", syn.dim, "Embedding dimension")->capture_default_str();
  gen->add_option("--per-class", syn.samples_per_class, "Samples per class")->capture_default_str();
  gen->add_option("--spread", syn.cluster_spread, "Within-class standard deviation")->capture_default_str();
  gen->add_option("--separation", syn.center_separation, "Distance between class means")->capture_default_str();
  gen->add_option("--seed", syn.seed, "Seed")->capture_default_str();
  gen->add_option("--name", syn.name, "Dataset name")->capture_default_str();
  gen->add_option("-o,--output", gen_out, "Output path (.emb1 or .csv)")->required();
  gen->add_flag("--csv", gen_csv, "Write CSV regardless of extension");

  // noise
  std::string noise_dataset, noise_out;
  std::uint64_t noise_seed = 0;
  NoiseOptions noise_opts;
  auto* noise = app.add_subcommand("noise", "Corrupt a dataset's labels; emits index,clean,noisy,flipped CSV");
  noise->add_option("-d,--dataset", noise_dataset, "EMB1 or CSV dataset")->required();
  noise_opts.add_to(noise);
  noise->add_option("--seed", noise_seed, "Seed")->capture_default_str();
  noise->add_option("-o,--output", noise_out, "Output CSV (default stdout)");

  // train
  std::string train_dataset, train_out, train_config_file;
  std::string loss_kind = "cce";
  LossSpec loss;
  TrainConfig tcfg;
  std::vector<double> train_split = {0.64, 0.16, 0.20};
  std::uint64_t split_seed = 0;
  NoiseOptions train_noise;
  std::uint64_t train_noise_seed = 0;
  auto* train_cmd = app.add_subcommand("train", "Train one classifier head; emits a JSON training record");
  train_cmd->add_option("-d,--dataset", train_dataset, "EMB1 or CSV dataset")->required();
  train_cmd->add_option("--config", train_config_file, "JSON file with optional 'loss' and 'train' objects");
  train_cmd->add_option("--loss", loss_kind, "cce|mae|gce|nce|rce|apl")->capture_default_str();
  train_cmd->add_option("--q", loss.q, "GCE exponent")->capture_default_str();
  train_cmd->add_option("--alpha", loss.alpha, "APL NCE weight")->capture_default_str();
  train_cmd->add_option("--beta", loss.beta, "APL RCE weight")->capture_default_str();
  train_cmd->add_option("--A", loss.A, "RCE log(0) substitute")->capture_default_str();
  train_cmd->add_option("--lr", tcfg.lr_max, "Peak learning rate")->capture_default_str();
  train_cmd->add_option("--lr-min", tcfg.lr_min, "Final learning rate")->capture_default_str();
  train_cmd->add_option("--epochs", tcfg.epochs_max, "Maximum epochs")->capture_default_str();
  train_cmd->add_option("--batch-size", tcfg.batch_size, "Minibatch size")->capture_default_str();
  train_cmd->add_option("--patience", tcfg.patience, "Early-stopping patience")->capture_default_str();
  train_cmd->add_option("--warmup", tcfg.warmup_epochs, "CCE warmup epochs")->capture_default_str();
  train_cmd->add_option("--sigma", tcfg.aug_sigma, "Gaussian augmentation scale")->capture_default_str();
  train_cmd->add_option("--hidden", tcfg.hidden, "Hidden widths (comma separated; 'none' for linear)")
      ->delimiter(',')
      ->transform([](std::string s) { return s == "none" ? std::string() : s; });
  train_cmd->add_option("--seed", tcfg.seed, "Training seed")->capture_default_str();
  train_cmd->add_option("--split", train_split, "train,val,test fractions")->delimiter(',');
  train_cmd->add_option("--split-seed", split_seed, "Split seed")->capture_default_str();
  train_noise.add_to(train_cmd);
  train_cmd->add_option("--noise-seed", train_noise_seed, "Noise seed")->capture_default_str();
  train_cmd->add_option("-o,--output", train_out, "Output JSON (default stdout)");

  // knn
  std::string knn_dataset, knn_out;
  KnnConfig kcfg;
  std::vector<std::uint64_t> knn_seeds = {0, 1, 2, 3};
  std::vector<double> knn_split = {0.64, 0.16, 0.20};
  std::string knn_metric = "euclidean";
  NoiseOptions knn_noise;
  auto* knn = app.add_subcommand("knn", "Few-shot k-NN probe; emits eta,seed,accuracy CSV rows");
  knn->add_option("-d,--dataset", knn_dataset, "EMB1 or CSV dataset")->required();
  knn_noise.add_to(knn);
  knn->add_option("-k", kcfg.k, "Neighbors")->capture_default_str();
  knn->add_option("--fraction", kcfg.subsample_fraction, "Train-split fraction used as support set")
      ->capture_default_str();
  knn->add_option("--metric", knn_metric, "euclidean|cosine")->capture_default_str();
  knn->add_option("--seeds", knn_seeds, "Seeds")->delimiter(',');
  knn->add_option("--split", knn_split, "train,val,test fractions")->delimiter(',');
  knn->add_option("--split-seed", split_seed, "Split seed")->capture_default_str();
  knn->add_option("-o,--output", knn_out, "Output CSV (default stdout)");

  // spectral
  std::string spec_dataset, spec_out, spec_dump;
  std::optional<std::size_t> spec_k;
  auto* spectral = app.add_subcommand("spectral", "Singular-value gap and label alignment report (JSON)");
  spectral->add_option("-d,--dataset", spec_dataset, "EMB1 or CSV dataset")->required();
  spectral->add_option("-k", spec_k, "Number of prominent directions (default: number of classes)");
  spectral->add_option("--dump", spec_dump, "Also write the embeddings and labels as CSV for plotting");
  spectral->add_option("-o,--output", spec_out, "Output JSON (default stdout)");

  // sweep
  std::string sweep_config, sweep_out_dir;
  std::optional<std::size_t> sweep_parallelism, sweep_max_trials;
  std::vector<std::uint64_t> sweep_seeds;
  auto* sweep = app.add_subcommand("sweep", "Run a full experiment grid from a JSON config");
  sweep->add_option("-c,--config", sweep_config, "Experiment config (JSON)")->required();
  sweep->add_option("-j,--parallelism", sweep_parallelism,
                    std::string("Concurrent trials (default: config, then $") + kParallelismEnv + ")");
  sweep->add_option("--output-dir", sweep_out_dir, "Override the config's output_dir");
  sweep->add_option("--seeds", sweep_seeds, "Override the config's seeds")->delimiter(',');
  sweep->add_option("--max-trials", sweep_max_trials, "Stop after this many new trials (resume later)");

  // validate
  std::string val_config, val_dataset;
  auto* validate = app.add_subcommand("validate", "Check a config (and its datasets) or a dataset file");
  validate->add_option("-c,--config", val_config, "Experiment config (JSON)");
  validate->add_option("-d,--dataset", val_dataset, "EMB1 or CSV dataset");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto d = gen_synthetic(syn);
      if (gen_csv || std::filesystem::path(gen_out).extension() == ".csv") {
        save_csv(d, gen_out);
      } else {
        save_emb1(d, gen_out);
      }
      std::cerr << "wrote " << d.n_samples << " x " << d.dim << " (K=" << d.n_classes << ") to " << gen_out << '\n';
      return 0;
    }

    if (*noise) {
      const auto d = load_dataset(noise_dataset);
      const auto tmpl = noise_opts.to_template();
      if (tmpl.etas.size() != 1) throw ConfigError("noise takes a single --eta");
      const auto noisy = inject(d.labels, d.n_classes, tmpl.instantiate(tmpl.etas.front(), noise_seed));
      write_output(noise_out, format_noise_csv(d.labels, noisy));
      return 0;
    }

    if (*train_cmd) {
      const auto d = load_dataset(train_dataset);
      loss.kind = loss_kind_from_string(loss_kind);
      if (!train_config_file.empty()) {
        std::ifstream in(train_config_file);
        if (!in) throw IoError("cannot open " + train_config_file);
        const json j = json::parse(in);
        if (j.contains("loss")) loss = loss_spec_from_json(j.at("loss"));
        if (j.contains("train")) tcfg = train_config_from_json(j.at("train"), tcfg);
      }
      loss.validate();
      const auto split = make_split(d, parse_fractions(train_split), split_seed);
      const auto tmpl = train_noise.to_template();
      if (tmpl.etas.size() != 1) throw ConfigError("train takes a single --eta");
      auto noisy = inject(d.labels, d.n_classes, tmpl.instantiate(tmpl.etas.front(), train_noise_seed));
      for (std::size_t i : split.test_idx) noisy[i] = d.labels[i];
      const auto result = train(d, split, noisy, loss, tcfg);
      json out = to_json(result.record);
      out["loss"] = to_json(loss);
      out["config"] = to_json(tcfg);
      out["noise"] = tmpl.descriptor();
      out["eta"] = tmpl.etas.front();
      write_output(train_out, out.dump(2) + "\n");
      return 0;
    }

    if (*knn) {
      const auto d = load_dataset(knn_dataset);
      if (knn_metric == "cosine") {
        kcfg.metric = KnnMetric::Cosine;
      } else if (knn_metric != "euclidean") {
        throw ConfigError("--metric must be euclidean or cosine");
      }
      const auto split = make_split(d, parse_fractions(knn_split), split_seed);
      const auto tmpl = knn_noise.to_template();
      std::string out = "eta,seed,accuracy\n";
      for (double eta : tmpl.etas) {
        for (std::uint64_t seed : knn_seeds) {
          KnnConfig c = kcfg;
          c.seed = derive_seed(seed, "cli.knn");
          const double acc = knn_experiment(d, split, tmpl.instantiate(eta, derive_seed(seed, "cli.noise")), c);
          out += format_double(eta) + ',' + std::to_string(seed) + ',' + format_double(acc) + '\n';
        }
      }
      write_output(knn_out, out);
      return 0;
    }

    if (*spectral) {
      const auto d = load_dataset(spec_dataset);
      const auto report = spectral_report(d, spec_k.value_or(d.n_classes));
      if (!spec_dump.empty()) save_csv(d, spec_dump);
      write_output(spec_out, to_json(report).dump(2) + "\n");
      return 0;
    }

    if (*sweep) {
      auto cfg = load_experiment_config(sweep_config);
      if (!sweep_out_dir.empty()) cfg.output_dir = sweep_out_dir;
      if (!sweep_seeds.empty()) cfg.seeds = sweep_seeds;
      RunOptions opts;
      opts.max_new_trials = sweep_max_trials;
      if (sweep_parallelism) {
        opts.parallelism = sweep_parallelism;
      } else if (const char* env = std::getenv(kParallelismEnv); env != nullptr && !std::string_view(env).empty()) {
        opts.parallelism = std::stoul(env);
      }
      const auto outcome = run_experiment(cfg, opts);
      std::cerr << "trials: " << outcome.results.size() << "/" << outcome.total_trials << " (resumed "
                << outcome.resumed << ", ran " << outcome.executed << ", failed " << outcome.failed << ")\n";
      std::cout << format_summary_table(summarize(outcome.results, cfg.seeds.size()));
      return outcome.complete() ? 0 : 1;
    }

    if (*validate) {
      if (val_config.empty() && val_dataset.empty()) throw ConfigError("validate needs --config and/or --dataset");
      if (!val_dataset.empty()) {
        const auto d = load_dataset(val_dataset);
        std::cout << "dataset ok: " << d.name << " N=" << d.n_samples << " d=" << d.dim << " K=" << d.n_classes << '\n';
      }
      if (!val_config.empty()) {
        const auto cfg = load_experiment_config(val_config);
        const auto loaded = prepare_datasets(cfg);
        std::size_t trials = 0;
        for (const auto& n : cfg.noise_grid) trials += n.etas.size();
        trials *= cfg.datasets.size() * cfg.methods.size() * cfg.seeds.size();
        std::cout << "config ok: " << loaded.size() << " dataset(s), " << cfg.methods.size() << " method(s), "
                  << trials << " trial(s)\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
