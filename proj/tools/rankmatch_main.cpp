// Command-line harness: dataset synthesis, training, evaluation, gradient
// verification and the three-stage ablation, all reproducible per seed.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "rankmatch/core.hpp"
#include "rankmatch/dataio.hpp"
#include "rankmatch/metrics.hpp"
#include "rankmatch/model.hpp"
#include "rankmatch/text_format.hpp"
#include "rankmatch/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace rankmatch;

namespace {

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Err::IoError, "cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw Error(Err::IoError, "write failed for " + path.string());
}

ordered_json config_json(const TrainConfig& c) {
  ordered_json j;
  j["lambda"] = c.lambda;
  j["threshold_t"] = c.threshold_t;
  j["k_weak"] = c.k_weak;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["max_lr"] = c.max_lr;
  j["ema_decay"] = c.ema_decay;
  j["weak_sigma"] = c.weak_sigma;
  j["strong_sigma"] = c.strong_sigma;
  j["strong_dropout"] = c.strong_dropout;
  j["seed"] = c.seed;
  j["weight_decay"] = c.weight_decay;
  j["pld_from_ema"] = c.pld_from_ema;
  return j;
}

ordered_json metrics_json(const MetricsReport& m) {
  ordered_json j;
  j["chebyshev"] = m.chebyshev;
  j["clark"] = m.clark;
  j["canberra"] = m.canberra;
  j["kl"] = m.kl;
  j["intersection"] = m.intersection;
  j["cosine"] = m.cosine;
  j["sample_count"] = m.sample_count;
  return j;
}

ordered_json history_json(const TrainHistory& h) {
  ordered_json epochs = ordered_json::array();
  for (std::size_t e = 0; e < h.epoch_loss.size(); ++e) {
    const LossBreakdown& loss = h.epoch_loss[e];
    ordered_json row;
    row["epoch"] = e;
    row["supervised"] = loss.supervised;
    row["consistency"] = loss.consistency;
    row["prr_labeled"] = loss.prr_labeled;
    row["prr_unlabeled"] = loss.prr_unlabeled;
    row["total"] = loss.total;
    row["lr"] = h.epoch_lr[e];
    if (e < h.epoch_metrics.size()) row["metrics"] = metrics_json(h.epoch_metrics[e]);
    epochs.push_back(std::move(row));
  }
  return epochs;
}

struct TrainFlags {
  std::string labeled_path;
  std::string unlabeled_path;
  std::string test_path;
  std::string out_dir;
  TrainConfig config;
};

void add_train_options(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--labeled", f.labeled_path, "labeled training CSV")->required();
  cmd->add_option("--unlabeled", f.unlabeled_path, "unlabeled training CSV (optional)");
  cmd->add_option("--test", f.test_path, "held-out labeled CSV for metrics (optional)");
  cmd->add_option("--lambda", f.config.lambda, "ranking-loss weight");
  cmd->add_option("--threshold-t", f.config.threshold_t, "significant-pair gap threshold");
  cmd->add_option("--k-weak", f.config.k_weak, "weak views averaged per pseudo target");
  cmd->add_option("--epochs", f.config.epochs, "training epochs");
  cmd->add_option("--batch", f.config.batch_size, "minibatch size");
  cmd->add_option("--max-lr", f.config.max_lr, "one-cycle peak learning rate");
  cmd->add_option("--ema-decay", f.config.ema_decay, "shadow-model decay");
  cmd->add_option("--weak-sigma", f.config.weak_sigma, "weak jitter scale");
  cmd->add_option("--strong-sigma", f.config.strong_sigma, "strong jitter scale");
  cmd->add_option("--strong-dropout", f.config.strong_dropout, "strong coordinate-drop rate");
  cmd->add_option("--seed", f.config.seed, "base seed");
  cmd->add_option("--weight-decay", f.config.weight_decay, "decoupled weight decay");
  cmd->add_flag("--pld-from-ema", f.config.pld_from_ema,
                "build pseudo targets from the shadow model");
  cmd->add_option("--out", f.out_dir, "output directory")->required();
}

Dataset load_train_dataset(const TrainFlags& f) {
  std::vector<LabeledExample> labeled = load_labeled_csv(f.labeled_path);
  std::vector<UnlabeledExample> unlabeled;
  if (!f.unlabeled_path.empty()) unlabeled = load_unlabeled_csv(f.unlabeled_path);
  return Dataset::build(std::move(labeled), std::move(unlabeled));
}

std::optional<Dataset> load_test_dataset(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return Dataset::build(load_labeled_csv(path), {});
}

int cmd_synth(std::size_t n_labeled, std::size_t m_unlabeled, std::size_t n_test,
              std::size_t dim, std::size_t labels, double noise_alpha, std::uint64_t seed,
              const std::string& out_dir) {
  if (labels < 2) throw Error(Err::FlagError, "--labels must be >= 2");
  if (dim < 1) throw Error(Err::FlagError, "--dim must be >= 1");
  fs::create_directories(out_dir);
  const SynthResult synth =
      synth_generate(n_labeled, m_unlabeled, n_test, dim, labels, noise_alpha, seed);
  const fs::path dir(out_dir);
  save_labeled_csv(synth.train.labeled, dim, labels, (dir / "labeled.csv").string());
  save_unlabeled_csv(synth.train.unlabeled, dim, (dir / "unlabeled.csv").string());
  save_labeled_csv(synth.test.labeled, dim, labels, (dir / "test.csv").string());

  ordered_json manifest;
  manifest["command"] = "synth";
  manifest["generator"] = {{"n_labeled", n_labeled}, {"m_unlabeled", m_unlabeled},
                           {"n_test", n_test},       {"dim", dim},
                           {"labels", labels},       {"noise_alpha", noise_alpha},
                           {"seed", seed}};
  manifest["files"] = {{"labeled", "labeled.csv"},
                       {"unlabeled", "unlabeled.csv"},
                       {"test", "test.csv"}};
  write_text_file(dir / "manifest.json", json_to_string(manifest));
  std::cout << "wrote " << (dir / "manifest.json").string() << "\n";
  return 0;
}

int cmd_train(const TrainFlags& f) {
  f.config.validate();
  const Dataset data = load_train_dataset(f);
  const std::optional<Dataset> test = load_test_dataset(f.test_path);
  const TrainResult result = train(data, test, f.config);

  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);
  save_checkpoint(result.ema.shadow, (dir / "checkpoint.txt").string());
  save_checkpoint(result.params, (dir / "checkpoint_live.txt").string());

  ordered_json report;
  report["command"] = "train";
  report["config"] = config_json(f.config);
  report["data"] = {{"labeled", data.labeled.size()},
                    {"unlabeled", data.unlabeled.size()},
                    {"feature_dim", data.feature_dim},
                    {"num_labels", data.num_labels},
                    {"test", test ? test->labeled.size() : 0}};
  report["epochs"] = history_json(result.history);
  if (!result.history.epoch_metrics.empty()) {
    report["final_metrics"] = metrics_json(result.history.epoch_metrics.back());
  }
  write_text_file(dir / "report.json", json_to_string(report));
  std::cout << "wrote " << (dir / "report.json").string() << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& test_path,
             const std::string& out_path) {
  const ModelParams params = load_checkpoint(checkpoint_path);
  const std::vector<LabeledExample> test = load_labeled_csv(test_path);
  if (test.empty()) throw Error(Err::EmptyInput, "test set is empty");
  if (test.front().target.size() != params.num_labels ||
      test.front().features.dim() != params.input_dim) {
    throw Error(Err::ShapeMismatch, "checkpoint and test set shapes differ");
  }
  const MetricsReport report = evaluate_model(params, test);
  write_text_file(out_path, json_to_string(metrics_json(report)));
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_gradcheck(std::uint64_t seed, int trials, double tolerance, bool corrupt) {
  if (trials < 1) throw Error(Err::FlagError, "--trials must be >= 1");
  const double lambdas[] = {0.0, 0.01, 0.1};
  const double thresholds[] = {0.1, 0.2};
  bool all_pass = true;
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = make_stream(seed, Stream::GradCheck, static_cast<std::uint64_t>(trial));
    const std::size_t c = 2 + rng.next_index(7);     // 2..8
    const std::size_t dim = 3 + rng.next_index(14);  // 3..16
    const std::size_t n_lab = 1 + rng.next_index(8); // 1..8
    const std::size_t m_unl = rng.next_index(9);     // 0..8
    const double lambda = lambdas[rng.next_index(3)];
    const double t = thresholds[rng.next_index(2)];

    ModelParams params = init_params(dim, c, std::nullopt, rng.next_u64());
    // Spread the logits so predictions are not near-uniform.
    for (double& w : params.flat) w *= 3.0;

    auto random_simplex = [&rng](std::size_t k) {
      std::vector<double> v(k);
      double sum = 0.0;
      for (double& x : v) {
        x = -std::log(rng.next_open_unit());
        sum += x;
      }
      for (double& x : v) x /= sum;
      return LabelDistribution::validated(std::move(v));
    };
    auto random_features = [&rng](std::size_t k) {
      std::vector<double> v(k);
      for (double& x : v) x = rng.next_normal();
      return FeatureVector::of(std::move(v));
    };

    StepBatch batch;
    for (std::size_t i = 0; i < n_lab; ++i) {
      batch.labeled_inputs.push_back(random_features(dim));
      batch.targets.push_back(random_simplex(c));
    }
    for (std::size_t u = 0; u < m_unl; ++u) {
      batch.unlabeled_inputs.push_back(random_features(dim));
      batch.plds.push_back(random_simplex(c));
    }

    GradCheckReport report;
    if (corrupt) {
      GradientSet tampered = backward(params, batch, lambda, t).second;
      tampered.flat[0] += 0.5;
      report = check_gradients(params, batch, lambda, t, 1e-5, tolerance, &tampered);
    } else {
      report = check_gradients(params, batch, lambda, t, 1e-5, tolerance);
    }
    worst = std::max(worst, report.max_rel_err);
    all_pass = all_pass && report.pass;
    std::cout << "trial " << trial << ": c=" << c << " dim=" << dim << " n=" << n_lab
              << " m=" << m_unl << " lambda=" << format_double(lambda)
              << " t=" << format_double(t) << " max_rel_err=" << format_double(report.max_rel_err)
              << " compared=" << report.compared << " kink_skipped=" << report.skipped_kink
              << (report.pass ? " ok" : " FAIL") << "\n";
  }
  std::cout << (all_pass ? "gradcheck passed" : "gradcheck FAILED")
            << " (worst rel err " << format_double(worst) << ", tolerance "
            << format_double(tolerance) << ")\n";
  return all_pass ? 0 : 1;
}

int cmd_ablate(const TrainFlags& f, double label_fraction) {
  f.config.validate();
  if (f.test_path.empty()) throw Error(Err::FlagError, "--test is required for ablate");
  const std::vector<LabeledExample> full = load_labeled_csv(f.labeled_path);
  auto [labeled, unlabeled] = split_labeled_fraction(full, label_fraction, f.config.seed);
  const Dataset data = Dataset::build(std::move(labeled), std::move(unlabeled));
  const std::optional<Dataset> test = load_test_dataset(f.test_path);

  const auto stages = ablate(data, test, f.config);

  fs::create_directories(f.out_dir);
  const fs::path dir(f.out_dir);
  ordered_json report;
  report["command"] = "ablate";
  report["config"] = config_json(f.config);
  report["label_fraction"] = label_fraction;
  report["split"] = {{"labeled", data.labeled.size()}, {"unlabeled", data.unlabeled.size()}};
  ordered_json rows = ordered_json::array();
  for (const AblationStage& stage : stages) {
    ordered_json row;
    row["stage"] = stage.name;
    const auto& metrics = stage.result.history.epoch_metrics;
    if (!metrics.empty()) {
      const ordered_json final_metrics = metrics_json(metrics.back());
      for (const auto& [key, value] : final_metrics.items()) row[key] = value;
    }
    rows.push_back(std::move(row));
  }
  report["rows"] = std::move(rows);
  write_text_file(dir / "ablation.json", json_to_string(report));
  std::cout << "wrote " << (dir / "ablation.json").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semi-supervised label distribution learning workbench"};
  app.require_subcommand(1);

  // synth
  std::size_t n_labeled = 200;
  std::size_t m_unlabeled = 1800;
  std::size_t n_test = 500;
  std::size_t dim = 16;
  std::size_t labels = 6;
  double noise_alpha = 0.0;
  std::uint64_t synth_seed = 1;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--n-labeled", n_labeled, "labeled training examples");
  synth->add_option("--m-unlabeled", m_unlabeled, "unlabeled training examples");
  synth->add_option("--n-test", n_test, "test examples");
  synth->add_option("--dim", dim, "feature dimension");
  synth->add_option("--labels", labels, "label count");
  synth->add_option("--noise-alpha", noise_alpha,
                    "Dirichlet noise concentration (<= 0 disables)");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--out-dir", synth_out, "output directory")->required();

  // train
  TrainFlags train_flags;
  CLI::App* train_cmd = app.add_subcommand("train", "train on labeled + unlabeled CSVs");
  add_train_options(train_cmd, train_flags);

  // eval
  std::string eval_checkpoint;
  std::string eval_test;
  std::string eval_out;
  CLI::App* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a test CSV");
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--test", eval_test, "labeled test CSV")->required();
  eval_cmd->add_option("--out", eval_out, "metrics JSON path")->required();

  // gradcheck
  std::uint64_t gc_seed = 1;
  int gc_trials = 50;
  double gc_tolerance = 1e-4;
  bool gc_corrupt = false;
  CLI::App* gc_cmd =
      app.add_subcommand("gradcheck", "verify analytic gradients against central differences");
  gc_cmd->add_option("--seed", gc_seed, "trial seed");
  gc_cmd->add_option("--trials", gc_trials, "number of random instances");
  gc_cmd->add_option("--tolerance", gc_tolerance, "relative tolerance");
  gc_cmd->add_flag("--corrupt", gc_corrupt,
                   "tamper with the gradient under test (sensitivity hook)");

  // ablate
  TrainFlags ablate_flags;
  double label_fraction = 0.1;
  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "three-stage objective ablation on a labeled pool");
  add_train_options(ablate_cmd, ablate_flags);
  ablate_cmd->add_option("--label-fraction", label_fraction,
                         "fraction of the pool that keeps labels");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      return cmd_synth(n_labeled, m_unlabeled, n_test, dim, labels, noise_alpha, synth_seed,
                       synth_out);
    }
    if (train_cmd->parsed()) return cmd_train(train_flags);
    if (eval_cmd->parsed()) return cmd_eval(eval_checkpoint, eval_test, eval_out);
    if (gc_cmd->parsed()) return cmd_gradcheck(gc_seed, gc_trials, gc_tolerance, gc_corrupt);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_flags, label_fraction);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
