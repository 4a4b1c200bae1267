// procstruct: play out benchmark nets, train next-event predictors and score
// the logs they simulate.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "procstruct/benchmarks.hpp"
#include "procstruct/error.hpp"
#include "procstruct/harness.hpp"
#include "procstruct/metrics.hpp"
#include "procstruct/petrinet.hpp"
#include "procstruct/predictor.hpp"
#include "procstruct/random.hpp"
#include "procstruct/split.hpp"

namespace fs = std::filesystem;
using namespace procstruct;

namespace {

struct NetSource {
  std::optional<int> model;
  std::optional<std::string> net_file;

  void add(CLI::App* app) {
    auto* m = app->add_option("--model", model, "Benchmark model id (1-6)")->check(CLI::Range(1, 6));
    auto* n = app->add_option("--net", net_file, "Petri net JSON file")->check(CLI::ExistingFile);
    m->excludes(n);
  }

  PetriNet load() const {
    if (model) return build_model(ModelId{*model});
    if (net_file) return read_net(*net_file);
    throw ConfigError("one of --model or --net is required");
  }
};

ExperimentConfig load_run_config(const std::string& config_path, const std::string& profile,
                                 const std::string& out) {
  ExperimentConfig base = profile == "full" ? ExperimentConfig{} : ExperimentConfig::desk();
  ExperimentConfig cfg = load_experiment_config(config_path, base);
  if (!out.empty()) cfg.output_dir = out;
  return cfg;
}

void print_report(const MetricsReport& r) {
  std::printf("fitness         %.6f\n", r.fitness);
  std::printf("precision       %.6f\n", r.precision);
  std::printf("generalisation  %.6f\n", r.generalisation);
  std::printf("sizes           tr=%zu te=%zu sim=%zu (correction %.6f)\n", r.size_tr, r.size_te,
              r.size_sim, r.correction);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark next-event predictors against known process models"};
  app.require_subcommand(1);

  // models
  std::string models_dir = "models";
  auto* models = app.add_subcommand("models", "Write the six benchmark nets and a manifest");
  models->add_option("--out", models_dir, "Output directory");

  // playout
  NetSource playout_net;
  PlayoutConfig playout_cfg;
  playout_cfg.n_traces = 12000;
  playout_cfg.max_marking_visits = 1000;
  std::string playout_out;
  auto* play = app.add_subcommand("playout", "Play out a net into an event log");
  playout_net.add(play);
  play->add_option("--traces", playout_cfg.n_traces, "Number of traces")->capture_default_str();
  play->add_option("--visits", playout_cfg.max_marking_visits, "Marking-visit bound per trace")
      ->capture_default_str();
  play->add_option("--seed", playout_cfg.seed, "Random seed")->capture_default_str();
  play->add_option("--out", playout_out, "Output log file")->required();

  // split
  std::string split_log, split_out, split_mode = "lovocv";
  double split_fraction = 0.2;
  std::size_t split_repeats = 1;
  std::uint64_t split_seed = 2;
  auto* split = app.add_subcommand("split", "Write a variant-level split manifest for a log");
  split->add_option("--log", split_log, "Event log")->required()->check(CLI::ExistingFile);
  split->add_option("--mode", split_mode, "lovocv or fraction")
      ->check(CLI::IsMember({"lovocv", "fraction"}))
      ->capture_default_str();
  split->add_option("--fraction", split_fraction, "Held-out variant fraction")->capture_default_str();
  split->add_option("--repeats", split_repeats, "Number of fraction splits")->capture_default_str();
  split->add_option("--seed", split_seed, "Random seed")->capture_default_str();
  split->add_option("--out", split_out, "Output manifest")->required();

  // train
  std::string train_log, train_out, train_config;
  std::optional<std::size_t> markov_order;
  bool markov_full = false;
  double val_fraction = 0.2;
  PredictorConfig pc;
  pc.seed = 3;
  auto* tr = app.add_subcommand("train", "Train a next-event predictor on a log");
  tr->add_option("--log", train_log, "Training log")->required()->check(CLI::ExistingFile);
  tr->add_option("--config", train_config, "Experiment config whose predictor section is used")
      ->check(CLI::ExistingFile);
  tr->add_flag("--embedding", pc.use_embedding, "Use a learned embedding");
  tr->add_option("--layers", pc.n_layers, "Recurrent layers")->capture_default_str();
  tr->add_option("--hidden", pc.hidden_size, "Hidden units per layer")->capture_default_str();
  tr->add_option("--reg", pc.l1_l2, "L1 and L2 coefficient")->capture_default_str();
  tr->add_option("--dropout", pc.dropout, "Dropout rate")->capture_default_str();
  tr->add_option("--window", pc.window, "Prefix window")->capture_default_str();
  tr->add_option("--batch", pc.batch_size, "Mini-batch size")->capture_default_str();
  tr->add_option("--lr", pc.lr_start, "Starting learning rate")->capture_default_str();
  tr->add_option("--lr-patience", pc.lr_patience, "Epochs without improvement before decay")
      ->capture_default_str();
  tr->add_option("--stop-patience", pc.stop_patience, "Epochs without improvement before stopping")
      ->capture_default_str();
  tr->add_option("--max-epochs", pc.max_epochs, "Epoch cap")->capture_default_str();
  tr->add_option("--seed", pc.seed, "Random seed")->capture_default_str();
  tr->add_option("--val-fraction", val_fraction, "Validation share of prefixes")->capture_default_str();
  auto* mo = tr->add_option("--markov", markov_order, "Train a Markov baseline of this order instead");
  tr->add_flag("--markov-full", markov_full, "Markov baseline over the full history")->excludes(mo);
  tr->add_option("--out", train_out, "Output checkpoint")->required();

  // simulate
  std::string sim_model, sim_out;
  std::size_t sim_traces = 12000, sim_max_len = 100;
  std::uint64_t sim_seed = 4;
  auto* sim = app.add_subcommand("simulate", "Sample a log from a trained predictor");
  sim->add_option("--checkpoint", sim_model, "Predictor checkpoint")->required()->check(CLI::ExistingFile);
  sim->add_option("--traces", sim_traces, "Number of traces")->capture_default_str();
  sim->add_option("--max-len", sim_max_len, "Truncation length")->capture_default_str();
  sim->add_option("--seed", sim_seed, "Random seed")->capture_default_str();
  sim->add_option("--out", sim_out, "Output log")->required();

  // evaluate
  std::string ev_sim, ev_train, ev_test;
  auto* ev = app.add_subcommand("evaluate", "Score a simulated log against a train/test split");
  ev->add_option("--sim", ev_sim, "Simulated log")->required()->check(CLI::ExistingFile);
  ev->add_option("--train", ev_train, "Training log")->required()->check(CLI::ExistingFile);
  ev->add_option("--test", ev_test, "Held-out log")->required()->check(CLI::ExistingFile);

  // run / grid
  std::string run_config, run_profile = "desk", run_out;
  auto* run = app.add_subcommand("run", "Run a full experiment from a config file");
  std::string grid_config, grid_profile = "desk", grid_out;
  auto* grid = app.add_subcommand("grid", "Run a hyperparameter grid from a config file");
  for (auto [cmd, cfg, profile, out] : {std::tuple{run, &run_config, &run_profile, &run_out},
                                        std::tuple{grid, &grid_config, &grid_profile, &grid_out}}) {
    cmd->add_option("--config", *cfg, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--profile", *profile, "Defaults for unset keys: desk or full")
        ->check(CLI::IsMember({"desk", "full"}))
        ->capture_default_str();
    cmd->add_option("--out", *out, "Output directory (overrides output_dir)");
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (*models) {
      export_models(models_dir);
      std::printf("wrote benchmark nets to %s\n", models_dir.c_str());
    } else if (*play) {
      const auto net = playout_net.load();
      const auto log = playout(net, playout_cfg);
      write_log(log, playout_out);
      std::printf("%zu traces, %zu variants -> %s\n", log.size(), variants(log).size(), playout_out.c_str());
    } else if (*split) {
      const auto log = read_log(split_log);
      std::vector<SplitSpec> specs;
      if (split_mode == "lovocv") {
        specs = lovocv_specs(log);
      } else {
        std::vector<Variant> all;
        for (const auto& [v, n] : variants(log)) all.push_back(v);
        for (std::size_t r = 0; r < split_repeats; ++r)
          specs.push_back(leave_fraction_out_spec(all, split_fraction, derive_seed(split_seed, r)));
      }
      write_split_manifest(specs, split_out);
      std::printf("%zu folds -> %s\n", specs.size(), split_out.c_str());
    } else if (*tr) {
      if (!train_config.empty()) {
        const auto cfg = load_experiment_config(train_config, ExperimentConfig::desk());
        const auto seed = pc.seed;
        pc = cfg.predictor;
        pc.seed = seed;
        val_fraction = cfg.validation_fraction;
        if (cfg.baseline_order && !markov_order && !markov_full) markov_order = cfg.baseline_order;
      }
      const auto log = read_log(train_log);
      TrainedPredictor p;
      if (markov_order || markov_full) {
        p = markov_baseline(log, markov_full ? kFullContext : *markov_order);
      } else {
        const auto vocab = build_vocabulary(log);
        auto split_samples = validation_split(prefixes(log, vocab, pc.window), val_fraction,
                                              derive_seed(pc.seed, 0x1000));
        p = train(pc, split_samples.train, split_samples.validation, vocab);
        if (!p.history.empty()) {
          const auto& last = p.history.back();
          std::printf("%zu epochs, last loss %.4f, val accuracy %.4f\n", p.history.size(), last.loss,
                      last.val_accuracy);
        }
      }
      save_checkpoint(p, train_out);
      std::printf("checkpoint -> %s\n", train_out.c_str());
    } else if (*sim) {
      const auto p = load_checkpoint(sim_model);
      const auto result = simulate_log(p, sim_traces, sim_max_len, sim_seed);
      write_log(result.log, sim_out);
      std::fputs(simulation_report(result).c_str(), stdout);
    } else if (*ev) {
      print_report(evaluate(read_log(ev_sim), read_log(ev_train), read_log(ev_test)));
    } else if (*run) {
      const auto cfg = load_run_config(run_config, run_profile, run_out);
      const auto result = run_experiment(cfg, [](const FoldRow& row, std::size_t done, std::size_t total) {
        std::printf("[%zu/%zu] fold %zu  fit %.3f  prec %.3f  gen %.3f\n", done, total, row.fold,
                    row.report.fitness, row.report.precision, row.report.generalisation);
        std::fflush(stdout);
      });
      std::fputs(results_table_markdown(result.aggregate).c_str(), stdout);
      std::printf("results -> %s\n", result.output_dir.string().c_str());
      for (const auto& e : result.errors) std::fprintf(stderr, "fold %zu failed: %s\n", e.fold, e.message.c_str());
      return result.errors.empty() ? 0 : 1;
    } else if (*grid) {
      auto cfg = load_run_config(grid_config, grid_profile, grid_out);
      if (!cfg.grid) cfg.grid = PredictorGrid::full();
      const auto entries = grid_search(cfg);
      int failures = 0;
      for (const auto& e : entries) {
        if (e.failure) {
          ++failures;
          std::printf("%-28s failed: %s\n", e.config.grid_key().c_str(), e.failure->c_str());
        } else {
          std::printf("%-28s score %.4f\n", e.config.grid_key().c_str(), e.score);
        }
      }
      return failures == 0 ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
