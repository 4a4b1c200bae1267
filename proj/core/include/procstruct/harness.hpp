#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "procstruct/eventlog.hpp"
#include "procstruct/metrics.hpp"
#include "procstruct/petrinet.hpp"
#include "procstruct/predictor.hpp"
#include "procstruct/split.hpp"

namespace procstruct {

enum class SplitMode { kLovocvExhaustive, kLovocvFolds, kLeaveFraction };

struct SplitSettings {
  SplitMode mode = SplitMode::kLovocvExhaustive;
  std::size_t k = 8;          // kLovocvFolds: number of single-variant folds
  double fraction = 0.2;      // kLeaveFraction
  std::size_t repeats = 3;    // kLeaveFraction

  /// Setting label used in aggregate.csv: "lovocv", "lovocv-k8", "leave-0.2-out".
  std::string name() const;
};

/// Hyperparameter grid; each list is one axis of the cartesian product.
struct PredictorGrid {
  std::vector<bool> use_embedding;
  std::vector<std::size_t> n_layers;
  std::vector<std::size_t> hidden_size;
  std::vector<double> l1_l2;
  std::vector<double> dropout;

  /// The full tuning grid (2 x 2 x 3 x 5 x 3 points).
  static PredictorGrid full();
  /// Points in nested axis order, the other fields copied from `base`.
  std::vector<PredictorConfig> expand(const PredictorConfig& base) const;
};

struct ExperimentSeeds {
  std::uint64_t playout = 1;
  std::uint64_t split = 2;
  std::uint64_t train = 3;
  std::uint64_t simulate = 4;
};

struct ExperimentConfig {
  std::optional<int> model;                      // benchmark model id
  std::optional<std::filesystem::path> net_file; // or a serialized net
  std::size_t n_traces = 12000;
  std::size_t max_marking_visits = 1000;          // play-out bound
  /// Folds draw test variants only from variants enumerable under this bound
  /// (defaults to 3 for model 6, unrestricted otherwise).
  std::optional<std::size_t> analysis_visit_bound;
  SplitSettings split;
  PredictorConfig predictor;
  /// When set, a Markov baseline of this order replaces the recurrent predictor.
  std::optional<std::size_t> baseline_order;
  std::optional<PredictorGrid> grid;
  double validation_fraction = 0.2;
  /// Simulation length cap; defaults to 100 for model 6, else twice the longest training trace.
  std::optional<std::size_t> sim_max_len;
  ExperimentSeeds seeds;
  std::filesystem::path output_dir = "results";

  /// 2,000 traces and eight single-variant folds.
  static ExperimentConfig desk();

  void validate() const;
  std::string model_name() const;
};

ExperimentConfig experiment_config_from_json(const std::string& text,
                                             ExperimentConfig base = ExperimentConfig::desk());
ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                        ExperimentConfig base = ExperimentConfig::desk());
std::string experiment_config_to_json(const ExperimentConfig& cfg);

/// Everything shared by the folds of one experiment.
struct ExperimentPlan {
  ExperimentConfig config;
  std::shared_ptr<const PetriNet> net;
  std::shared_ptr<const EventLog> log;
  Vocabulary vocabulary;
  std::vector<SplitSpec> folds;
  std::size_t window = 10;
};

ExperimentPlan plan_experiment(const ExperimentConfig& cfg);

struct FoldResult {
  std::size_t fold = 0;
  std::string test_variants;
  MetricsReport report;
  LogPartition partition;
  TrainedPredictor predictor;
  SimulationResult simulation;
};

/// Runs one fold; depends only on the plan and the fold index.
FoldResult run_fold(const ExperimentPlan& plan, std::size_t fold);

struct FoldRow {
  std::string model;
  std::string setting;
  std::size_t fold = 0;
  std::string test_variants;
  MetricsReport report;
};

struct FoldError {
  std::size_t fold = 0;
  std::string message;
};

struct AggregateRow {
  std::string model;
  std::string setting;
  std::size_t folds = 0;
  double fitness_mean = 0.0, fitness_std = 0.0;
  double precision_mean = 0.0, precision_std = 0.0;
  double generalisation_mean = 0.0, generalisation_std = 0.0;
};

/// Mean and population standard deviation per (model, setting), in first-seen order.
std::vector<AggregateRow> aggregate(const std::vector<FoldRow>& rows);

std::string folds_csv(const std::vector<FoldRow>& rows);
std::string aggregate_csv(const std::vector<AggregateRow>& rows);
std::string results_table_markdown(const std::vector<AggregateRow>& rows);

struct ExperimentResult {
  std::filesystem::path output_dir;
  std::vector<FoldRow> rows;
  std::vector<FoldError> errors;
  std::vector<AggregateRow> aggregate;
};

/// Relative output directories resolve against $PROCSTRUCT_OUTPUT_ROOT when set.
std::filesystem::path resolve_output_dir(const std::filesystem::path& dir);

/// Plays out the log, runs every fold and writes folds.csv, aggregate.csv,
/// table.md, config.json, splits.txt, log.txt and fold_<i>/ artifacts. Fold
/// failures are recorded in errors.csv and the remaining folds still run.
using FoldProgress = std::function<void(const FoldRow& row, std::size_t done, std::size_t total)>;
ExperimentResult run_experiment(const ExperimentConfig& cfg, const FoldProgress& progress = {});

struct GridEntry {
  PredictorConfig config;
  double fitness = 0.0;
  double precision = 0.0;
  double generalisation = 0.0;
  double score = 0.0;  // unweighted mean of the three fold-averaged metrics
  std::optional<std::string> failure;
};

/// Runs every grid point (in output_dir/<grid key>/) and ranks successful
/// points by score, descending, ties broken by grid key. Failed points are
/// returned after the ranking with `failure` set. Writes grid.csv.
std::vector<GridEntry> grid_search(const ExperimentConfig& cfg);

}  // namespace procstruct
