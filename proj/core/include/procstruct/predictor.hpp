#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "procstruct/eventlog.hpp"
#include "procstruct/neural.hpp"

namespace procstruct {

/// Recurrent next-event predictor hyperparameters. The first five fields span
/// the tuning grid; the rest fix the training protocol.
struct PredictorConfig {
  bool use_embedding = false;
  std::size_t n_layers = 1;
  std::size_t hidden_size = 32;
  double l1_l2 = 0.001;  // used for both the L1 and the L2 coefficient
  double dropout = 0.4;
  std::size_t window = 10;
  std::size_t batch_size = 128;
  double lr_start = 0.005;
  double lr_decay = 0.5;
  std::size_t lr_patience = 10;
  std::size_t stop_patience = 30;
  std::size_t max_epochs = 600;
  std::uint64_t seed = 0;

  static const std::vector<std::size_t>& layer_domain();
  static const std::vector<std::size_t>& hidden_domain();
  static const std::vector<double>& l1_l2_domain();
  static const std::vector<double>& dropout_domain();

  /// Throws ConfigError when a grid field is outside its domain or the
  /// protocol fields are non-positive.
  void validate() const;

  /// Stable textual identity of the grid point, e.g. "emb0-l1-h32-r0.001-d0.4".
  std::string grid_key() const;

  friend bool operator==(const PredictorConfig&, const PredictorConfig&) = default;
};

enum class PredictorKind { kRecurrent, kMarkov };

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double val_accuracy = 0.0;
  double learning_rate = 0.0;
};

/// Count tables of an order-k next-token model. tables[j] maps a context of
/// exactly j tokens (oldest first, BOS included) to next-token counts.
struct MarkovTables {
  std::size_t order = 1;
  std::vector<std::map<std::vector<Token>, std::vector<std::uint64_t>>> tables;
};

struct TrainedPredictor {
  PredictorKind kind = PredictorKind::kRecurrent;
  Vocabulary vocabulary;
  std::variant<nn::NetworkParams, MarkovTables> model;
  PredictorConfig config;
  std::vector<EpochRecord> history;
};

/// Mini-batch Adam training with plateau learning-rate decay and early
/// stopping on validation accuracy; returns the best-validation weights.
/// Throws DivergenceError carrying the epoch on a non-finite loss.
TrainedPredictor train(const PredictorConfig& config, std::span<const PrefixSample> train_samples,
                       std::span<const PrefixSample> val_samples, const Vocabulary& vocab);

/// Fraction of samples whose most probable next token (BOS/PAD excluded) is the target.
double accuracy(const nn::NetworkParams& params, const Vocabulary& vocab,
                std::span<const PrefixSample> samples);

/// Full-context order: every context starting at BOS is kept.
inline constexpr std::size_t kFullContext = static_cast<std::size_t>(-1);

TrainedPredictor markov_baseline(const EventLog& train_log, std::size_t order,
                                 const Vocabulary& vocab);
TrainedPredictor markov_baseline(const EventLog& train_log, std::size_t order);

/// Distribution over the vocabulary for the next event after `prefix`
/// (labels, BOS implied). BOS and PAD always get probability 0.
std::vector<double> predict_next(const TrainedPredictor& p, std::span<const std::string> prefix);
std::vector<double> predict_next_tokens(const TrainedPredictor& p, std::span<const Token> history);

struct SimulationResult {
  EventLog log;
  std::vector<std::size_t> truncated;  // trace indices that hit max_len
  std::size_t empty = 0;               // traces that ended immediately
};

SimulationResult simulate_log(const TrainedPredictor& p, std::size_t n_traces, std::size_t max_len,
                              std::uint64_t seed);

/// Plain-text side report of a simulation (truncation and empty-trace counts).
std::string simulation_report(const SimulationResult& result);

// JSON checkpoint with vocabulary, config, history and the model's tensors or
// count tables. Doubles are written with round-trip precision.
void save_checkpoint(const TrainedPredictor& p, const std::filesystem::path& path);
TrainedPredictor load_checkpoint(const std::filesystem::path& path);
std::string checkpoint_to_json(const TrainedPredictor& p);
TrainedPredictor checkpoint_from_json(const std::string& text);

}  // namespace procstruct
