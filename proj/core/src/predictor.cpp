#include "procstruct/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "procstruct/error.hpp"
#include "procstruct/random.hpp"

namespace procstruct {

namespace {

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

template <class T>
bool in_domain(const std::vector<T>& domain, T v) {
  return std::find(domain.begin(), domain.end(), v) != domain.end();
}

}  // namespace

const std::vector<std::size_t>& PredictorConfig::layer_domain() {
  static const std::vector<std::size_t> d{1, 2};
  return d;
}
const std::vector<std::size_t>& PredictorConfig::hidden_domain() {
  static const std::vector<std::size_t> d{16, 32, 64};
  return d;
}
const std::vector<double>& PredictorConfig::l1_l2_domain() {
  static const std::vector<double> d{0.0, 1e-5, 1e-4, 1e-3, 1e-2};
  return d;
}
const std::vector<double>& PredictorConfig::dropout_domain() {
  static const std::vector<double> d{0.0, 0.2, 0.4};
  return d;
}

void PredictorConfig::validate() const {
  if (!in_domain(layer_domain(), n_layers)) throw ConfigError("n_layers must be 1 or 2");
  if (!in_domain(hidden_domain(), hidden_size)) throw ConfigError("hidden_size must be 16, 32 or 64");
  if (!in_domain(l1_l2_domain(), l1_l2))
    throw ConfigError("l1_l2 must be one of 0, 1e-5, 1e-4, 1e-3, 1e-2");
  if (!in_domain(dropout_domain(), dropout)) throw ConfigError("dropout must be 0, 0.2 or 0.4");
  if (window == 0) throw ConfigError("window must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(lr_start > 0.0)) throw ConfigError("lr_start must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr_decay must lie in (0, 1]");
  if (lr_patience == 0 || stop_patience == 0) throw ConfigError("patience values must be positive");
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
}

std::string PredictorConfig::grid_key() const {
  return "emb" + std::to_string(use_embedding ? 1 : 0) + "-l" + std::to_string(n_layers) + "-h" +
         std::to_string(hidden_size) + "-r" + format_g(l1_l2) + "-d" + format_g(dropout);
}

namespace {

// Column-major window tokens of a sample list, for batched inference.
std::vector<Token> flatten_windows(std::span<const PrefixSample> samples) {
  std::vector<Token> tokens;
  for (const auto& s : samples) tokens.insert(tokens.end(), s.prefix.begin(), s.prefix.end());
  return tokens;
}

Token best_token(const Eigen::Ref<const Eigen::VectorXd>& probs, const Vocabulary& vocab) {
  Token best = 0;
  double best_p = -1.0;
  for (Token t = 0; t < static_cast<Token>(probs.size()); ++t) {
    if (t == vocab.bos() || t == vocab.pad()) continue;
    if (probs(t) > best_p) {
      best_p = probs(t);
      best = t;
    }
  }
  return best;
}

}  // namespace

double accuracy(const nn::NetworkParams& params, const Vocabulary& vocab,
                std::span<const PrefixSample> samples) {
  if (samples.empty()) return 0.0;
  const auto probs = nn::forward_batch(params, flatten_windows(samples), samples.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (best_token(probs.col(static_cast<Eigen::Index>(i)), vocab) == samples[i].target) ++hits;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

TrainedPredictor train(const PredictorConfig& config, std::span<const PrefixSample> train_samples,
                       std::span<const PrefixSample> val_samples, const Vocabulary& vocab) {
  config.validate();
  if (train_samples.empty() || val_samples.empty())
    throw Error("training needs non-empty training and validation samples");

  nn::NetworkShape shape;
  shape.vocab_size = vocab.size();
  shape.pad_token = static_cast<std::size_t>(vocab.pad());
  shape.embedding_dim = config.use_embedding ? nn::embedding_dim_for(vocab.activity_count()) : 0;
  shape.n_layers = config.n_layers;
  shape.hidden_size = config.hidden_size;
  shape.window = config.window;

  Rng rng(config.seed);
  auto params = nn::init_params(shape, rng());
  auto optimizer = nn::make_optimizer(params, config.lr_start);
  const nn::RegularizationSpec reg{config.l1_l2, config.l1_l2, config.dropout};

  TrainedPredictor out;
  out.kind = PredictorKind::kRecurrent;
  out.vocabulary = vocab;
  out.config = config;

  nn::NetworkParams best = params;
  double best_acc = -1.0;
  std::size_t since_best = 0;
  std::size_t since_lr_change = 0;

  std::vector<std::size_t> order(train_samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<PrefixSample> batch;
  batch.reserve(config.batch_size);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(train_samples[order[k]]);
      nn::LossAndGradients step;
      try {
        step = nn::loss_and_gradients(params, batch, reg, rng());
      } catch (const DivergenceError& e) {
        throw DivergenceError(epoch, "non-finite training loss");
      }
      nn::adam_step(optimizer, params, step.gradients);
      loss_sum += step.loss * static_cast<double>(batch.size());
    }
    const double epoch_loss = loss_sum / static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss)) throw DivergenceError(epoch, "non-finite epoch loss");

    const double acc = accuracy(params, vocab, val_samples);
    out.history.push_back({epoch, epoch_loss, acc, optimizer.learning_rate});

    // Patience only resets on a strict gain; a tie still moves the kept
    // weights forward to the later, lower-loss epoch.
    if (acc > best_acc) {
      best_acc = acc;
      best = params;
      since_best = 0;
      since_lr_change = 0;
    } else {
      if (acc == best_acc) best = params;
      ++since_best;
      ++since_lr_change;
    }
    if (since_best >= config.stop_patience) break;
    if (since_lr_change >= config.lr_patience) {
      optimizer.learning_rate *= config.lr_decay;
      since_lr_change = 0;
    }
  }
  out.model = std::move(best);
  return out;
}

TrainedPredictor markov_baseline(const EventLog& train_log, std::size_t order,
                                 const Vocabulary& vocab) {
  if (train_log.empty()) throw Error("Markov baseline needs a non-empty log");
  if (order == 0) throw Error("Markov order must be positive");
  MarkovTables tables;
  tables.order = order;
  std::size_t longest = 0;
  for (const auto& t : train_log.traces) longest = std::max(longest, t.size());
  // A context never holds more than BOS plus the whole trace.
  const std::size_t max_ctx = std::min(order, longest + 1);
  tables.tables.resize(max_ctx + 1);

  std::vector<Token> seq;
  for (const auto& trace : train_log.traces) {
    seq.assign(1, vocab.bos());
    for (const auto& l : trace) seq.push_back(vocab.index_of(l));
    seq.push_back(vocab.eos());
    for (std::size_t q = 1; q < seq.size(); ++q) {
      for (std::size_t j = 0; j <= std::min(max_ctx, q); ++j) {
        std::vector<Token> ctx(seq.begin() + static_cast<std::ptrdiff_t>(q - j),
                               seq.begin() + static_cast<std::ptrdiff_t>(q));
        auto& counts = tables.tables[j][ctx];
        if (counts.empty()) counts.assign(vocab.size(), 0);
        ++counts[static_cast<std::size_t>(seq[q])];
      }
    }
  }
  TrainedPredictor out;
  out.kind = PredictorKind::kMarkov;
  out.vocabulary = vocab;
  out.model = std::move(tables);
  return out;
}

TrainedPredictor markov_baseline(const EventLog& train_log, std::size_t order) {
  return markov_baseline(train_log, order, build_vocabulary(train_log));
}

namespace {

std::vector<double> markov_predict(const MarkovTables& m, const Vocabulary& vocab,
                                   std::span<const Token> history) {
  std::vector<Token> seq;
  seq.reserve(history.size() + 1);
  seq.push_back(vocab.bos());
  seq.insert(seq.end(), history.begin(), history.end());
  const std::size_t top = std::min(m.tables.size() - 1, seq.size());
  for (std::size_t j = top + 1; j-- > 0;) {
    std::vector<Token> ctx(seq.end() - static_cast<std::ptrdiff_t>(j), seq.end());
    auto it = m.tables[j].find(ctx);
    if (it == m.tables[j].end()) continue;
    const auto total = std::accumulate(it->second.begin(), it->second.end(), std::uint64_t{0});
    std::vector<double> probs(vocab.size(), 0.0);
    for (std::size_t k = 0; k < probs.size(); ++k)
      probs[k] = static_cast<double>(it->second[k]) / static_cast<double>(total);
    return probs;
  }
  throw Error("Markov model has no unigram table");
}

}  // namespace

std::vector<double> predict_next_tokens(const TrainedPredictor& p, std::span<const Token> history) {
  const auto& vocab = p.vocabulary;
  for (auto t : history)
    if (!vocab.is_activity(t)) throw Error("prefix contains a non-activity token");
  std::vector<double> probs;
  if (const auto* params = std::get_if<nn::NetworkParams>(&p.model)) {
    const std::size_t window = params->shape.window;
    std::vector<Token> tokens(window, vocab.pad());
    std::vector<Token> seq{vocab.bos()};
    seq.insert(seq.end(), history.begin(), history.end());
    const std::size_t keep = std::min(window, seq.size());
    std::copy(seq.end() - static_cast<std::ptrdiff_t>(keep), seq.end(),
              tokens.end() - static_cast<std::ptrdiff_t>(keep));
    const Eigen::VectorXd out = nn::forward(*params, tokens, nn::Mode::kInfer);
    probs.assign(out.data(), out.data() + out.size());
  } else {
    probs = markov_predict(std::get<MarkovTables>(p.model), vocab, history);
  }
  probs[static_cast<std::size_t>(vocab.bos())] = 0.0;
  probs[static_cast<std::size_t>(vocab.pad())] = 0.0;
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (!(total > 0.0)) throw Error("predictor assigns no mass to activities or EOS");
  for (auto& v : probs) v /= total;
  return probs;
}

std::vector<double> predict_next(const TrainedPredictor& p, std::span<const std::string> prefix) {
  std::vector<Token> history;
  history.reserve(prefix.size());
  for (const auto& label : prefix) history.push_back(p.vocabulary.index_of(label));
  return predict_next_tokens(p, history);
}

SimulationResult simulate_log(const TrainedPredictor& p, std::size_t n_traces, std::size_t max_len,
                              std::uint64_t seed) {
  if (n_traces == 0) throw Error("simulation needs n_traces >= 1");
  if (max_len == 0) throw Error("simulation needs max_len >= 1");
  const auto& vocab = p.vocabulary;
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SimulationResult out;
  out.log.traces.reserve(n_traces);
  std::vector<Token> history;
  for (std::size_t i = 0; i < n_traces; ++i) {
    history.clear();
    while (true) {
      if (history.size() >= max_len) {
        out.truncated.push_back(i);
        break;
      }
      const auto probs = predict_next_tokens(p, history);
      const double u = unit(rng);
      double cum = 0.0;
      Token next = vocab.eos();
      for (std::size_t k = 0; k < probs.size(); ++k) {
        if (probs[k] <= 0.0) continue;
        cum += probs[k];
        next = static_cast<Token>(k);
        if (u < cum) break;
      }
      if (next == vocab.eos()) break;
      history.push_back(next);
    }
    Trace trace;
    trace.reserve(history.size());
    for (auto t : history) trace.emplace_back(vocab.label(t));
    if (trace.empty()) ++out.empty;
    out.log.traces.push_back(std::move(trace));
  }
  return out;
}

std::string simulation_report(const SimulationResult& result) {
  std::ostringstream os;
  os << "traces " << result.log.size() << '\n';
  os << "truncated " << result.truncated.size() << '\n';
  os << "empty " << result.empty << '\n';
  return os.str();
}

}  // namespace procstruct
