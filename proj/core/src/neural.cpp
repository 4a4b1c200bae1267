#include "procstruct/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "procstruct/error.hpp"
#include "procstruct/random.hpp"

namespace procstruct::nn {

using Eigen::Index;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;

std::size_t embedding_dim_for(std::size_t n) {
  std::size_t d = 1;
  while (d * d * d * d < n) ++d;
  return d;
}

namespace {

void fill_glorot(Mat& m, Index fan_in, Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
}

void validate_shape(const NetworkShape& s) {
  if (s.vocab_size < 2) throw Error("network vocabulary must hold at least two tokens");
  if (s.pad_token >= s.vocab_size) throw Error("PAD token outside the vocabulary");
  if (s.n_layers > 0 && s.hidden_size == 0) throw Error("hidden size must be positive");
  if (s.window == 0) throw Error("window must be positive");
}

}  // namespace

NetworkParams init_params(const NetworkShape& shape, std::uint64_t seed) {
  validate_shape(shape);
  Rng rng(seed);
  NetworkParams p;
  p.shape = shape;
  const auto V = static_cast<Index>(shape.vocab_size);
  const auto H = static_cast<Index>(shape.hidden_size);
  if (shape.embedding_dim) {
    const auto D = static_cast<Index>(shape.embedding_dim);
    p.embedding.resize(D, V);
    fill_glorot(p.embedding, V, D, rng);
  }
  Index in = static_cast<Index>(shape.input_dim());
  for (std::size_t l = 0; l < shape.n_layers; ++l) {
    LstmLayer layer;
    layer.w_input.resize(4 * H, in);
    fill_glorot(layer.w_input, in, 4 * H, rng);
    layer.w_recurrent.resize(4 * H, H);
    fill_glorot(layer.w_recurrent, H, 4 * H, rng);
    layer.bias = Vec::Zero(4 * H);
    layer.bias.segment(kForgetGate * H, H).setOnes();
    p.layers.push_back(std::move(layer));
    in = H;
  }
  const auto F = static_cast<Index>(shape.feature_dim());
  p.w_out.resize(V, F);
  fill_glorot(p.w_out, F, V, rng);
  p.b_out = Vec::Zero(V);
  return p;
}

NetworkParams zeros_like(const NetworkParams& params) {
  NetworkParams z = params;
  for (auto& t : tensors(z)) std::fill(t.values.begin(), t.values.end(), 0.0);
  return z;
}

std::vector<TensorView> tensors(NetworkParams& p) {
  std::vector<TensorView> out;
  auto add = [&](std::string name, auto& m, bool reg) {
    out.push_back({std::move(name), std::span<double>(m.data(), static_cast<std::size_t>(m.size())),
                   m.rows(), m.cols(), reg});
  };
  if (p.embedding.size()) add("embedding", p.embedding, true);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto tag = "lstm" + std::to_string(l) + ".";
    add(tag + "w_input", p.layers[l].w_input, true);
    add(tag + "w_recurrent", p.layers[l].w_recurrent, true);
    add(tag + "bias", p.layers[l].bias, false);
  }
  add("dense.w", p.w_out, true);
  add("dense.b", p.b_out, false);
  return out;
}

std::vector<ConstTensorView> tensors(const NetworkParams& p) {
  std::vector<ConstTensorView> out;
  for (auto& t : tensors(const_cast<NetworkParams&>(p)))
    out.push_back({std::move(t.name), std::span<const double>(t.values), t.rows, t.cols, t.regularized});
  return out;
}

std::size_t parameter_count(const NetworkParams& params) {
  std::size_t n = 0;
  for (const auto& t : tensors(params)) n += t.values.size();
  return n;
}

namespace {

Mat sigmoid(const Mat& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

struct LayerTape {
  std::vector<Mat> input;      // layer input per step (embedding / lower hidden); empty for one-hot
  std::vector<Mat> gates;      // 4H x B post-activation per step
  std::vector<Mat> cell;       // T + 1 entries, cell[t + 1] after step t
  std::vector<Mat> tanh_cell;  // per step
  std::vector<Mat> hidden;     // T + 1 entries
};

// Activations of one forward pass over `batch` windows, kept for backpropagation.
struct Tape {
  Index batch = 0;
  Index steps = 0;
  Index first = 0;  // first step with any non-PAD input
  std::span<const Token> tokens;  // batch x steps, window-major per sample
  std::vector<RowVec> active;     // per step: 1 for real tokens, 0 for PAD
  std::vector<LayerTape> layers;
  Mat features;      // feature_dim x B, after dropout
  Mat dropout_mask;  // scaled keep mask, empty when dropout is off
  Mat probs;         // vocab x B

  Token token(Index b, Index t) const { return tokens[static_cast<std::size_t>(b * steps + t)]; }
};

void run_forward(const NetworkParams& p, std::span<const Token> tokens, Index batch, Mode mode,
                 double dropout, std::uint64_t dropout_seed, Tape& tape) {
  const auto& s = p.shape;
  const auto T = static_cast<Index>(s.window);
  const auto V = static_cast<Index>(s.vocab_size);
  const auto pad = static_cast<Token>(s.pad_token);
  if (tokens.size() != static_cast<std::size_t>(batch * T))
    throw Error("prefix length " + std::to_string(tokens.size() / std::max<Index>(batch, 1)) +
                " does not match the network window " + std::to_string(T));
  for (auto tok : tokens)
    if (tok < 0 || tok >= V) throw Error("token index " + std::to_string(tok) + " out of vocabulary");

  tape.batch = batch;
  tape.steps = T;
  tape.tokens = tokens;
  tape.active.assign(static_cast<std::size_t>(T), RowVec::Zero(batch));
  tape.first = T;
  for (Index t = 0; t < T; ++t)
    for (Index b = 0; b < batch; ++b)
      if (tape.token(b, t) != pad) {
        tape.active[t](b) = 1.0;
        tape.first = std::min(tape.first, t);
      }

  // Embedded inputs for every step (zero columns at PAD).
  std::vector<Mat> embedded;
  if (s.embedding_dim) {
    embedded.assign(static_cast<std::size_t>(T), Mat());
    for (Index t = tape.first; t < T; ++t) {
      embedded[t] = Mat::Zero(static_cast<Index>(s.embedding_dim), batch);
      for (Index b = 0; b < batch; ++b)
        if (tape.active[t](b) != 0.0) embedded[t].col(b) = p.embedding.col(tape.token(b, t));
    }
  }

  tape.layers.assign(p.layers.size(), LayerTape{});
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    const auto H = layer.w_recurrent.cols();
    auto& lt = tape.layers[l];
    lt.input.assign(static_cast<std::size_t>(T), Mat());
    lt.gates.assign(static_cast<std::size_t>(T), Mat());
    lt.tanh_cell.assign(static_cast<std::size_t>(T), Mat());
    lt.cell.assign(static_cast<std::size_t>(T + 1), Mat());
    lt.hidden.assign(static_cast<std::size_t>(T + 1), Mat());
    lt.cell[tape.first] = Mat::Zero(H, batch);
    lt.hidden[tape.first] = Mat::Zero(H, batch);
    for (Index t = tape.first; t < T; ++t) {
      const Mat& h_prev = lt.hidden[t];
      const Mat& c_prev = lt.cell[t];
      Mat z = layer.w_recurrent * h_prev;
      z.colwise() += layer.bias;
      if (l == 0 && !s.embedding_dim) {
        for (Index b = 0; b < batch; ++b)
          if (tape.active[t](b) != 0.0) z.col(b) += layer.w_input.col(tape.token(b, t));
      } else {
        lt.input[t] = l == 0 ? embedded[t] : tape.layers[l - 1].hidden[t + 1];
        z.noalias() += layer.w_input * lt.input[t];
      }
      Mat gates(4 * H, batch);
      gates.topRows(2 * H) = sigmoid(z.topRows(2 * H));
      gates.middleRows(2 * H, H) = z.middleRows(2 * H, H).array().tanh().matrix();
      gates.bottomRows(H) = sigmoid(z.bottomRows(H));
      const auto i = gates.middleRows(kInputGate * H, H).array();
      const auto f = gates.middleRows(kForgetGate * H, H).array();
      const auto g = gates.middleRows(kCandidate * H, H).array();
      const auto o = gates.middleRows(kOutputGate * H, H).array();
      Mat c = (f * c_prev.array() + i * g).matrix();
      Mat tc = c.array().tanh().matrix();
      Mat h = (o * tc.array()).matrix();
      const auto& m = tape.active[t];
      for (Index b = 0; b < batch; ++b) {
        if (m(b) == 0.0) {
          c.col(b) = c_prev.col(b);
          h.col(b) = h_prev.col(b);
        }
      }
      lt.gates[t] = std::move(gates);
      lt.tanh_cell[t] = std::move(tc);
      lt.cell[t + 1] = std::move(c);
      lt.hidden[t + 1] = std::move(h);
    }
  }

  const auto F = static_cast<Index>(s.feature_dim());
  if (!p.layers.empty()) {
    tape.features = tape.first < T ? tape.layers.back().hidden[T] : Mat::Zero(F, batch);
  } else {
    // No recurrent layer: the head sees the last non-PAD input.
    tape.features = Mat::Zero(F, batch);
    for (Index b = 0; b < batch; ++b) {
      for (Index t = T - 1; t >= 0; --t) {
        const Token tok = tape.token(b, t);
        if (tok == pad) continue;
        if (s.embedding_dim)
          tape.features.col(b) = p.embedding.col(tok);
        else
          tape.features(tok, b) = 1.0;
        break;
      }
    }
  }

  tape.dropout_mask.resize(0, 0);
  if (mode == Mode::kTrain && dropout > 0.0) {
    if (dropout >= 1.0) throw Error("dropout rate must be below 1");
    Rng rng(dropout_seed);
    std::bernoulli_distribution keep(1.0 - dropout);
    const double scale = 1.0 / (1.0 - dropout);
    tape.dropout_mask.resize(F, batch);
    for (Index b = 0; b < batch; ++b)
      for (Index j = 0; j < F; ++j) tape.dropout_mask(j, b) = keep(rng) ? scale : 0.0;
    tape.features.array() *= tape.dropout_mask.array();
  }

  Mat logits = p.w_out * tape.features;
  logits.colwise() += p.b_out;
  const RowVec max = logits.colwise().maxCoeff();
  logits.rowwise() -= max;
  tape.probs = logits.array().exp().matrix();
  const RowVec sum = tape.probs.colwise().sum();
  tape.probs.array().rowwise() /= sum.array();
}

// Gradient of the mean cross-entropy of `targets` w.r.t. every parameter.
void run_backward(const NetworkParams& p, const Tape& tape, std::span<const Token> targets,
                  NetworkParams& grad) {
  const auto& s = p.shape;
  const Index B = tape.batch;
  const Index T = tape.steps;

  Mat d_logits = tape.probs;
  for (Index b = 0; b < B; ++b) d_logits(targets[b], b) -= 1.0;
  d_logits /= static_cast<double>(B);

  grad.w_out.noalias() = d_logits * tape.features.transpose();
  grad.b_out = d_logits.rowwise().sum();
  Mat d_features = p.w_out.transpose() * d_logits;
  if (tape.dropout_mask.size()) d_features.array() *= tape.dropout_mask.array();

  if (p.layers.empty()) {
    if (s.embedding_dim) {
      const auto pad = static_cast<Token>(s.pad_token);
      for (Index b = 0; b < B; ++b)
        for (Index t = T - 1; t >= 0; --t)
          if (tape.token(b, t) != pad) {
            grad.embedding.col(tape.token(b, t)) += d_features.col(b);
            break;
          }
    }
    return;
  }
  if (tape.first >= T) return;

  std::vector<Mat> d_from_above;
  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const auto& layer = p.layers[li];
    const auto& lt = tape.layers[li];
    auto& gl = grad.layers[li];
    const Index H = layer.w_recurrent.cols();
    const bool top = li + 1 == p.layers.size();
    const bool one_hot_input = li == 0 && !s.embedding_dim;
    std::vector<Mat> d_below(static_cast<std::size_t>(T));

    Mat dh_next = Mat::Zero(H, B);
    Mat dc_next = Mat::Zero(H, B);
    for (Index t = T - 1; t >= tape.first; --t) {
      Mat dh = dh_next;
      if (top) {
        if (t == T - 1) dh += d_features;
      } else {
        dh += d_from_above[t];
      }
      const auto& gates = lt.gates[t];
      const auto i = gates.middleRows(kInputGate * H, H).array();
      const auto f = gates.middleRows(kForgetGate * H, H).array();
      const auto g = gates.middleRows(kCandidate * H, H).array();
      const auto o = gates.middleRows(kOutputGate * H, H).array();
      const auto tc = lt.tanh_cell[t].array();
      const auto m = tape.active[t].array();
      const RowVec skip = (1.0 - m).matrix();

      const Mat dc = (dc_next.array() + dh.array() * o * (1.0 - tc.square())).matrix();
      Mat dz(4 * H, B);
      dz.middleRows(kInputGate * H, H) = (dc.array() * g * i * (1.0 - i)).matrix();
      dz.middleRows(kForgetGate * H, H) = (dc.array() * lt.cell[t].array() * f * (1.0 - f)).matrix();
      dz.middleRows(kCandidate * H, H) = (dc.array() * i * (1.0 - g.square())).matrix();
      dz.middleRows(kOutputGate * H, H) = (dh.array() * tc * o * (1.0 - o)).matrix();
      dz.array().rowwise() *= m;

      // Skipped (PAD) columns hand their state gradient straight to step t - 1.
      Mat dc_prev = (dc.array() * f).matrix();
      dc_prev.array().rowwise() *= m;
      dc_prev.array() += dc_next.array().rowwise() * skip.array();
      Mat dh_prev = layer.w_recurrent.transpose() * dz;
      dh_prev.array() += dh.array().rowwise() * skip.array();

      gl.w_recurrent.noalias() += dz * lt.hidden[t].transpose();
      gl.bias += dz.rowwise().sum();
      if (one_hot_input) {
        for (Index b = 0; b < B; ++b)
          if (m(b) != 0.0) gl.w_input.col(tape.token(b, t)) += dz.col(b);
      } else {
        gl.w_input.noalias() += dz * lt.input[t].transpose();
        d_below[t] = layer.w_input.transpose() * dz;
      }
      dh_next = std::move(dh_prev);
      dc_next = std::move(dc_prev);
    }

    if (li == 0 && s.embedding_dim) {
      for (Index t = tape.first; t < T; ++t)
        for (Index b = 0; b < B; ++b)
          if (tape.active[t](b) != 0.0) grad.embedding.col(tape.token(b, t)) += d_below[t].col(b);
    }
    d_from_above = std::move(d_below);
  }
}

void check_dropout(double dropout) {
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("dropout rate must lie in [0, 1)");
}

}  // namespace

Eigen::VectorXd forward(const NetworkParams& params, std::span<const Token> prefix, Mode mode,
                        double dropout, std::uint64_t dropout_seed) {
  check_dropout(dropout);
  Tape tape;
  run_forward(params, prefix, 1, mode, dropout, dropout_seed, tape);
  return tape.probs.col(0);
}

Eigen::MatrixXd forward_batch(const NetworkParams& params, std::span<const Token> windows,
                              std::size_t batch) {
  const std::size_t T = params.shape.window;
  if (windows.size() != batch * T) throw Error("batch windows do not match the network window");
  constexpr std::size_t kChunk = 512;
  Mat out(static_cast<Index>(params.shape.vocab_size), static_cast<Index>(batch));
  Tape tape;
  for (std::size_t start = 0; start < batch; start += kChunk) {
    const std::size_t n = std::min(kChunk, batch - start);
    run_forward(params, windows.subspan(start * T, n * T), static_cast<Index>(n), Mode::kInfer, 0.0,
                0, tape);
    out.middleCols(static_cast<Index>(start), static_cast<Index>(n)) = tape.probs;
  }
  return out;
}

double penalty(const NetworkParams& params, const RegularizationSpec& reg) {
  if (reg.l1 == 0.0 && reg.l2 == 0.0) return 0.0;
  double l1 = 0.0, l2 = 0.0;
  for (const auto& t : tensors(params)) {
    if (!t.regularized) continue;
    for (double w : t.values) {
      l1 += std::abs(w);
      l2 += w * w;
    }
  }
  return reg.l1 * l1 + reg.l2 * l2;
}

LossAndGradients loss_and_gradients(const NetworkParams& params,
                                    std::span<const PrefixSample> batch,
                                    const RegularizationSpec& reg, std::uint64_t dropout_seed) {
  if (batch.empty()) throw Error("loss needs a non-empty batch");
  if (reg.l1 < 0.0 || reg.l2 < 0.0) throw Error("regularization coefficients must be non-negative");
  check_dropout(reg.dropout);
  const std::size_t T = params.shape.window;
  std::vector<Token> tokens;
  std::vector<Token> targets;
  tokens.reserve(batch.size() * T);
  targets.reserve(batch.size());
  for (const auto& sample : batch) {
    if (sample.prefix.size() != T) throw Error("prefix length does not match the network window");
    tokens.insert(tokens.end(), sample.prefix.begin(), sample.prefix.end());
    if (sample.target < 0 || static_cast<std::size_t>(sample.target) >= params.shape.vocab_size)
      throw Error("target index out of vocabulary");
    targets.push_back(sample.target);
  }

  Tape tape;
  run_forward(params, tokens, static_cast<Index>(batch.size()), Mode::kTrain, reg.dropout,
              dropout_seed, tape);

  LossAndGradients out;
  double ce = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b)
    ce -= std::log(tape.probs(targets[b], static_cast<Index>(b)));
  out.cross_entropy = ce / static_cast<double>(batch.size());
  out.penalty = penalty(params, reg);
  out.loss = out.cross_entropy + out.penalty;
  if (!std::isfinite(out.loss)) throw DivergenceError(0, "non-finite loss");

  out.gradients = zeros_like(params);
  run_backward(params, tape, targets, out.gradients);

  if (reg.l1 != 0.0 || reg.l2 != 0.0) {
    auto grads = tensors(out.gradients);
    auto values = tensors(params);
    for (std::size_t k = 0; k < grads.size(); ++k) {
      if (!values[k].regularized) continue;
      for (std::size_t j = 0; j < grads[k].values.size(); ++j) {
        const double w = values[k].values[j];
        const double sign = (w > 0.0) - (w < 0.0);
        grads[k].values[j] += reg.l1 * sign + 2.0 * reg.l2 * w;
      }
    }
  }
  return out;
}

OptimizerState make_optimizer(std::span<const std::size_t> tensor_sizes, double learning_rate) {
  if (!(learning_rate > 0.0)) throw Error("learning rate must be positive");
  OptimizerState state;
  state.learning_rate = learning_rate;
  for (auto n : tensor_sizes) {
    state.first_moment.emplace_back(n, 0.0);
    state.second_moment.emplace_back(n, 0.0);
  }
  return state;
}

OptimizerState make_optimizer(const NetworkParams& params, double learning_rate) {
  std::vector<std::size_t> sizes;
  for (const auto& t : tensors(params)) sizes.push_back(t.values.size());
  return make_optimizer(sizes, learning_rate);
}

void adam_step(OptimizerState& state, std::span<const std::span<double>> params,
               std::span<const std::span<const double>> gradients) {
  if (params.size() != gradients.size() || params.size() != state.first_moment.size())
    throw Error("optimizer state does not match the parameter list");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    if (params[k].size() != m.size() || gradients[k].size() != m.size())
      throw Error("optimizer tensor size mismatch");
    for (std::size_t j = 0; j < m.size(); ++j) {
      const double g = gradients[k][j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      params[k][j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

void adam_step(OptimizerState& state, NetworkParams& params, const NetworkParams& gradients) {
  std::vector<std::span<double>> p;
  std::vector<std::span<const double>> g;
  for (auto& t : tensors(params)) p.push_back(t.values);
  for (const auto& t : tensors(gradients)) g.push_back(t.values);
  adam_step(state, p, g);
}

GradientCheckResult gradient_check(const NetworkParams& params,
                                   std::span<const PrefixSample> batch,
                                   const RegularizationSpec& reg, double epsilon,
                                   std::uint64_t seed, std::size_t samples) {
  if (reg.dropout != 0.0) throw Error("gradient check requires dropout to be disabled");
  if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
  const auto analytic = loss_and_gradients(params, batch, reg, 0).gradients;
  const auto grad_views = tensors(analytic);

  // Flat index -> (tensor, offset).
  std::vector<std::pair<std::size_t, std::size_t>> index;
  for (std::size_t k = 0; k < grad_views.size(); ++k)
    for (std::size_t j = 0; j < grad_views[k].values.size(); ++j) index.emplace_back(k, j);
  Rng rng(seed);
  std::shuffle(index.begin(), index.end(), rng);
  if (index.size() > samples) index.resize(samples);

  NetworkParams probe = params;
  auto probe_views = tensors(probe);
  GradientCheckResult result;
  for (const auto& [k, j] : index) {
    double& w = probe_views[k].values[j];
    const double saved = w;
    w = saved + epsilon;
    const double up = loss_and_gradients(probe, batch, reg, 0).loss;
    w = saved - epsilon;
    const double down = loss_and_gradients(probe, batch, reg, 0).loss;
    w = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double a = grad_views[k].values[j];
    const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), kGradientFloor});
    if (result.checked == 0 || err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_tensor = grad_views[k].name;
    }
    ++result.checked;
  }
  return result;
}

}  // namespace procstruct::nn
