#pragma once

// embedding -> recurrent cell -> dense(relu) -> sigmoid|softmax head, with
// the matching losses, a hand-written backward pass and SGD/RMSProp/Adam.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "seqtext/cells.hpp"
#include "seqtext/embedding.hpp"
#include "seqtext/errors.hpp"
#include "seqtext/numeric.hpp"
#include "seqtext/random.hpp"
#include "seqtext/text.hpp"

namespace seqtext {

enum class CellKind { Rnn, Gru, Lstm };
enum class HeadKind { Sigmoid, Softmax };
enum class LossKind { BinaryCrossEntropy, CategoricalCrossEntropy, SparseCategoricalCrossEntropy, MeanSquaredError };

using CellParams = std::variant<RnnParams, LstmParams, GruParams>;

inline constexpr double kProbClamp = 1e-12;

// Everything needed to allocate a model; weights come from init or a checkpoint.
struct ModelSpec {
  std::size_t vocab_size = 10000;
  std::size_t embedding_dim = 16;
  CellKind cell = CellKind::Gru;
  std::size_t hidden_size = 16;
  std::size_t dense_size = 8;
  HeadKind head = HeadKind::Sigmoid;
  std::size_t num_classes = 2;
  LossKind loss = LossKind::BinaryCrossEntropy;
  Nonlinearity rnn_nonlinearity = Nonlinearity::Tanh;
  bool literal_rnn = false;
  bool peepholes = true;
  InitScheme init = InitScheme::Centered;
  double dropout = 0.0;  // on the dense activations, training only
};

struct ClassifierModel {
  EmbeddingMatrix embedding;
  CellParams cell;
  Matrix dense_W;  // dense x hidden
  Vector dense_b;
  HeadKind head = HeadKind::Sigmoid;
  std::size_t num_classes = 2;
  Matrix head_W;  // outputs x dense
  Vector head_b;
  LossKind loss = LossKind::BinaryCrossEntropy;
  double dropout = 0.0;

  std::size_t output_units() const noexcept { return head == HeadKind::Sigmoid ? 1 : num_classes; }
  std::size_t hidden_size() const {
    return std::visit([](const auto& p) { return p.hidden_size(); }, cell);
  }
  std::size_t input_size() const {
    return std::visit([](const auto& p) { return p.input_size(); }, cell);
  }
  CellKind cell_kind() const noexcept {
    return std::holds_alternative<RnnParams>(cell)    ? CellKind::Rnn
           : std::holds_alternative<LstmParams>(cell) ? CellKind::Lstm
                                                      : CellKind::Gru;
  }

  // Dimension chain and head/loss pairing.
  void validate() const {
    std::visit([](const auto& p) { p.validate(); }, cell);
    auto fail = [](const std::string& m) { throw ConfigError("model: " + m); };
    if (embedding.dim() != input_size()) fail("embedding dim does not match cell input size");
    if (dense_W.cols() != hidden_size() || dense_b.size() != dense_W.rows()) fail("dense layer does not match cell");
    if (head_W.cols() != dense_W.rows() || head_b.size() != head_W.rows()) fail("head does not match dense layer");
    if (head == HeadKind::Sigmoid && head_W.rows() != 1) fail("sigmoid head must have exactly one unit");
    if (head == HeadKind::Softmax && (num_classes < 2 || head_W.rows() != num_classes))
      fail("softmax head must have one unit per class (at least 2)");
    if (loss == LossKind::BinaryCrossEntropy && head != HeadKind::Sigmoid)
      fail("binary cross-entropy requires the sigmoid head");
    if ((loss == LossKind::CategoricalCrossEntropy || loss == LossKind::SparseCategoricalCrossEntropy) &&
        head != HeadKind::Softmax)
      fail("categorical cross-entropy requires the softmax head");
    if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  }

  // Named parameter blocks in a fixed order: embedding, cell.*, dense.*, head.*.
  template <class Self, class F>
  static void visit(Self& self, F&& f, Blocks which) {
    if (which == Blocks::All || self.embedding.trainable) f("embedding", self.embedding.weights);
    std::visit(
        [&](auto& p) {
          for_each_block(
              p, [&](std::string_view name, auto& block) { f(std::string("cell.") + std::string(name), block); },
              which);
        },
        self.cell);
    f("dense.W", self.dense_W);
    f("dense.b", self.dense_b);
    f("head.W", self.head_W);
    f("head.b", self.head_b);
  }
};

namespace detail {

// Dense and head weights: zero-centred Glorot uniform, U(-a, a) with
// a = sqrt(6 / (fan_in + fan_out)). An all-positive start here leaves every
// relu unit computing nearly the same function. Literal scheme keeps U(0,1).
inline void init_feedforward(Matrix& m, Rng& rng, InitScheme scheme) {
  if (scheme == InitScheme::Literal) {
    init_block(m, rng, scheme);
    return;
  }
  const double a = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (auto& w : m.values()) w = rng.uniform(-a, a);
}

}  // namespace detail

inline ClassifierModel build_model(const ModelSpec& s, Rng& rng) {
  if (s.vocab_size < 3) throw ConfigError("model: vocab_size must be at least 3");
  if (s.embedding_dim == 0 || s.hidden_size == 0 || s.dense_size == 0)
    throw ConfigError("model: layer sizes must be positive");
  ClassifierModel m;
  m.embedding = init_embedding(s.vocab_size, s.embedding_dim, rng);
  switch (s.cell) {
    case CellKind::Rnn: {
      auto p = RnnParams::zeros(s.embedding_dim, s.hidden_size, s.rnn_nonlinearity, s.literal_rnn);
      init_params(p, rng, s.init);
      m.cell = std::move(p);
      break;
    }
    case CellKind::Lstm: {
      auto p = LstmParams::zeros(s.embedding_dim, s.hidden_size, s.peepholes);
      init_params(p, rng, s.init);
      m.cell = std::move(p);
      break;
    }
    case CellKind::Gru: {
      auto p = GruParams::zeros(s.embedding_dim, s.hidden_size);
      init_params(p, rng, s.init);
      m.cell = std::move(p);
      break;
    }
  }
  m.head = s.head;
  m.num_classes = s.head == HeadKind::Sigmoid ? 2 : s.num_classes;
  m.loss = s.loss;
  m.dropout = s.dropout;
  m.dense_W = Matrix(s.dense_size, s.hidden_size);
  m.dense_b = Vector(s.dense_size);
  m.head_W = Matrix(m.output_units(), s.dense_size);
  m.head_b = Vector(m.output_units());
  detail::init_feedforward(m.dense_W, rng, s.init);
  detail::init_feedforward(m.head_W, rng, s.init);
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Block helpers shared by gradient accumulation and the optimizers.

template <class P>
std::vector<std::span<double>> block_spans(P& p, Blocks which = Blocks::Trainable) {
  std::vector<std::span<double>> out;
  for_each_block(p, [&](std::string_view, auto& block) { out.push_back(block.values()); }, which);
  return out;
}

template <class P>
std::vector<std::span<const double>> const_block_spans(const P& p, Blocks which = Blocks::Trainable) {
  std::vector<std::span<const double>> out;
  for_each_block(p, [&](std::string_view, const auto& block) { out.push_back(block.values()); }, which);
  return out;
}

template <class P>
std::vector<std::string> block_names(const P& p, Blocks which = Blocks::Trainable) {
  std::vector<std::string> out;
  for_each_block(p, [&](std::string_view name, const auto&) { out.emplace_back(name); }, which);
  return out;
}

template <class P>
void accumulate(P& into, const P& from, double scale = 1.0) {
  auto dst = block_spans(into, Blocks::All);
  auto src = const_block_spans(from, Blocks::All);
  for (std::size_t b = 0; b < dst.size(); ++b)
    for (std::size_t k = 0; k < dst[b].size(); ++k) dst[b][k] += scale * src[b][k];
}

template <class P>
void scale_blocks(P& p, double s) {
  for (auto span : block_spans(p, Blocks::All))
    for (auto& v : span) v *= s;
}

// ---------------------------------------------------------------------------
// Heads and losses.

// Shifts by the max logit before exponentiating.
inline Vector softmax(const Vector& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  Vector out(logits.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) sum += (out[j] = std::exp(logits[j] - mx));
  for (auto& v : out) v /= sum;
  return out;
}

inline double clamp_prob(double p) noexcept { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

// -y log(a) - (1-y) log(1-a)
inline double bce_loss(double y_hat, int y) {
  if (y != 0 && y != 1) throw ContractError("bce_loss: label must be 0 or 1, got " + std::to_string(y));
  const double a = clamp_prob(y_hat);
  return y == 1 ? -std::log(a) : -std::log(1.0 - a);
}

// Sparse form: only the true class contributes.
inline double cce_loss(const Vector& y_hat, std::size_t label) {
  if (label >= y_hat.size())
    throw ContractError("cce_loss: class " + std::to_string(label) + " out of range for " +
                        std::to_string(y_hat.size()) + " classes");
  return -std::log(clamp_prob(y_hat[label]));
}

// One-hot (or any distribution) target: -Σ y_j log ŷ_j.
inline double cce_loss(const Vector& y_hat, const Vector& target) {
  if (target.size() != y_hat.size()) throw ContractError("cce_loss: target length differs from prediction");
  double loss = 0.0;
  for (std::size_t j = 0; j < y_hat.size(); ++j)
    if (target[j] != 0.0) loss -= target[j] * std::log(clamp_prob(y_hat[j]));
  return loss;
}

inline Vector one_hot(std::size_t label, std::size_t classes) {
  if (label >= classes) throw ContractError("one_hot: class index out of range");
  Vector v(classes);
  v[label] = 1.0;
  return v;
}

// (1/m) Σ losses
inline double cost(std::span<const double> losses) {
  if (losses.empty()) throw ContractError("cost: empty batch");
  double s = 0.0;
  for (double l : losses) s += l;
  return s / static_cast<double>(losses.size());
}

// Probability vector as produced by the head: length 1 (P(class 1)) for the
// sigmoid head, length C for softmax.
inline double example_loss(const ClassifierModel& m, const Vector& probs, std::size_t label) {
  switch (m.loss) {
    case LossKind::BinaryCrossEntropy:
      return bce_loss(probs[0], static_cast<int>(label));
    case LossKind::SparseCategoricalCrossEntropy:
      return cce_loss(probs, label);
    case LossKind::CategoricalCrossEntropy:
      return cce_loss(probs, one_hot(label, probs.size()));
    case LossKind::MeanSquaredError: {
      if (m.head == HeadKind::Sigmoid) {
        if (label > 1) throw ContractError("mse: binary label must be 0 or 1");
        const double d = probs[0] - static_cast<double>(label);
        return d * d;
      }
      const Vector t = one_hot(label, probs.size());
      double s = 0.0;
      for (std::size_t j = 0; j < probs.size(); ++j) s += (probs[j] - t[j]) * (probs[j] - t[j]);
      return s;
    }
  }
  return 0.0;
}

// dL/dlogits. Cross-entropy paired with its head collapses to ŷ - y.
inline Vector logit_gradient(const ClassifierModel& m, const Vector& probs, std::size_t label) {
  if (m.head == HeadKind::Sigmoid) {
    if (label > 1) throw ContractError("binary label must be 0 or 1, got " + std::to_string(label));
    const double y = static_cast<double>(label), p = probs[0];
    if (m.loss == LossKind::MeanSquaredError) return Vector{2.0 * (p - y) * p * (1.0 - p)};
    return Vector{p - y};
  }
  const Vector t = one_hot(label, probs.size());
  if (m.loss == LossKind::MeanSquaredError) {
    Vector dp(probs.size());
    double inner = 0.0;
    for (std::size_t j = 0; j < dp.size(); ++j) {
      dp[j] = 2.0 * (probs[j] - t[j]);
      inner += probs[j] * dp[j];
    }
    for (std::size_t j = 0; j < dp.size(); ++j) dp[j] = probs[j] * (dp[j] - inner);
    return dp;
  }
  return sub(probs, t);
}

inline std::size_t predicted_class(const ClassifierModel& m, const Vector& probs) {
  if (m.head == HeadKind::Sigmoid) return probs[0] >= 0.5 ? 1 : 0;
  return static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

// ---------------------------------------------------------------------------
// Forward / backward over one document.

struct ModelTrace {
  std::vector<TokenIndex> ids;
  std::variant<std::vector<RnnTrace>, std::vector<LstmTrace>, std::vector<GruTrace>> cell;
  Vector h_final;
  Vector dense_pre;
  Vector dense_mask;  // empty when dropout is inactive
  Vector dense_out;
  Vector logits;
};

struct Forward {
  Vector probs;
  ModelTrace trace;
};

// Pass an Rng to enable (inverted) dropout; evaluation passes none.
inline Forward forward(const ClassifierModel& m, std::span<const TokenIndex> ids, Rng* dropout_rng = nullptr) {
  Forward out;
  auto& tr = out.trace;
  tr.ids.assign(ids.begin(), ids.end());
  const auto xs = lookup(ids, m.embedding);
  std::visit(
      [&](const auto& p) {
        auto seq = run_sequence(xs, p);
        tr.h_final = std::move(seq.h_final);
        tr.cell = std::move(seq.traces);
      },
      m.cell);
  tr.dense_pre = matvec(m.dense_W, tr.h_final);
  add_inplace(tr.dense_pre, m.dense_b);
  tr.dense_out = relu(tr.dense_pre);
  if (dropout_rng != nullptr && m.dropout > 0.0) {
    tr.dense_mask = Vector(tr.dense_out.size());
    const double keep = 1.0 - m.dropout;
    for (std::size_t k = 0; k < tr.dense_mask.size(); ++k)
      tr.dense_mask[k] = dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
    tr.dense_out = hadamard(tr.dense_out, tr.dense_mask);
  }
  tr.logits = matvec(m.head_W, tr.dense_out);
  add_inplace(tr.logits, m.head_b);
  out.probs = m.head == HeadKind::Sigmoid ? Vector{sigmoid(tr.logits[0])} : softmax(tr.logits);
  return out;
}

inline ClassifierModel zero_gradients(const ClassifierModel& m) { return zeros_like(m); }

// Accumulates the gradient of the loss into `grads` (a zeros_like of the
// model) given dL/dlogits. The pad row never receives gradient.
inline void backward(const ClassifierModel& m, const ModelTrace& tr, const Vector& d_logits, ClassifierModel& grads) {
  add_outer(grads.head_W, d_logits, tr.dense_out);
  add_inplace(grads.head_b, d_logits);
  Vector d_dense(m.dense_W.rows());
  matvec_t_acc(m.head_W, d_logits, d_dense);
  for (std::size_t k = 0; k < d_dense.size(); ++k) {
    if (!tr.dense_mask.empty()) d_dense[k] *= tr.dense_mask[k];
    d_dense[k] *= relu_prime(tr.dense_pre[k]);
  }
  add_outer(grads.dense_W, d_dense, tr.h_final);
  add_inplace(grads.dense_b, d_dense);
  Vector dh(m.hidden_size());
  matvec_t_acc(m.dense_W, d_dense, dh);

  std::vector<Vector> dxs;
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        using Trace = typename decltype(run_sequence(std::span<const Vector>{}, p).traces)::value_type;
        const auto& traces = std::get<std::vector<Trace>>(tr.cell);
        auto g = backward_sequence(std::span<const Trace>(traces), dh, p);
        accumulate(std::get<P>(grads.cell), g.params);
        dxs = std::move(g.dxs);
      },
      m.cell);

  if (m.embedding.trainable) {
    for (std::size_t t = 0; t < tr.ids.size(); ++t) {
      if (tr.ids[t] == kPadIndex) continue;
      auto row = grads.embedding.weights.row(tr.ids[t]);
      for (std::size_t k = 0; k < row.size(); ++k) row[k] += dxs[t][k];
    }
  }
}

// ---------------------------------------------------------------------------
// Optimizers: θ ← θ - lr · (update), descent on the mean batch loss.

enum class OptimizerKind { Sgd, RmsProp, Adam };

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 0.001;
  double rho = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t t = 0;
  std::vector<std::vector<double>> m;  // Adam first moment
  std::vector<std::vector<double>> v;  // Adam second moment / RMSProp mean square
};

// Applies one step to the blocks `params` from `grads`. Both lists must come
// from block_spans over objects of identical shape.
inline void optimizer_step(OptimizerState& st, std::span<const std::span<double>> params,
                           std::span<const std::span<double>> grads, std::span<const std::string> names = {}) {
  if (!(st.learning_rate > 0.0)) throw ConfigError("optimizer: learning rate must be positive");
  if (params.size() != grads.size()) throw ShapeError("optimizer: parameter/gradient block count mismatch");
  for (std::size_t b = 0; b < params.size(); ++b) {
    const std::string name = b < names.size() ? names[b] : "block " + std::to_string(b);
    if (params[b].size() != grads[b].size()) throw ShapeError("optimizer: gradient shape mismatch for " + name);
    if (!all_finite(grads[b])) throw DivergenceError("non-finite gradient in " + name);
  }
  if (st.kind != OptimizerKind::Sgd && st.v.empty()) {
    for (const auto& p : params) {
      st.v.emplace_back(p.size(), 0.0);
      if (st.kind == OptimizerKind::Adam) st.m.emplace_back(p.size(), 0.0);
    }
  }
  if (st.kind != OptimizerKind::Sgd) {
    if (st.v.size() != params.size()) throw ShapeError("optimizer: accumulator slots do not mirror parameters");
    for (std::size_t b = 0; b < params.size(); ++b)
      if (st.v[b].size() != params[b].size()) throw ShapeError("optimizer: accumulator slot shape mismatch");
  }
  ++st.t;
  const double lr = st.learning_rate;
  switch (st.kind) {
    case OptimizerKind::Sgd:
      for (std::size_t b = 0; b < params.size(); ++b)
        for (std::size_t k = 0; k < params[b].size(); ++k) params[b][k] -= lr * grads[b][k];
      break;
    case OptimizerKind::RmsProp:
      for (std::size_t b = 0; b < params.size(); ++b) {
        auto& s = st.v[b];
        for (std::size_t k = 0; k < params[b].size(); ++k) {
          const double g = grads[b][k];
          s[k] = st.rho * s[k] + (1.0 - st.rho) * g * g;
          params[b][k] -= lr * g / (std::sqrt(s[k]) + st.epsilon);
        }
      }
      break;
    case OptimizerKind::Adam: {
      const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
      const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
      for (std::size_t b = 0; b < params.size(); ++b) {
        auto& m1 = st.m[b];
        auto& m2 = st.v[b];
        for (std::size_t k = 0; k < params[b].size(); ++k) {
          const double g = grads[b][k];
          m1[k] = st.beta1 * m1[k] + (1.0 - st.beta1) * g;
          m2[k] = st.beta2 * m2[k] + (1.0 - st.beta2) * g * g;
          params[b][k] -= lr * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + st.epsilon);
        }
      }
      break;
    }
  }
}

inline void optimizer_step(OptimizerState& st, ClassifierModel& model, ClassifierModel& grads) {
  const auto p = block_spans(model);
  const auto g = block_spans(grads);
  const auto names = block_names(model);
  optimizer_step(st, p, g, names);
}

// Rescales gradients so their global L2 norm is at most max_norm. Returns the
// norm before clipping.
inline double clip_gradients(ClassifierModel& grads, double max_norm) {
  double sq = 0.0;
  for (auto s : block_spans(grads)) sq += squared_norm(s);
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto span : block_spans(grads))
      for (auto& v : span) v *= s;
  }
  return norm;
}

}  // namespace seqtext
