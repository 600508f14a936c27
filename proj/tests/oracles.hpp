#pragma once

// Independent oracles shared by the unit tests and the acceptance binary:
// central finite differences for every gradient, and small seeded instance
// builders.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seqtext/seqtext.hpp"

namespace seqtext::oracle {

inline constexpr double kFdStep = 1e-5;

// Relative error with a floor on the scale, so two gradients that are both
// ~0 compare by absolute difference (1e-6 * tolerance).
inline double rel_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

template <class F>
double central_difference(double& x, F&& f, double eps = kFdStep) {
  const double old = x;
  x = old + eps;
  const double up = f();
  x = old - eps;
  const double down = f();
  x = old;
  return (up - down) / (2.0 * eps);
}

struct GradReport {
  double worst = 0.0;
  std::string where;
  std::size_t checked = 0;

  void add(double analytic, double numeric, const std::string& name) {
    const double e = rel_error(analytic, numeric);
    ++checked;
    if (where.empty() || e > worst) {
      worst = e;
      where = name;
    }
  }
  void merge(const GradReport& o) {
    if (o.worst > worst) {
      worst = o.worst;
      where = o.where;
    }
    checked += o.checked;
  }
};

inline void randomize(std::span<double> xs, Rng& rng, double scale = 1.0) {
  for (auto& v : xs) v = rng.uniform(-scale, scale);
}

inline Vector random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  Vector v(n);
  randomize(v.values(), rng, scale);
  return v;
}

// Compares every element of the trainable blocks of `params` against the
// analytic gradient container `grads` (same type, same shapes).
template <class P, class Loss>
void compare_blocks(P& params, const P& grads, Loss&& loss, GradReport& rep, const std::string& prefix = "") {
  const auto names = block_names(params);
  auto ps = block_spans(params);
  auto gs = const_block_spans(grads);
  for (std::size_t b = 0; b < ps.size(); ++b)
    for (std::size_t k = 0; k < ps[b].size(); ++k)
      rep.add(gs[b][k], central_difference(ps[b][k], loss), prefix + names[b] + "[" + std::to_string(k) + "]");
}

// ---------------------------------------------------------------------------
// Cell instances.

enum class CellCase { RnnStandard, RnnLiteral, RnnSigmoid, LstmPeephole, LstmPlain, Gru };

inline const char* cell_case_name(CellCase c) {
  switch (c) {
    case CellCase::RnnStandard:
      return "rnn";
    case CellCase::RnnLiteral:
      return "rnn-literal";
    case CellCase::RnnSigmoid:
      return "rnn-sigmoid";
    case CellCase::LstmPeephole:
      return "lstm";
    case CellCase::LstmPlain:
      return "lstm-no-peephole";
    case CellCase::Gru:
      return "gru";
  }
  return "?";
}

inline constexpr CellCase kAllCellCases[] = {CellCase::RnnStandard, CellCase::RnnLiteral,  CellCase::RnnSigmoid,
                                             CellCase::LstmPeephole, CellCase::LstmPlain, CellCase::Gru};

namespace detail {

template <class P>
void randomize_params(P& p, Rng& rng) {
  for (auto s : block_spans(p)) randomize(s, rng, 0.9);
}

// Sequence check: readout L = w · h_T over a random sequence; compares every
// trainable parameter and every input x_t.
template <class P>
GradReport sequence_check(P& p, std::size_t T, Rng& rng) {
  const auto I = p.input_size(), H = p.hidden_size();
  std::vector<Vector> xs;
  for (std::size_t t = 0; t < T; ++t) xs.push_back(random_vector(I, rng));
  const Vector w = random_vector(H, rng);
  auto loss = [&] { return dot(run_sequence(std::span<const Vector>(xs), p).h_final, w); };
  const auto fw = run_sequence(std::span<const Vector>(xs), p);
  const auto g = backward_sequence(std::span<const typename decltype(fw.traces)::value_type>(fw.traces), w, p);
  GradReport rep;
  compare_blocks(p, g.params, loss, rep, "seq.");
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t k = 0; k < I; ++k)
      rep.add(g.dxs[t][k], central_difference(xs[t][k], loss), "x[" + std::to_string(t) + "][" + std::to_string(k) + "]");
  return rep;
}

}  // namespace detail

// One randomized instance: input 2-4, hidden 3-5, sequence length 1-6. Checks
// the sequence gradients plus a single step from random carried state.
inline GradReport cell_gradient_check(CellCase which, std::uint64_t seed) {
  Rng rng(seed * 7919 + static_cast<std::uint64_t>(which));
  const std::size_t I = 2 + rng.below(3), H = 3 + rng.below(3), T = 1 + rng.below(6);
  GradReport rep;

  auto rnn_case = [&](Nonlinearity g, bool literal) {
    auto p = RnnParams::zeros(I, H, g, literal);
    detail::randomize_params(p, rng);
    rep.merge(detail::sequence_check(p, T, rng));
    Vector x = random_vector(I, rng), h_prev = random_vector(H, rng);
    const Vector w = random_vector(H, rng);
    auto loss = [&] { return dot(rnn_step(x, h_prev, p).h, w); };
    auto grads = zeros_like(p);
    const auto st = rnn_step(x, h_prev, p);
    const auto d = rnn_backward(st.trace, w, p, grads);
    compare_blocks(p, grads, loss, rep, "step.");
    for (std::size_t k = 0; k < I; ++k) rep.add(d.dx[k], central_difference(x[k], loss), "step.x");
    for (std::size_t k = 0; k < H; ++k) rep.add(d.dh_prev[k], central_difference(h_prev[k], loss), "step.h_prev");
  };

  switch (which) {
    case CellCase::RnnStandard:
      rnn_case(Nonlinearity::Tanh, false);
      break;
    case CellCase::RnnLiteral:
      rnn_case(Nonlinearity::Tanh, true);
      break;
    case CellCase::RnnSigmoid:
      rnn_case(Nonlinearity::Sigmoid, false);
      break;
    case CellCase::LstmPeephole:
    case CellCase::LstmPlain: {
      auto p = LstmParams::zeros(I, H, which == CellCase::LstmPeephole);
      detail::randomize_params(p, rng);
      rep.merge(detail::sequence_check(p, T, rng));
      Vector x = random_vector(I, rng), h_prev = random_vector(H, rng), c_prev = random_vector(H, rng, 2.0);
      const Vector wh = random_vector(H, rng), wc = random_vector(H, rng);
      auto loss = [&] {
        const auto s = lstm_step(x, h_prev, c_prev, p);
        return dot(s.h, wh) + dot(s.c, wc);
      };
      auto grads = zeros_like(p);
      const auto st = lstm_step(x, h_prev, c_prev, p);
      const auto d = lstm_backward(st.trace, wh, wc, p, grads);
      compare_blocks(p, grads, loss, rep, "step.");
      for (std::size_t k = 0; k < I; ++k) rep.add(d.dx[k], central_difference(x[k], loss), "step.x");
      for (std::size_t k = 0; k < H; ++k) rep.add(d.dh_prev[k], central_difference(h_prev[k], loss), "step.h_prev");
      for (std::size_t k = 0; k < H; ++k) rep.add(d.dc_prev[k], central_difference(c_prev[k], loss), "step.c_prev");
      break;
    }
    case CellCase::Gru: {
      auto p = GruParams::zeros(I, H);
      detail::randomize_params(p, rng);
      rep.merge(detail::sequence_check(p, T, rng));
      Vector x = random_vector(I, rng), h_prev = random_vector(H, rng);
      const Vector w = random_vector(H, rng);
      auto loss = [&] { return dot(gru_step(x, h_prev, p).h, w); };
      auto grads = zeros_like(p);
      const auto st = gru_step(x, h_prev, p);
      const auto d = gru_backward(st.trace, w, p, grads);
      compare_blocks(p, grads, loss, rep, "step.");
      for (std::size_t k = 0; k < I; ++k) rep.add(d.dx[k], central_difference(x[k], loss), "step.x");
      for (std::size_t k = 0; k < H; ++k) rep.add(d.dh_prev[k], central_difference(h_prev[k], loss), "step.h_prev");
      break;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Full model: embedding -> cell -> dense(relu) -> head -> loss, mean over a
// small batch of pre-padded documents.

struct ModelCase {
  CellKind cell = CellKind::Gru;
  HeadKind head = HeadKind::Sigmoid;
  LossKind loss = LossKind::BinaryCrossEntropy;
  bool literal = false;
  bool peepholes = true;
  std::size_t docs = 2;
};

struct ModelInstance {
  ClassifierModel model;
  std::vector<std::vector<TokenIndex>> docs;
  std::vector<std::size_t> labels;
};

inline ModelInstance make_model_instance(const ModelCase& c, std::uint64_t seed) {
  Rng rng(seed * 104729 + 17);
  ModelSpec s;
  s.vocab_size = 9;
  s.embedding_dim = 2 + rng.below(3);
  s.cell = c.cell;
  s.hidden_size = 3 + rng.below(3);
  s.dense_size = 3;
  s.head = c.head;
  s.num_classes = c.head == HeadKind::Sigmoid ? 2 : 3;
  s.loss = c.loss;
  s.literal_rnn = c.literal;
  s.peepholes = c.peepholes;
  ModelInstance inst{build_model(s, rng), {}, {}};
  for (auto span : block_spans(inst.model)) randomize(span, rng, 0.9);
  for (auto& w : inst.model.embedding.weights.row(kPadIndex)) w = 0.0;
  // Bias the dense layer upward so most relu units are active and the check
  // exercises the whole chain.
  for (auto& b : inst.model.dense_b) b = 0.5 + std::abs(b);
  for (std::size_t d = 0; d < c.docs; ++d) {
    const std::size_t len = 1 + rng.below(6), pads = rng.below(3);
    std::vector<TokenIndex> ids(pads, kPadIndex);
    for (std::size_t t = 0; t < len; ++t) ids.push_back(static_cast<TokenIndex>(1 + rng.below(s.vocab_size - 1)));
    inst.docs.push_back(std::move(ids));
    inst.labels.push_back(rng.below(s.num_classes));
  }
  return inst;
}

inline double batch_loss(const ModelInstance& inst) {
  std::vector<double> losses;
  for (std::size_t d = 0; d < inst.docs.size(); ++d)
    losses.push_back(example_loss(inst.model, forward(inst.model, inst.docs[d]).probs, inst.labels[d]));
  return cost(losses);
}

inline ClassifierModel batch_gradient(const ModelInstance& inst) {
  auto grads = zeros_like(inst.model);
  for (std::size_t d = 0; d < inst.docs.size(); ++d) {
    const auto fw = forward(inst.model, inst.docs[d]);
    backward(inst.model, fw.trace, logit_gradient(inst.model, fw.probs, inst.labels[d]), grads);
  }
  scale_blocks(grads, 1.0 / static_cast<double>(inst.docs.size()));
  return grads;
}

// Skips the pad row, whose analytic gradient is forced to zero by contract.
inline GradReport model_gradient_check(const ModelCase& c, std::uint64_t seed) {
  auto inst = make_model_instance(c, seed);
  const auto grads = batch_gradient(inst);
  auto loss = [&] { return batch_loss(inst); };
  GradReport rep;
  const auto names = block_names(inst.model);
  auto ps = block_spans(inst.model);
  auto gs = const_block_spans(grads);
  const std::size_t pad_row = inst.model.embedding.dim();
  for (std::size_t b = 0; b < ps.size(); ++b) {
    const bool emb = names[b] == "embedding";
    for (std::size_t k = emb ? pad_row : 0; k < ps[b].size(); ++k)
      rep.add(gs[b][k], central_difference(ps[b][k], loss), names[b] + "[" + std::to_string(k) + "]");
  }
  return rep;
}

inline std::vector<ModelCase> all_model_cases() {
  std::vector<ModelCase> out;
  for (auto cell : {CellKind::Rnn, CellKind::Gru, CellKind::Lstm}) {
    out.push_back({cell, HeadKind::Sigmoid, LossKind::BinaryCrossEntropy});
    out.push_back({cell, HeadKind::Softmax, LossKind::SparseCategoricalCrossEntropy});
    out.push_back({cell, HeadKind::Softmax, LossKind::CategoricalCrossEntropy});
    out.push_back({cell, HeadKind::Sigmoid, LossKind::MeanSquaredError});
    out.push_back({cell, HeadKind::Softmax, LossKind::MeanSquaredError});
  }
  out.push_back({CellKind::Rnn, HeadKind::Sigmoid, LossKind::BinaryCrossEntropy, true});
  out.push_back({CellKind::Lstm, HeadKind::Sigmoid, LossKind::BinaryCrossEntropy, false, false});
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic separable corpus as a fully-train dataset.

inline Dataset separable_dataset(std::size_t classes, std::size_t docs, std::uint64_t seed, std::size_t max_len = 40) {
  PipelineConfig pc;
  pc.max_len = max_len;
  const auto raw = separable_corpus(classes, docs, seed).to_raw(pc);
  Split all;
  for (std::size_t i = 0; i < raw.docs.size(); ++i) all.train.push_back(i);
  return prepare_dataset(raw, pc, all);
}

inline constexpr std::uint64_t kSeparableSeed = 7;

}  // namespace seqtext::oracle
