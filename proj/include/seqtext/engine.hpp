#pragma once

// Training loop, evaluation and learning-curve emission.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "seqtext/config.hpp"
#include "seqtext/dataset.hpp"
#include "seqtext/embedding.hpp"
#include "seqtext/errors.hpp"
#include "seqtext/metrics.hpp"
#include "seqtext/model.hpp"
#include "seqtext/random.hpp"

namespace seqtext {

// Accuracies are percentages. Train values are averaged over the epoch's
// mini-batch forward passes; test values use the full test split with the
// end-of-epoch weights.
struct CurvePoint {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
};

using LearningCurve = std::vector<CurvePoint>;

struct TrainResult {
  ClassifierModel model;
  LearningCurve curve;
};

using EpochCallback = std::function<void(const CurvePoint&)>;

struct SplitLoss {
  double loss = 0.0;
  double accuracy = 0.0;
};

inline SplitLoss loss_and_accuracy(const ClassifierModel& model, const Dataset& ds, std::span<const std::size_t> idx) {
  if (idx.empty()) return {std::nan(""), std::nan("")};
  double loss = 0.0;
  std::size_t correct = 0;
  for (auto i : idx) {
    const auto& doc = ds.documents[i];
    const auto fw = forward(model, doc.indices);
    loss += example_loss(model, fw.probs, doc.label);
    correct += predicted_class(model, fw.probs) == doc.label ? 1 : 0;
  }
  const auto n = static_cast<double>(idx.size());
  return {loss / n, 100.0 * static_cast<double>(correct) / n};
}

inline ClassifierModel initial_model(const ExperimentConfig& cfg, const Dataset& ds, Rng& rng) {
  if (cfg.task == Task::Binary && ds.num_classes() != 2)
    throw ConfigError("binary task needs exactly 2 classes, dataset has " + std::to_string(ds.num_classes()));
  if (cfg.task == Task::Multiclass && ds.num_classes() < 2)
    throw ConfigError("multiclass task needs at least 2 classes");
  auto model = build_model(cfg.model_spec(ds.vocab.size(), ds.num_classes()), rng);
  if (!cfg.pretrained_vectors.empty()) {
    auto loaded = load_pretrained(cfg.pretrained_vectors, ds.vocab, model.embedding.dim(), std::move(model.embedding));
    model.embedding = std::move(loaded.embedding);
  }
  model.embedding.trainable = cfg.trainable_embeddings;
  return model;
}

// Shuffled mini-batches for `epochs` passes over the training split; one
// optimizer step per batch on the mean batch loss.
inline TrainResult train(const ExperimentConfig& cfg, const Dataset& ds, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (ds.documents.empty()) throw DataError("train: empty dataset");
  if (ds.split.train.empty()) throw DataError("train: empty training split");
  Rng rng(cfg.seed);
  TrainResult out{initial_model(cfg, ds, rng), {}};
  auto& model = out.model;

  OptimizerState opt;
  opt.kind = cfg.optimizer;
  opt.learning_rate = cfg.resolved_learning_rate();

  std::vector<std::size_t> order = ds.split.train;
  ClassifierModel grads = zeros_like(model);
  std::vector<double> batch_losses;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0, batch = 1; start < order.size(); start += cfg.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      scale_blocks(grads, 0.0);
      batch_losses.clear();
      for (std::size_t k = start; k < end; ++k) {
        const auto& doc = ds.documents[order[k]];
        auto fw = forward(model, doc.indices, &rng);
        const double l = example_loss(model, fw.probs, doc.label);
        if (!std::isfinite(l)) {
          throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                std::to_string(batch) + "; try a lower learning_rate or set gradient_clip");
        }
        batch_losses.push_back(l);
        correct += predicted_class(model, fw.probs) == doc.label ? 1 : 0;
        backward(model, fw.trace, logit_gradient(model, fw.probs, doc.label), grads);
      }
      loss_sum += cost(batch_losses) * static_cast<double>(end - start);
      scale_blocks(grads, 1.0 / static_cast<double>(end - start));
      if (cfg.gradient_clip > 0.0) clip_gradients(grads, cfg.gradient_clip);
      try {
        optimizer_step(opt, model, grads);
      } catch (const DivergenceError& e) {
        throw DivergenceError(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batch) + "; try a lower learning_rate or set gradient_clip");
      }
    }
    CurvePoint pt;
    pt.epoch = epoch;
    pt.train_loss = loss_sum / static_cast<double>(order.size());
    pt.train_accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(order.size());
    const auto test = loss_and_accuracy(model, ds, ds.split.test);
    pt.test_loss = test.loss;
    pt.test_accuracy = test.accuracy;
    out.curve.push_back(pt);
    if (on_epoch) on_epoch(pt);
  }
  return out;
}

inline std::vector<std::size_t> predict_classes(const ClassifierModel& model, const Dataset& ds,
                                                std::span<const std::size_t> idx) {
  std::vector<std::size_t> preds;
  preds.reserve(idx.size());
  for (auto i : idx) preds.push_back(predicted_class(model, forward(model, ds.documents[i].indices).probs));
  return preds;
}

// Argmax (softmax) or 0.5 threshold (sigmoid) over the given documents.
inline EvalReport evaluate(const ClassifierModel& model, const Dataset& ds, std::span<const std::size_t> idx,
                           Averaging averaging = Averaging::Macro) {
  if (model.embedding.vocab_size() != ds.vocab.size())
    throw DataError("evaluate: model vocabulary size differs from dataset vocabulary");
  if (model.head == HeadKind::Softmax && model.num_classes != ds.num_classes())
    throw DataError("evaluate: model and dataset disagree on the number of classes");
  const auto preds = predict_classes(model, ds, idx);
  std::vector<std::size_t> labels;
  labels.reserve(idx.size());
  for (auto i : idx) labels.push_back(ds.documents[i].label);
  return scores(confusion(preds, labels, model.head == HeadKind::Sigmoid ? 2 : model.num_classes), averaging);
}

inline void write_curve(std::ostream& os, const LearningCurve& curve) {
  os << "epoch,train_loss,train_acc,test_loss,test_acc\n";
  char buf[256];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", p.epoch, p.train_loss, p.train_accuracy,
                  p.test_loss, p.test_accuracy);
    os << buf;
  }
}

inline void emit_learning_curve(const LearningCurve& curve, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write learning curve: " + path);
  write_curve(out, curve);
}

}  // namespace seqtext
