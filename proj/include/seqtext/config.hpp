#pragma once

// Experiment configuration: flat "key = value" text, one option per line.
// Unknown keys are rejected so typos never silently fall back to defaults.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "seqtext/embedding.hpp"
#include "seqtext/errors.hpp"
#include "seqtext/metrics.hpp"
#include "seqtext/model.hpp"
#include "seqtext/text.hpp"

namespace seqtext {

enum class Task { Binary, Multiclass };

struct ExperimentConfig {
  Task task = Task::Binary;
  CellKind cell = CellKind::Gru;
  std::size_t vocab_size = 10000;
  std::size_t max_len = 250;
  std::optional<std::size_t> embedding_dim = 16;  // nullopt = "auto"
  std::size_t hidden_size = 16;
  std::size_t dense_size = 8;
  std::optional<double> learning_rate;  // nullopt = 0.001 binary / 0.005 multiclass
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::optional<LossKind> loss;  // nullopt = bce binary / sparse cce multiclass
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::uint64_t seed = 42;
  double gradient_clip = 0.0;  // 0 = off
  std::string pretrained_vectors;
  bool trainable_embeddings = true;
  bool literal_rnn = false;
  bool peepholes = true;
  Nonlinearity rnn_activation = Nonlinearity::Tanh;
  InitScheme init = InitScheme::Centered;
  double dropout = 0.0;
  Averaging averaging = Averaging::Macro;

  // data / preprocessing
  std::string text_column = "text";
  std::string label_column = "label";
  double train_fraction = 0.5;
  bool lowercase = true;
  bool strip_nonalpha = true;
  std::string stopwords;  // path, empty = none
  std::string oov_token = "<UNK>";

  double resolved_learning_rate() const { return learning_rate.value_or(task == Task::Binary ? 0.001 : 0.005); }
  LossKind resolved_loss() const {
    return loss.value_or(task == Task::Binary ? LossKind::BinaryCrossEntropy : LossKind::SparseCategoricalCrossEntropy);
  }
  std::size_t resolved_embedding_dim() const { return embedding_dim.value_or(embedding_dim_heuristic(vocab_size)); }
  HeadKind head() const { return task == Task::Binary ? HeadKind::Sigmoid : HeadKind::Softmax; }

  PipelineConfig pipeline() const {
    PipelineConfig p;
    p.vocab_size = vocab_size;
    p.max_len = max_len;
    p.lowercase = lowercase;
    p.strip_nonalpha = strip_nonalpha;
    p.oov_token = oov_token;
    if (!stopwords.empty()) p.stopwords = load_stopwords(stopwords);
    return p;
  }

  ModelSpec model_spec(std::size_t actual_vocab, std::size_t num_classes) const {
    ModelSpec s;
    s.vocab_size = actual_vocab;
    s.embedding_dim = resolved_embedding_dim();
    s.cell = cell;
    s.hidden_size = hidden_size;
    s.dense_size = dense_size;
    s.head = head();
    s.num_classes = num_classes;
    s.loss = resolved_loss();
    s.rnn_nonlinearity = rnn_activation;
    s.literal_rnn = literal_rnn;
    s.peepholes = peepholes;
    s.init = init;
    s.dropout = dropout;
    return s;
  }

  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  void validate() const {
    if (vocab_size < 3) throw ConfigError("vocab_size must be at least 3");
    if (max_len < 1) throw ConfigError("max_len must be at least 1");
    if (embedding_dim && *embedding_dim == 0) throw ConfigError("embedding_dim must be positive or 'auto'");
    if (hidden_size == 0 || dense_size == 0) throw ConfigError("hidden_size and dense_size must be positive");
    if (!(resolved_learning_rate() > 0.0)) throw ConfigError("learning_rate must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (!(gradient_clip >= 0.0)) throw ConfigError("gradient_clip must be >= 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
    const auto l = resolved_loss();
    if (task == Task::Binary && (l == LossKind::CategoricalCrossEntropy || l == LossKind::SparseCategoricalCrossEntropy))
      throw ConfigError("binary task needs loss bce or mse");
    if (task == Task::Multiclass && l == LossKind::BinaryCrossEntropy)
      throw ConfigError("multiclass task cannot use bce");
  }

  // Every key with its resolved value, in keys() order.
  void write(std::ostream& os) const {
    for (const auto& k : keys()) os << k << " = " << get(k) << '\n';
  }

  void read(std::istream& in, const std::string& where = "config") {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ParseError(where, lineno, "expected key = value");
      auto trim = [](std::string s) {
        const auto s0 = s.find_first_not_of(" \t\r");
        if (s0 == std::string::npos) return std::string();
        return s.substr(s0, s.find_last_not_of(" \t\r") - s0 + 1);
      };
      const auto key = trim(line.substr(0, eq));
      try {
        set(key, trim(line.substr(eq + 1)));
      } catch (const ConfigError& e) {
        throw ConfigError(where + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }

  static ExperimentConfig load(const std::string& path) { return load(path, ExperimentConfig()); }
  static ExperimentConfig load(const std::string& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    base.read(in, path);
    return base;
  }

  std::string to_string() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }
};

namespace detail {

inline bool parse_bool(const std::string& k, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + k + "' expects a boolean, got '" + v + "'");
}

inline std::uint64_t parse_count(const std::string& k, const std::string& v) {
  std::size_t pos = 0;
  std::uint64_t out = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    out = std::stoull(v, &pos);
  } catch (const std::logic_error&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw ConfigError("'" + k + "' expects a non-negative integer, got '" + v + "'");
  return out;
}

inline double parse_real(const std::string& k, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::logic_error&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size() || !std::isfinite(out))
    throw ConfigError("'" + k + "' expects a number, got '" + v + "'");
  return out;
}

// Shortest text that parses back to the same double.
inline std::string real_str(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <class E>
struct EnumName {
  E value;
  const char* name;
};

template <class E, std::size_t N>
E parse_enum(const std::string& k, const std::string& v, const EnumName<E> (&table)[N]) {
  for (const auto& e : table)
    if (v == e.name) return e.value;
  std::string allowed;
  for (const auto& e : table) allowed += std::string(allowed.empty() ? "" : "|") + e.name;
  throw ConfigError("'" + k + "' must be one of " + allowed + ", got '" + v + "'");
}

template <class E, std::size_t N>
std::string enum_str(E v, const EnumName<E> (&table)[N]) {
  for (const auto& e : table)
    if (v == e.value) return e.name;
  return "?";
}

inline constexpr EnumName<Task> kTasks[] = {{Task::Binary, "binary"}, {Task::Multiclass, "multiclass"}};
inline constexpr EnumName<CellKind> kCells[] = {
    {CellKind::Rnn, "rnn"}, {CellKind::Gru, "gru"}, {CellKind::Lstm, "lstm"}};
inline constexpr EnumName<OptimizerKind> kOptimizers[] = {
    {OptimizerKind::Sgd, "sgd"}, {OptimizerKind::RmsProp, "rmsprop"}, {OptimizerKind::Adam, "adam"}};
inline constexpr EnumName<LossKind> kLosses[] = {{LossKind::BinaryCrossEntropy, "bce"},
                                                 {LossKind::CategoricalCrossEntropy, "cce"},
                                                 {LossKind::SparseCategoricalCrossEntropy, "sparse_cce"},
                                                 {LossKind::MeanSquaredError, "mse"}};
inline constexpr EnumName<Nonlinearity> kNonlinearities[] = {{Nonlinearity::Tanh, "tanh"},
                                                             {Nonlinearity::Sigmoid, "sigmoid"}};
inline constexpr EnumName<InitScheme> kInits[] = {
    {InitScheme::Centered, "centered"}, {InitScheme::Scaled, "scaled"}, {InitScheme::Literal, "literal"}};
inline constexpr EnumName<Averaging> kAveraging[] = {{Averaging::Macro, "macro"}, {Averaging::Weighted, "weighted"}};

struct ConfigKey {
  const char* name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

inline const std::vector<ConfigKey>& config_table() {
  using C = ExperimentConfig;
  auto cnt = [](auto C::*field) {
    return std::pair{
        std::function<void(C&, const std::string&)>([field](C& c, const std::string& v) {
          c.*field = static_cast<std::remove_reference_t<decltype(c.*field)>>(parse_count("", v));
        }),
        std::function<std::string(const C&)>([field](const C& c) { return std::to_string(c.*field); })};
  };
  auto real = [](double C::*field) {
    return std::pair{std::function<void(C&, const std::string&)>(
                         [field](C& c, const std::string& v) { c.*field = parse_real("", v); }),
                     std::function<std::string(const C&)>([field](const C& c) { return real_str(c.*field); })};
  };
  auto flag = [](bool C::*field) {
    return std::pair{std::function<void(C&, const std::string&)>(
                         [field](C& c, const std::string& v) { c.*field = parse_bool("", v); }),
                     std::function<std::string(const C&)>(
                         [field](const C& c) { return std::string(c.*field ? "true" : "false"); })};
  };
  auto text = [](std::string C::*field) {
    return std::pair{
        std::function<void(C&, const std::string&)>([field](C& c, const std::string& v) { c.*field = v; }),
        std::function<std::string(const C&)>([field](const C& c) { return c.*field; })};
  };
  auto enm = [](auto C::*field, const auto& table) {
    return std::pair{std::function<void(C&, const std::string&)>(
                         [field, &table](C& c, const std::string& v) { c.*field = parse_enum("", v, table); }),
                     std::function<std::string(const C&)>(
                         [field, &table](const C& c) { return enum_str(c.*field, table); })};
  };
  auto make = [](const char* name, auto p) { return ConfigKey{name, std::move(p.first), std::move(p.second)}; };

  static const std::vector<ConfigKey> table = {
      make("task", enm(&C::task, kTasks)),
      make("cell", enm(&C::cell, kCells)),
      make("vocab_size", cnt(&C::vocab_size)),
      make("max_len", cnt(&C::max_len)),
      ConfigKey{"embedding_dim",
                [](C& c, const std::string& v) {
                  if (v == "auto") {
                    c.embedding_dim.reset();
                  } else {
                    c.embedding_dim = parse_count("", v);
                  }
                },
                [](const C& c) {
                  return c.embedding_dim ? std::to_string(*c.embedding_dim)
                                         : "auto  # " + std::to_string(c.resolved_embedding_dim());
                }},
      make("hidden_size", cnt(&C::hidden_size)),
      make("dense_size", cnt(&C::dense_size)),
      ConfigKey{"learning_rate", [](C& c, const std::string& v) { c.learning_rate = parse_real("", v); },
                [](const C& c) { return real_str(c.resolved_learning_rate()); }},
      make("optimizer", enm(&C::optimizer, kOptimizers)),
      ConfigKey{"loss", [](C& c, const std::string& v) { c.loss = parse_enum("", v, kLosses); },
                [](const C& c) { return enum_str(c.resolved_loss(), kLosses); }},
      make("epochs", cnt(&C::epochs)),
      make("batch_size", cnt(&C::batch_size)),
      make("seed", cnt(&C::seed)),
      make("gradient_clip", real(&C::gradient_clip)),
      make("pretrained_vectors", text(&C::pretrained_vectors)),
      make("trainable_embeddings", flag(&C::trainable_embeddings)),
      make("literal_rnn", flag(&C::literal_rnn)),
      make("peepholes", flag(&C::peepholes)),
      make("rnn_activation", enm(&C::rnn_activation, kNonlinearities)),
      make("init", enm(&C::init, kInits)),
      make("dropout", real(&C::dropout)),
      make("averaging", enm(&C::averaging, kAveraging)),
      make("text_column", text(&C::text_column)),
      make("label_column", text(&C::label_column)),
      make("train_fraction", real(&C::train_fraction)),
      make("lowercase", flag(&C::lowercase)),
      make("strip_nonalpha", flag(&C::strip_nonalpha)),
      make("stopwords", text(&C::stopwords)),
      make("oov_token", text(&C::oov_token)),
  };
  return table;
}

inline const ConfigKey& find_key(const std::string& key) {
  for (const auto& k : config_table())
    if (key == k.name) return k;
  throw ConfigError("unknown config key '" + key + "'");
}

}  // namespace detail

inline void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const auto& k = detail::find_key(key);
  try {
    k.set(*this, value);
  } catch (const ConfigError& e) {
    // Table setters don't know their key; reattach it.
    std::string msg = e.what();
    if (msg.rfind("''", 0) == 0) msg = "'" + key + "'" + msg.substr(2);
    throw ConfigError(msg);
  }
}

inline std::string ExperimentConfig::get(const std::string& key) const { return detail::find_key(key).get(*this); }

inline const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& k : detail::config_table()) out.emplace_back(k.name);
    return out;
  }();
  return names;
}

}  // namespace seqtext
