// seqtext: preprocess / train / evaluate / predict from the command line.
//
// Exit status: 0 success, 1 usage or configuration error, 2 data error,
// 3 numerical divergence.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "seqtext/seqtext.hpp"

namespace fs = std::filesystem;
using namespace seqtext;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

// Configuration problems found while resolving options, as opposed to
// malformed data files.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Keys that shape the encoded dataset; train must agree with preprocess.
const std::vector<std::string> kPipelineKeys = {"vocab_size",    "max_len",     "lowercase",      "strip_nonalpha",
                                                "stopwords",     "oov_token",   "text_column",    "label_column",
                                                "train_fraction"};

struct Overrides {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "key = value config file (flags win over it)");
    for (const auto& key : ExperimentConfig::keys()) {
      options[key] = app.add_option("--" + key, values[key], "config key '" + key + "'")->group("Config keys");
    }
  }

  ExperimentConfig resolve(ExperimentConfig base) const {
    try {
      if (!config_path.empty()) base = ExperimentConfig::load(config_path, base);
      for (const auto& [key, opt] : options) {
        if (opt->count() > 0) base.set(key, values.at(key));
      }
      base.validate();
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    } catch (const ParseError& e) {
      throw UsageError(e.what());
    }
    return base;
  }
};

void write_file(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw DataError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

template <class F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

void print_config(std::ostream& os, const ExperimentConfig& cfg) {
  os << "# resolved config\n";
  cfg.write(os);
  os << '\n';
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

std::string cell_label(CellKind k) {
  switch (k) {
    case CellKind::Rnn:
      return "RNN";
    case CellKind::Lstm:
      return "LSTM";
    case CellKind::Gru:
      return "GRU";
  }
  return "?";
}

// ---------------------------------------------------------------------------

struct PreprocessArgs {
  std::string data, test_data, out;
  Overrides ov;
};

std::string corpus_stats(const Dataset& ds) {
  std::ostringstream os;
  auto part = [&](const char* name, const std::vector<std::size_t>& idx) {
    std::vector<std::size_t> hist(ds.num_classes(), 0);
    std::size_t tokens = 0, kept = 0, oov = 0;
    for (auto i : idx) {
      const auto& d = ds.documents[i];
      ++hist[d.label];
      tokens += d.original_length;
      for (auto t : d.indices) {
        if (t == kPadIndex) continue;
        ++kept;
        oov += t == kOovIndex ? 1 : 0;
      }
    }
    char buf[160];
    const double avg = idx.empty() ? 0.0 : static_cast<double>(tokens) / static_cast<double>(idx.size());
    const double rate = kept == 0 ? 0.0 : 100.0 * static_cast<double>(oov) / static_cast<double>(kept);
    std::snprintf(buf, sizeof buf, "%-6s docs %zu  avg_len %.2f  oov_rate %.2f%%\n", name, idx.size(), avg, rate);
    os << buf;
    for (std::size_t c = 0; c < hist.size(); ++c) os << "         " << ds.class_names[c] << ' ' << hist[c] << '\n';
  };
  os << "classes " << ds.num_classes() << "  vocabulary " << ds.vocab.size() << "  max_len "
     << (ds.documents.empty() ? 0 : ds.documents.front().indices.size()) << '\n';
  part("train", ds.split.train);
  part("test", ds.split.test);
  return os.str();
}

int run_preprocess(const PreprocessArgs& a) {
  const auto cfg = a.ov.resolve(ExperimentConfig());
  print_config(std::cout, cfg);
  const auto pipe = cfg.pipeline();
  pipe.validate();
  const CsvSchema schema{cfg.text_column, cfg.label_column};
  Dataset ds;
  if (a.test_data.empty()) {
    const auto raw = load_csv_corpus(a.data, schema, pipe);
    ds = prepare_dataset(raw, pipe, stratified_split(raw.labels, cfg.train_fraction, cfg.seed));
  } else {
    ds = prepare_dataset(load_csv_corpus(a.data, schema, pipe), load_csv_corpus(a.test_data, schema, pipe), pipe);
  }
  ensure_dir(a.out);
  const fs::path out(a.out);
  const auto stats = corpus_stats(ds);
  write_file(out / "vocab.tsv", render([&](std::ostream& os) { ds.vocab.write(os); }));
  write_file(out / "dataset.tsv", render([&](std::ostream& os) { write_encoded(os, ds); }));
  write_file(out / "config.txt", cfg.to_string());
  write_file(out / "stats.txt", stats);
  std::cout << stats;
  return 0;
}

// ---------------------------------------------------------------------------

Dataset load_preprocessed(const fs::path& dir) {
  const auto vocab = Vocabulary::load((dir / "vocab.tsv").string());
  std::ifstream in(dir / "dataset.tsv", std::ios::binary);
  if (!in) throw DataError("cannot open " + (dir / "dataset.tsv").string());
  return read_encoded(in, vocab, (dir / "dataset.tsv").string());
}

ExperimentConfig preprocess_config(const fs::path& dir) {
  const auto path = dir / "config.txt";
  if (!fs::exists(path)) throw DataError("missing " + path.string() + "; run 'seqtext preprocess' first");
  try {
    return ExperimentConfig::load(path.string());
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  } catch (const ParseError& e) {
    throw DataError(e.what());
  }
}

struct TrainArgs {
  std::string data, out;
  bool quiet = false;
  Overrides ov;
};

int run_train(const TrainArgs& a) {
  const fs::path data(a.data);
  const auto pre = preprocess_config(data);
  const auto cfg = a.ov.resolve(pre);
  print_config(std::cout, cfg);
  for (const auto& key : kPipelineKeys) {
    if (cfg.get(key) != pre.get(key)) {
      throw UsageError("'" + key + "' is " + cfg.get(key) + " but the data was preprocessed with " + pre.get(key) +
                       "; rerun preprocess");
    }
  }
  const auto ds = load_preprocessed(data);
  auto result = train(cfg, ds, [&](const CurvePoint& p) {
    if (a.quiet) return;
    std::printf("epoch %3zu  train_loss %.4f  train_acc %6.2f  test_loss %.4f  test_acc %6.2f\n", p.epoch,
                p.train_loss, p.train_accuracy, p.test_loss, p.test_accuracy);
    std::fflush(stdout);
  });

  Checkpoint ck;
  ck.model = std::move(result.model);
  ck.config = cfg;
  ck.vocab = ds.vocab;
  ck.stopwords = cfg.pipeline().stopwords;
  ck.class_names = ds.class_names;
  ck.vocab_hash = ds.vocab.hash();

  const auto& split = ds.split.test.empty() ? ds.split.train : ds.split.test;
  const auto report = evaluate(ck, ds, split);

  ensure_dir(a.out);
  const fs::path out(a.out);
  write_file(out / "model.ckpt", serialize_checkpoint(ck));
  write_file(out / "curve.csv", render([&](std::ostream& os) { write_curve(os, result.curve); }));
  write_file(out / "metrics.txt", render([&](std::ostream& os) { write_metrics(os, report); }));
  std::cout << '\n' << (ds.split.test.empty() ? "train" : "test") << " split:\n";
  print_report_table(std::cout, report, cell_label(cfg.cell), ds.class_names);
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string model, data, split = "test", metrics;
};

int run_evaluate(const EvaluateArgs& a) {
  const auto ck = load_checkpoint(a.model);
  print_config(std::cout, ck.config);
  const auto ds = load_preprocessed(a.data);
  std::vector<std::size_t> idx;
  if (a.split == "train") {
    idx = ds.split.train;
  } else if (a.split == "test") {
    idx = ds.split.test;
  } else {
    for (std::size_t i = 0; i < ds.documents.size(); ++i) idx.push_back(i);
  }
  if (idx.empty()) throw DataError("split '" + a.split + "' of " + a.data + " is empty");
  const auto report = evaluate(ck, ds, idx);
  print_report_table(std::cout, report, cell_label(ck.config.cell), ck.class_names);
  if (!a.metrics.empty()) write_file(a.metrics, render([&](std::ostream& os) { write_metrics(os, report); }));
  return 0;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string model;
};

int run_predict(const PredictArgs& a) {
  const auto ck = load_checkpoint(a.model);
  print_config(std::cerr, ck.config);
  const auto pipe = ck.pipeline();
  std::string line;
  char buf[64];
  while (std::getline(std::cin, line)) {
    const auto tokens = clean(line, pipe);
    const auto doc = encode_document(tokens, 0, ck.vocab, pipe);
    const auto fw = forward(ck.model, doc.indices);
    const auto cls = predicted_class(ck.model, fw.probs);
    const double p = ck.model.head == HeadKind::Sigmoid ? fw.probs[0] : fw.probs[cls];
    std::snprintf(buf, sizeof buf, "%.6f", p);
    std::cout << ck.class_names.at(cls) << '\t' << buf << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seqtext: recurrent text classifiers (RNN, LSTM, GRU)"};
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* cmd_pre = app.add_subcommand("preprocess", "clean, build vocabulary, split and encode a CSV corpus");
  cmd_pre->add_option("--data", pre.data, "CSV file (split by train_fraction unless --test-data is given)")
      ->required();
  cmd_pre->add_option("--test-data", pre.test_data, "separate CSV used as the test split");
  cmd_pre->add_option("--out", pre.out, "output directory")->required();
  pre.ov.attach(*cmd_pre);

  TrainArgs tr;
  auto* cmd_train = app.add_subcommand("train", "train a classifier on a preprocessed directory");
  cmd_train->add_option("--data", tr.data, "directory written by preprocess")->required();
  cmd_train->add_option("--out", tr.out, "output directory")->required();
  cmd_train->add_flag("-q,--quiet", tr.quiet, "no per-epoch lines");
  tr.ov.attach(*cmd_train);

  EvaluateArgs ev;
  auto* cmd_eval = app.add_subcommand("evaluate", "score a checkpoint on a preprocessed split");
  cmd_eval->add_option("--model", ev.model, "checkpoint file")->required();
  cmd_eval->add_option("--data", ev.data, "directory written by preprocess")->required();
  cmd_eval->add_option("--split", ev.split, "train, test or all")
      ->check(CLI::IsMember({"train", "test", "all"}));
  cmd_eval->add_option("--metrics", ev.metrics, "write name=value metrics here");

  PredictArgs pr;
  auto* cmd_pred = app.add_subcommand("predict", "classify raw text, one document per stdin line");
  cmd_pred->add_option("--model", pr.model, "checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*cmd_pre) return run_preprocess(pre);
    if (*cmd_train) return run_train(tr);
    if (*cmd_eval) return run_evaluate(ev);
    if (*cmd_pred) return run_predict(pr);
  } catch (const UsageError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitConfig;
}
