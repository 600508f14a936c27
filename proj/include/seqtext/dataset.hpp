#pragma once

// CSV ingestion, stratified splitting and the encoded-dataset artifact that
// sits between preprocessing and training.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "seqtext/errors.hpp"
#include "seqtext/random.hpp"
#include "seqtext/text.hpp"

namespace seqtext {

// ---------------------------------------------------------------------------
// CSV: header row, comma separated, optional double quotes with "" escapes,
// newlines allowed inside quoted fields.

class CsvReader {
 public:
  CsvReader(std::istream& in, std::string where) : in_(in), where_(std::move(where)) {}

  // Next record, or nullopt at end of input. line() is the record's first line.
  std::optional<std::vector<std::string>> next() {
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false, any = false, after_quote = false;
    record_line_ = line_ + 1;
    int ch;
    while ((ch = in_.get()) != EOF) {
      const char c = static_cast<char>(ch);
      any = true;
      if (in_quotes) {
        if (c == '"') {
          if (in_.peek() == '"') {
            field.push_back('"');
            in_.get();
          } else {
            in_quotes = false;
            after_quote = true;
          }
        } else {
          if (c == '\n') ++line_;
          field.push_back(c);
        }
        continue;
      }
      if (c == '"') {
        if (!field.empty() || after_quote) throw ParseError(where_, record_line_, "unexpected quote inside field");
        in_quotes = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
        after_quote = false;
      } else if (c == '\n') {
        ++line_;
        fields.push_back(std::move(field));
        return fields;
      } else if (c == '\r') {
        // tolerate CRLF
      } else {
        if (after_quote) throw ParseError(where_, record_line_, "characters after closing quote");
        field.push_back(c);
      }
    }
    if (in_quotes) throw ParseError(where_, record_line_, "unterminated quoted field");
    if (!any) return std::nullopt;
    ++line_;
    fields.push_back(std::move(field));
    return fields;
  }

  std::size_t line() const noexcept { return record_line_; }

 private:
  std::istream& in_;
  std::string where_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

// ---------------------------------------------------------------------------

struct CsvSchema {
  std::string text_column = "text";
  std::string label_column = "label";
};

// Cleaned but not yet indexed documents.
struct RawCorpus {
  std::vector<Tokens> docs;
  std::vector<std::size_t> labels;
  std::vector<std::string> class_names;  // first-appearance order
};

inline RawCorpus read_csv_corpus(std::istream& in, const CsvSchema& schema, const PipelineConfig& cfg,
                                 const std::string& where = "csv") {
  CsvReader reader(in, where);
  auto header = reader.next();
  if (!header) throw DataError(where + ": empty file");
  if (!header->empty() && header->front().rfind("\xEF\xBB\xBF", 0) == 0) header->front().erase(0, 3);
  auto column = [&](const std::string& name) {
    auto it = std::find(header->begin(), header->end(), name);
    if (it == header->end()) throw ConfigError(where + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header->begin());
  };
  const auto text_col = column(schema.text_column);
  const auto label_col = column(schema.label_column);

  RawCorpus corpus;
  std::map<std::string, std::size_t> label_index;
  while (auto row = reader.next()) {
    if (row->size() == 1 && row->front().empty()) continue;  // blank line
    if (row->size() != header->size()) {
      throw ParseError(where, reader.line(),
                       "expected " + std::to_string(header->size()) + " fields, got " + std::to_string(row->size()));
    }
    const auto& label = (*row)[label_col];
    auto [it, inserted] = label_index.emplace(label, corpus.class_names.size());
    if (inserted) corpus.class_names.push_back(label);
    corpus.labels.push_back(it->second);
    corpus.docs.push_back(clean((*row)[text_col], cfg));
  }
  if (corpus.docs.empty()) throw DataError(where + ": no data rows");
  return corpus;
}

inline RawCorpus load_csv_corpus(const std::string& path, const CsvSchema& schema, const PipelineConfig& cfg) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset: " + path);
  return read_csv_corpus(in, schema, cfg, path);
}

inline void write_csv(std::ostream& os, const std::vector<std::string>& texts, const std::vector<std::string>& labels,
                      const CsvSchema& schema = {}) {
  os << csv_quote(schema.text_column) << ',' << csv_quote(schema.label_column) << '\n';
  for (std::size_t i = 0; i < texts.size(); ++i) os << csv_quote(texts[i]) << ',' << csv_quote(labels[i]) << '\n';
}

// ---------------------------------------------------------------------------
// Splits.

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

namespace detail {

inline std::vector<std::vector<std::size_t>> shuffled_by_class(std::span<const std::size_t> labels, Rng& rng) {
  std::size_t classes = 0;
  for (auto l : labels) classes = std::max(classes, l + 1);
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (auto& idx : by_class) rng.shuffle(std::span<std::size_t>(idx));
  return by_class;
}

// Largest-remainder apportionment of `total` proportional to `sizes`.
inline std::vector<std::size_t> apportion(const std::vector<std::size_t>& sizes, std::size_t total) {
  std::size_t n = 0;
  for (auto s : sizes) n += s;
  std::vector<std::size_t> out(sizes.size());
  if (n == 0) return out;
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t given = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    const double exact = static_cast<double>(total) * static_cast<double>(sizes[c]) / static_cast<double>(n);
    out[c] = static_cast<std::size_t>(std::floor(exact));
    given += out[c];
    rem.emplace_back(-(exact - std::floor(exact)), c);
  }
  std::sort(rem.begin(), rem.end());
  for (std::size_t k = 0; given < total && k < rem.size(); ++k, ++given) ++out[rem[k].second];
  return out;
}

}  // namespace detail

// Stratified: each class is split in the given proportion, rounding in favour
// of the training side.
inline Split stratified_split(std::span<const std::size_t> labels, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("split: train fraction must lie in (0, 1)");
  Rng rng(seed);
  Split s;
  const auto by_class = detail::shuffled_by_class(labels, rng);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto& idx = by_class[c];
    if (idx.empty()) continue;
    if (idx.size() < 2) throw DataError("split: class " + std::to_string(c) + " has fewer than 2 examples");
    const auto n_test =
        static_cast<std::size_t>(std::floor(static_cast<double>(idx.size()) * (1.0 - train_fraction) + 1e-9));
    s.test.insert(s.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.insert(s.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

// Stratified subsample with explicit sizes; documents not drawn are unused.
inline Split stratified_split_counts(std::span<const std::size_t> labels, std::size_t n_train, std::size_t n_test,
                                     std::uint64_t seed) {
  if (n_train + n_test > labels.size()) throw DataError("split: requested more documents than available");
  Rng rng(seed);
  const auto by_class = detail::shuffled_by_class(labels, rng);
  std::vector<std::size_t> sizes;
  for (const auto& v : by_class) sizes.push_back(v.size());
  const auto q_total = detail::apportion(sizes, n_train + n_test);
  const auto q_train = detail::apportion(q_total, n_train);
  Split s;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto& idx = by_class[c];
    const std::size_t n_c_test = q_total[c] - q_train[c];
    s.train.insert(s.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(q_train[c]));
    s.test.insert(s.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(q_train[c]),
                  idx.begin() + static_cast<std::ptrdiff_t>(q_train[c] + n_c_test));
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

// ---------------------------------------------------------------------------

struct Dataset {
  std::vector<TokenizedDocument> documents;
  std::vector<std::string> class_names;
  Split split;
  Vocabulary vocab;

  std::size_t num_classes() const noexcept { return class_names.size(); }

  void validate() const {
    std::vector<char> seen(documents.size(), 0);
    for (const auto& d : documents)
      if (d.label >= num_classes()) throw DataError("dataset: label out of range");
    for (const auto* part : {&split.train, &split.test}) {
      for (auto i : *part) {
        if (i >= documents.size() || seen[i]) throw DataError("dataset: split indices overlap or are out of range");
        seen[i] = 1;
      }
    }
  }
};

inline Dataset encode_corpus(const RawCorpus& corpus, const Vocabulary& vocab, const PipelineConfig& cfg) {
  Dataset ds;
  ds.class_names = corpus.class_names;
  ds.vocab = vocab;
  ds.documents.reserve(corpus.docs.size());
  for (std::size_t i = 0; i < corpus.docs.size(); ++i)
    ds.documents.push_back(encode_document(corpus.docs[i], corpus.labels[i], vocab, cfg));
  return ds;
}

// Reads and encodes a CSV. Without a vocabulary one is built from every row.
inline Dataset load_csv_dataset(const std::string& path, const CsvSchema& schema, const PipelineConfig& cfg,
                                const Vocabulary* vocab = nullptr) {
  cfg.validate();
  const auto corpus = load_csv_corpus(path, schema, cfg);
  const auto v = vocab ? *vocab : Vocabulary::build(corpus.docs, cfg);
  return encode_corpus(corpus, v, cfg);
}

// Split first, then build the vocabulary from the training side only.
// Documents in neither part of the split are dropped, so the returned
// split covers every document.
inline Dataset prepare_dataset(const RawCorpus& corpus, const PipelineConfig& cfg, const Split& split) {
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<char> part(corpus.docs.size(), 0);
  for (const auto& [idx, tag] : {std::pair{&split.train, 'r'}, std::pair{&split.test, 'e'}}) {
    for (auto i : *idx) {
      if (i >= corpus.docs.size() || part[i]) throw DataError("split indices overlap or are out of range");
      part[i] = tag;
    }
  }
  RawCorpus kept;
  kept.class_names = corpus.class_names;
  std::vector<std::size_t> new_index(corpus.docs.size(), kNone);
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    if (!part[i]) continue;
    new_index[i] = kept.docs.size();
    kept.docs.push_back(corpus.docs[i]);
    kept.labels.push_back(corpus.labels[i]);
  }
  Split renumbered;
  std::vector<Tokens> train_docs;
  for (auto i : split.train) {
    renumbered.train.push_back(new_index[i]);
    train_docs.push_back(corpus.docs[i]);
  }
  for (auto i : split.test) renumbered.test.push_back(new_index[i]);
  auto ds = encode_corpus(kept, Vocabulary::build(train_docs, cfg), cfg);
  ds.split = std::move(renumbered);
  ds.validate();
  return ds;
}

// Two separate files (e.g. the conventional IMDB train/test halves).
inline Dataset prepare_dataset(const RawCorpus& train, const RawCorpus& test, const PipelineConfig& cfg) {
  RawCorpus all = train;
  std::map<std::string, std::size_t> idx;
  for (std::size_t c = 0; c < all.class_names.size(); ++c) idx[all.class_names[c]] = c;
  for (std::size_t i = 0; i < test.docs.size(); ++i) {
    const auto& name = test.class_names[test.labels[i]];
    auto [it, inserted] = idx.emplace(name, all.class_names.size());
    if (inserted) all.class_names.push_back(name);
    all.docs.push_back(test.docs[i]);
    all.labels.push_back(it->second);
  }
  Split split;
  for (std::size_t i = 0; i < train.docs.size(); ++i) split.train.push_back(i);
  for (std::size_t i = 0; i < test.docs.size(); ++i) split.test.push_back(train.docs.size() + i);
  return prepare_dataset(all, cfg, split);
}

// ---------------------------------------------------------------------------
// Encoded dataset file:
//   seqtext-dataset<TAB>1
//   max_len<TAB>N
//   vocab_hash<TAB>16 hex digits
//   classes<TAB>C, then C lines "class<TAB>name"
//   docs<TAB>M, then M lines "train|test|-<TAB>label<TAB>original_length<TAB>i1 i2 ..."

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline void write_encoded(std::ostream& os, const Dataset& ds) {
  const std::size_t max_len = ds.documents.empty() ? 0 : ds.documents.front().indices.size();
  std::vector<char> part(ds.documents.size(), '-');
  for (auto i : ds.split.train) part[i] = 'r';
  for (auto i : ds.split.test) part[i] = 'e';
  os << "seqtext-dataset\t1\n";
  os << "max_len\t" << max_len << '\n';
  os << "vocab_hash\t" << hex64(ds.vocab.hash()) << '\n';
  os << "classes\t" << ds.class_names.size() << '\n';
  for (const auto& c : ds.class_names) os << "class\t" << c << '\n';
  os << "docs\t" << ds.documents.size() << '\n';
  for (std::size_t i = 0; i < ds.documents.size(); ++i) {
    const auto& d = ds.documents[i];
    os << (part[i] == 'r' ? "train" : part[i] == 'e' ? "test" : "-") << '\t' << d.label << '\t' << d.original_length
       << '\t';
    for (std::size_t k = 0; k < d.indices.size(); ++k) os << (k ? " " : "") << d.indices[k];
    os << '\n';
  }
}

// The vocabulary is stored separately; its hash must match the header.
inline Dataset read_encoded(std::istream& in, const Vocabulary& vocab, const std::string& where = "dataset") {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&](const char* key) {
    if (!std::getline(in, line)) throw ParseError(where, lineno + 1, std::string("missing '") + key + "' line");
    ++lineno;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.substr(0, tab) != key)
      throw ParseError(where, lineno, std::string("expected '") + key + "' line");
    return line.substr(tab + 1);
  };
  auto count = [&](const std::string& s) {
    try {
      return static_cast<std::size_t>(std::stoull(s));
    } catch (const std::logic_error&) {
      throw ParseError(where, lineno, "bad number '" + s + "'");
    }
  };
  if (next("seqtext-dataset") != "1") throw ParseError(where, lineno, "unsupported version");
  const auto max_len = count(next("max_len"));
  const auto hash = next("vocab_hash");
  if (hash != hex64(vocab.hash()))
    throw DataError(where + ": vocabulary hash " + hash + " does not match supplied vocabulary " +
                    hex64(vocab.hash()));
  Dataset ds;
  ds.vocab = vocab;
  const auto C = count(next("classes"));
  for (std::size_t c = 0; c < C; ++c) ds.class_names.push_back(next("class"));
  const auto M = count(next("docs"));
  ds.documents.reserve(M);
  for (std::size_t i = 0; i < M; ++i) {
    if (!std::getline(in, line)) throw ParseError(where, lineno + 1, "truncated document list");
    ++lineno;
    std::istringstream ls(line);
    std::string part;
    TokenizedDocument d;
    if (!(ls >> part >> d.label >> d.original_length)) throw ParseError(where, lineno, "malformed document line");
    for (std::uint64_t v; ls >> v;) {
      if (v >= vocab.size()) throw ParseError(where, lineno, "token index out of vocabulary range");
      d.indices.push_back(static_cast<TokenIndex>(v));
    }
    if (!ls.eof()) throw ParseError(where, lineno, "malformed token index");
    if (d.indices.size() != max_len) throw ParseError(where, lineno, "document length differs from max_len");
    if (d.label >= C) throw ParseError(where, lineno, "label out of range");
    if (part == "train") {
      ds.split.train.push_back(i);
    } else if (part == "test") {
      ds.split.test.push_back(i);
    } else if (part != "-") {
      throw ParseError(where, lineno, "unknown split tag '" + part + "'");
    }
    ds.documents.push_back(std::move(d));
  }
  return ds;
}

}  // namespace seqtext
