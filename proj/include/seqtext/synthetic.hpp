#pragma once

// Seeded corpus generators used by the test and acceptance suites, so that
// nothing depends on downloading external data.
//
//   separable_corpus  class = which of C disjoint 20-token sets appears;
//                     shared filler tokens; lengths 10..40.
//   lexical_corpus    long documents of Zipf-distributed filler with sparse,
//                     noisy class cue words. The review/news presets mimic
//                     the shape of IMDB (binary, ~230 tokens) and BBC News
//                     (5 topics, ~400 tokens) CSV files.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "seqtext/dataset.hpp"
#include "seqtext/random.hpp"
#include "seqtext/text.hpp"

namespace seqtext {

struct TextCorpus {
  std::vector<std::string> texts;
  std::vector<std::string> labels;

  RawCorpus to_raw(const PipelineConfig& cfg) const {
    RawCorpus r;
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      auto [it, inserted] = idx.emplace(labels[i], r.class_names.size());
      if (inserted) r.class_names.push_back(labels[i]);
      r.labels.push_back(it->second);
      r.docs.push_back(clean(texts[i], cfg));
    }
    return r;
  }

  void write_csv(std::ostream& os, const CsvSchema& schema = {}) const {
    seqtext::write_csv(os, texts, labels, schema);
  }
};

namespace detail {

// Distinct pronounceable pseudo-words: three syllables indexed base 40.
inline std::string pseudo_word(std::size_t k) {
  static constexpr const char* kSyllables[40] = {
      "ba", "be", "bi", "bo", "da", "de", "di", "do", "fa", "fe", "fi", "fo", "ga", "ge",
      "gi", "go", "ka", "ke", "ki", "ko", "la", "le", "li", "lo", "ma", "me", "mi", "mo",
      "na", "ne", "ni", "no", "ra", "re", "ri", "ro", "sa", "se", "si", "so"};
  std::string w = kSyllables[k % 40];
  w += kSyllables[(k / 40) % 40];
  w += kSyllables[(k / 1600) % 40];
  if (k >= 64000) w += std::to_string(k / 64000);
  return w;
}

inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - rng.uniform();  // (0, 1]
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double exponent) : cdf_(n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) cdf_[k] = (acc += 1.0 / std::pow(static_cast<double>(k + 1), exponent));
    for (auto& c : cdf_) c /= acc;
  }
  std::size_t operator()(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

}  // namespace detail

inline std::string separable_class_name(std::size_t classes, std::size_t c) {
  if (classes == 2) return c == 0 ? "neg" : "pos";
  return "topic" + std::to_string(c);
}

// Documents alternate labels 0, 1, ..., C-1, 0, ... Each position holds a
// token from the document's class set with probability 1/2, otherwise a
// shared filler; the first token is always from the class set.
inline TextCorpus separable_corpus(std::size_t classes, std::size_t docs, std::uint64_t seed) {
  constexpr std::size_t kClassTokens = 20, kFillers = 30, kMinLen = 10, kMaxLen = 40;
  Rng rng(seed);
  TextCorpus out;
  for (std::size_t d = 0; d < docs; ++d) {
    const std::size_t c = d % classes;
    const std::size_t len = kMinLen + rng.below(kMaxLen - kMinLen + 1);
    std::string text;
    for (std::size_t t = 0; t < len; ++t) {
      if (t) text += ' ';
      if (t == 0 || rng.bernoulli(0.5)) {
        text += "c" + std::to_string(c) + "w" + std::to_string(rng.below(kClassTokens));
      } else {
        text += "filler" + std::to_string(rng.below(kFillers));
      }
    }
    out.texts.push_back(std::move(text));
    out.labels.push_back(separable_class_name(classes, c));
  }
  return out;
}

struct LexicalCorpusSpec {
  std::vector<std::string> class_names;
  std::size_t docs = 1000;
  std::size_t filler_vocab = 20000;
  double filler_zipf = 1.0;
  std::size_t cue_words_per_class = 150;
  double cue_density = 0.04;   // chance a token is a cue word
  double cue_fidelity = 0.7;   // chance a cue word comes from the true class
  double label_noise = 0.03;   // chance the written label is replaced at random
  double median_length = 200;  // log-normal length distribution
  double length_sigma = 0.5;
  std::size_t min_length = 20;
  std::size_t max_length = 1000;
  std::uint64_t seed = 1;
};

inline LexicalCorpusSpec review_corpus_spec(std::size_t docs, std::uint64_t seed) {
  LexicalCorpusSpec s;
  s.class_names = {"positive", "negative"};
  s.docs = docs;
  s.cue_density = 0.08;
  s.seed = seed;
  return s;
}

inline LexicalCorpusSpec news_corpus_spec(std::size_t docs, std::uint64_t seed) {
  LexicalCorpusSpec s;
  s.class_names = {"sport", "business", "politics", "entertainment", "health"};
  s.docs = docs;
  s.cue_words_per_class = 100;
  s.cue_density = 0.10;
  s.label_noise = 0.02;
  s.median_length = 350;
  s.seed = seed;
  return s;
}

inline TextCorpus lexical_corpus(const LexicalCorpusSpec& s) {
  const std::size_t C = s.class_names.size();
  Rng rng(s.seed);
  const detail::ZipfSampler filler(s.filler_vocab, s.filler_zipf);
  const detail::ZipfSampler cue(s.cue_words_per_class, 1.0);
  TextCorpus out;
  for (std::size_t d = 0; d < s.docs; ++d) {
    const std::size_t c = d % C;
    const double raw_len = s.median_length * std::exp(s.length_sigma * detail::standard_normal(rng));
    const auto len = std::clamp(static_cast<std::size_t>(std::llround(raw_len)), s.min_length, s.max_length);
    std::string text;
    for (std::size_t t = 0; t < len; ++t) {
      if (t) text += ' ';
      std::size_t word;
      if (rng.bernoulli(s.cue_density)) {
        std::size_t from = c;
        if (!rng.bernoulli(s.cue_fidelity)) {
          from = (c + 1 + rng.below(C - 1)) % C;
        }
        word = s.filler_vocab + from * s.cue_words_per_class + cue(rng);
      } else {
        word = filler(rng);
      }
      text += detail::pseudo_word(word);
    }
    std::size_t written = c;
    if (rng.bernoulli(s.label_noise)) written = rng.below(C);
    out.texts.push_back(std::move(text));
    out.labels.push_back(s.class_names[written]);
  }
  return out;
}

}  // namespace seqtext
