#pragma once

// Raw text -> fixed-length index sequences: cleaning, vocabulary
// construction, OOV replacement, pre-padding and tail truncation.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/crc.hpp>

#include "seqtext/errors.hpp"

namespace seqtext {

using TokenIndex = std::uint32_t;
using Tokens = std::vector<std::string>;

inline constexpr TokenIndex kPadIndex = 0;
inline constexpr TokenIndex kOovIndex = 1;

struct PipelineConfig {
  std::size_t vocab_size = 10000;
  std::size_t max_len = 250;
  bool lowercase = true;
  bool strip_nonalpha = true;
  std::set<std::string> stopwords;
  std::string oov_token = "<UNK>";
  std::string pad_token = "<PAD>";

  void validate() const {
    if (vocab_size < 3) throw ConfigError("vocab_size must be at least 3 (pad, OOV and one token)");
    if (max_len < 1) throw ConfigError("max_len must be at least 1");
    if (oov_token.empty() || pad_token.empty() || oov_token == pad_token)
      throw ConfigError("oov_token and pad_token must be distinct non-empty strings");
  }
};

struct TokenizedDocument {
  std::vector<TokenIndex> indices;
  std::size_t label = 0;
  std::size_t original_length = 0;
};

// Bytes >= 0x80 are kept as word characters so UTF-8 words survive intact.
inline bool is_word_byte(unsigned char c) noexcept { return std::isalnum(c) != 0 || c >= 0x80; }

inline Tokens clean(std::string_view raw, const PipelineConfig& cfg) {
  Tokens out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      if (!cfg.stopwords.contains(cur)) out.push_back(cur);
      cur.clear();
    }
  };
  for (char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
      continue;
    }
    if (cfg.strip_nonalpha && !is_word_byte(c)) {
      flush();
      continue;
    }
    cur.push_back(cfg.lowercase ? static_cast<char>(std::tolower(c)) : ch);
  }
  flush();
  return out;
}

inline std::set<std::string> read_stopwords(std::istream& in) {
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    auto b = line.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t\r\n");
    words.insert(line.substr(b, e - b + 1));
  }
  return words;
}

inline std::set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stopword file: " + path);
  return read_stopwords(in);
}

class Vocabulary {
 public:
  Vocabulary() = default;

  // Index 0 = pad, 1 = OOV, then the most frequent tokens in descending
  // count with lexicographic tie-break, capped at vocab_size entries.
  static Vocabulary build(std::span<const Tokens> corpus, const PipelineConfig& cfg) {
    cfg.validate();
    if (corpus.empty()) throw ConfigError("cannot build a vocabulary from an empty corpus");
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& doc : corpus)
      for (const auto& t : doc) ++counts[t];
    counts.erase(cfg.pad_token);
    counts.erase(cfg.oov_token);

    std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });

    Vocabulary v;
    const std::size_t keep = std::min(ranked.size(), cfg.vocab_size - 2);
    std::uint64_t dropped = 0;
    for (std::size_t i = keep; i < ranked.size(); ++i) dropped += ranked[i].second;
    v.push(cfg.pad_token, 0);
    v.push(cfg.oov_token, dropped);
    for (std::size_t i = 0; i < keep; ++i) v.push(ranked[i].first, ranked[i].second);
    return v;
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(TokenIndex i) const { return tokens_.at(i); }
  std::uint64_t frequency(TokenIndex i) const { return freqs_.at(i); }

  std::optional<TokenIndex> find(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end() || it->second < 2) return std::nullopt;
    return it->second;
  }
  TokenIndex index_of(const std::string& token) const { return find(token).value_or(kOovIndex); }

  // "index<TAB>token<TAB>frequency", one line per index.
  void write(std::ostream& out) const {
    for (std::size_t i = 0; i < tokens_.size(); ++i) out << i << '\t' << tokens_[i] << '\t' << freqs_[i] << '\n';
  }

  static Vocabulary read(std::istream& in, const std::string& where = "vocabulary") {
    Vocabulary v;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const auto t1 = line.find('\t');
      const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
      if (t2 == std::string::npos) throw ParseError(where, lineno, "expected index<TAB>token<TAB>frequency");
      try {
        std::size_t pos = 0;
        const auto idx = std::stoull(line.substr(0, t1), &pos);
        if (pos != t1 || idx != v.size()) throw ParseError(where, lineno, "indices must be dense and in order");
        const auto freq = std::stoull(line.substr(t2 + 1));
        v.push(line.substr(t1 + 1, t2 - t1 - 1), freq);
      } catch (const std::logic_error&) {
        throw ParseError(where, lineno, "unparsable index or frequency");
      }
    }
    if (v.size() < 3) throw ParseError(where, lineno, "vocabulary needs pad, OOV and at least one token");
    return v;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write vocabulary: " + path);
    write(out);
  }
  static Vocabulary load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open vocabulary: " + path);
    return read(in, path);
  }

  // CRC-64 (ECMA) of the serialized form; identifies the index assignment.
  std::uint64_t hash() const {
    std::ostringstream os;
    write(os);
    const auto s = os.str();
    boost::crc_optimal<64, 0x42F0E1EBA9EA3693ULL, ~0ULL, ~0ULL, true, true> crc;
    crc.process_bytes(s.data(), s.size());
    return crc.checksum();
  }

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_ && freqs_ == o.freqs_; }

 private:
  void push(std::string token, std::uint64_t freq) {
    index_.emplace(token, static_cast<TokenIndex>(tokens_.size()));
    tokens_.push_back(std::move(token));
    freqs_.push_back(freq);
  }

  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> freqs_;
  std::unordered_map<std::string, TokenIndex> index_;
};

// Maps tokens to indices, keeps the first max_len, and left-pads with
// kPadIndex so the real tokens end the sequence.
inline std::vector<TokenIndex> encode(std::span<const std::string> tokens, const Vocabulary& vocab,
                                      const PipelineConfig& cfg) {
  const std::size_t n = std::min(tokens.size(), cfg.max_len);
  std::vector<TokenIndex> out(cfg.max_len, kPadIndex);
  const std::size_t offset = cfg.max_len - n;
  for (std::size_t i = 0; i < n; ++i) out[offset + i] = vocab.index_of(tokens[i]);
  return out;
}

inline TokenizedDocument encode_document(std::span<const std::string> tokens, std::size_t label,
                                         const Vocabulary& vocab, const PipelineConfig& cfg) {
  return {encode(tokens, vocab, cfg), label, tokens.size()};
}

// Drops the pad prefix and maps indices back to tokens.
inline Tokens decode(std::span<const TokenIndex> indices, const Vocabulary& vocab) {
  std::size_t start = 0;
  while (start < indices.size() && indices[start] == kPadIndex) ++start;
  Tokens out;
  for (std::size_t i = start; i < indices.size(); ++i) out.push_back(vocab.token(indices[i]));
  return out;
}

}  // namespace seqtext
