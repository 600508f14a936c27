#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "seqtext/errors.hpp"
#include "seqtext/numeric.hpp"
#include "seqtext/random.hpp"
#include "seqtext/text.hpp"

namespace seqtext {

struct EmbeddingMatrix {
  Matrix weights;  // vocab_size x dim, row 0 is the pad row and stays zero
  bool trainable = true;

  std::size_t vocab_size() const noexcept { return weights.rows(); }
  std::size_t dim() const noexcept { return weights.cols(); }
};

// round(vocab_size^(1/4)), at least 1.
inline std::size_t embedding_dim_heuristic(std::size_t vocab_size) {
  const auto d = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(vocab_size), 0.25)));
  return d < 1 ? 1 : d;
}

// Rows drawn from U(0,1) and divided by dim, which keeps the summed input to
// the first recurrent layer O(1) instead of O(dim).
inline EmbeddingMatrix init_embedding(std::size_t vocab_size, std::size_t dim, Rng& rng) {
  EmbeddingMatrix e{Matrix(vocab_size, dim), true};
  for (std::size_t r = 1; r < vocab_size; ++r)
    for (auto& w : e.weights.row(r)) w = rng.uniform() / static_cast<double>(dim);
  return e;
}

// Row selection; equal to one_hot(indices[t]) · weights.
inline std::vector<Vector> lookup(std::span<const TokenIndex> indices, const EmbeddingMatrix& emb) {
  std::vector<Vector> out;
  out.reserve(indices.size());
  for (std::size_t t = 0; t < indices.size(); ++t) {
    if (indices[t] >= emb.vocab_size()) {
      throw std::out_of_range("embedding lookup: index " + std::to_string(indices[t]) + " at position " +
                              std::to_string(t) + " exceeds vocabulary size " +
                              std::to_string(emb.vocab_size()));
    }
    const auto r = emb.weights.row(indices[t]);
    out.emplace_back(std::vector<double>(r.begin(), r.end()));
  }
  return out;
}

struct PretrainedLoad {
  EmbeddingMatrix embedding;
  std::size_t matched = 0;
};

// Reads "token v1 ... v_dim" lines (optional "count dim" header) and copies
// the rows of tokens present in the vocabulary into `base`.
inline PretrainedLoad load_pretrained(std::istream& in, const Vocabulary& vocab, std::size_t dim,
                                      EmbeddingMatrix base, const std::string& where = "vectors") {
  if (base.vocab_size() != vocab.size() || base.dim() != dim) {
    throw ConfigError("pretrained load: base embedding is " + std::to_string(base.vocab_size()) + "x" +
                      std::to_string(base.dim()) + " but vocabulary/dim require " +
                      std::to_string(vocab.size()) + "x" + std::to_string(dim));
  }
  PretrainedLoad result{std::move(base), 0};
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> fields;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    fields.clear();
    std::istringstream ls(line);
    for (std::string f; ls >> f;) fields.push_back(std::move(f));
    if (fields.empty()) continue;

    if (lineno == 1 && fields.size() == 2) {
      std::size_t p0 = 0, p1 = 0;
      try {
        std::stoull(fields[0], &p0);
        const auto header_dim = std::stoull(fields[1], &p1);
        if (p0 == fields[0].size() && p1 == fields[1].size()) {
          if (header_dim != dim)
            throw ConfigError("pretrained vectors are " + std::to_string(header_dim) + "-dimensional, expected " +
                              std::to_string(dim));
          continue;
        }
      } catch (const std::logic_error& e) {
        if (dynamic_cast<const ConfigError*>(&e)) throw;
      }
    }

    if (fields.size() != dim + 1) {
      throw ParseError(where, lineno,
                       "expected token and " + std::to_string(dim) + " values, got " +
                           std::to_string(fields.size() - 1));
    }
    Vector row(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      std::size_t pos = 0;
      try {
        row[k] = std::stod(fields[k + 1], &pos);
      } catch (const std::logic_error&) {
        pos = 0;
      }
      if (pos != fields[k + 1].size() || !std::isfinite(row[k]))
        throw ParseError(where, lineno, "unparsable value '" + fields[k + 1] + "'");
    }
    if (auto idx = vocab.find(fields[0])) {
      auto dst = result.embedding.weights.row(*idx);
      std::copy(row.begin(), row.end(), dst.begin());
      ++result.matched;
    }
  }
  for (auto& w : result.embedding.weights.row(kPadIndex)) w = 0.0;
  return result;
}

inline PretrainedLoad load_pretrained(const std::string& path, const Vocabulary& vocab, std::size_t dim,
                                      EmbeddingMatrix base) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pretrained vectors: " + path);
  return load_pretrained(in, vocab, dim, std::move(base), path);
}

}  // namespace seqtext
