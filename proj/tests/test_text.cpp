#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "seqtext/embedding.hpp"
#include "seqtext/text.hpp"

using namespace seqtext;

namespace {

PipelineConfig cfg_with(std::size_t vocab, std::size_t max_len) {
  PipelineConfig c;
  c.vocab_size = vocab;
  c.max_len = max_len;
  return c;
}

Vocabulary vocab_of(const std::vector<std::string>& docs, std::size_t size, std::size_t max_len = 5) {
  const auto c = cfg_with(size, max_len);
  std::vector<Tokens> corpus;
  for (const auto& d : docs) corpus.push_back(clean(d, c));
  return Vocabulary::build(corpus, c);
}

}  // namespace

TEST(Clean, LowercasesStripsAndRemovesStopwords) {
  auto c = cfg_with(10, 5);
  c.stopwords = {"the"};
  EXPECT_EQ(clean("The CAT sat!!", c), (Tokens{"cat", "sat"}));
}

TEST(Clean, EmptyInput) { EXPECT_TRUE(clean("", cfg_with(10, 5)).empty()); }

TEST(Clean, PunctuationBecomesSeparator) {
  EXPECT_EQ(clean("Hello, hello.", cfg_with(10, 5)), (Tokens{"hello", "hello"}));
  EXPECT_EQ(clean("don't<br />stop", cfg_with(10, 5)), (Tokens{"don", "t", "br", "stop"}));
}

TEST(Clean, FlagsOff) {
  auto c = cfg_with(10, 5);
  c.lowercase = false;
  c.strip_nonalpha = false;
  EXPECT_EQ(clean("Hi, There!", c), (Tokens{"Hi,", "There!"}));
}

TEST(Clean, KeepsUtf8Words) {
  EXPECT_EQ(clean("café naïve", cfg_with(10, 5)), (Tokens{"café", "naïve"}));
}

TEST(Stopwords, OnePerLineBlankLinesIgnored) {
  std::istringstream in("the\n\n a \r\nof\n");
  EXPECT_EQ(read_stopwords(in), (std::set<std::string>{"the", "a", "of"}));
}

TEST(Vocabulary, FrequencyOrderAndCap) {
  const auto v = vocab_of({"a a a b b c"}, 4);
  ASSERT_EQ(v.size(), 4u);
  EXPECT_EQ(v.token(0), "<PAD>");
  EXPECT_EQ(v.token(1), "<UNK>");
  EXPECT_EQ(v.index_of("a"), 2u);
  EXPECT_EQ(v.index_of("b"), 3u);
  EXPECT_EQ(v.index_of("c"), kOovIndex);
  EXPECT_FALSE(v.find("c").has_value());
}

TEST(Vocabulary, Singleton) {
  const auto v = vocab_of({"x"}, 3);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v.index_of("x"), 2u);
}

TEST(Vocabulary, TiesBrokenLexicographically) {
  const auto v = vocab_of({"n m"}, 4);
  EXPECT_EQ(v.index_of("m"), 2u);
  EXPECT_EQ(v.index_of("n"), 3u);
}

TEST(Vocabulary, EmptyCorpusAndTinySizeRejected) {
  const auto c = cfg_with(10, 5);
  EXPECT_THROW(Vocabulary::build(std::span<const Tokens>(), c), ConfigError);
  std::vector<Tokens> corpus{{"a"}};
  EXPECT_THROW(Vocabulary::build(corpus, cfg_with(2, 5)), ConfigError);
}

TEST(Vocabulary, ReservedTokensNeverIndexedAsWords) {
  const auto v = vocab_of({"unk unk pad"}, 10);
  EXPECT_EQ(v.index_of("unk"), 2u);
  EXPECT_EQ(v.index_of("<UNK>"), kOovIndex);
  EXPECT_EQ(v.index_of("<PAD>"), kOovIndex);
}

TEST(Vocabulary, MutualInverse) {
  const auto v = vocab_of({"the quick brown fox jumps over the lazy dog the end"}, 100);
  for (TokenIndex i = 2; i < v.size(); ++i) EXPECT_EQ(v.index_of(v.token(i)), i);
}

TEST(Vocabulary, DeterministicAcrossDocumentOrder) {
  const auto a = vocab_of({"b a c", "a c", "d"}, 10);
  const auto b = vocab_of({"d", "a c", "b a c"}, 10);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.hash(), b.hash());
}

TEST(Vocabulary, TextRoundTrip) {
  const auto v = vocab_of({"a a a b b c d"}, 5);
  std::stringstream ss;
  v.write(ss);
  EXPECT_EQ(ss.str(), "0\t<PAD>\t0\n1\t<UNK>\t1\n2\ta\t3\n3\tb\t2\n4\tc\t1\n");
  const auto back = Vocabulary::read(ss);
  EXPECT_EQ(back, v);
  EXPECT_EQ(back.hash(), v.hash());
}

TEST(Vocabulary, ReadRejectsMalformedLinesWithLineNumbers) {
  std::istringstream bad("0\t<PAD>\t0\n1\t<UNK>\t0\n3\tx\t1\n");
  try {
    Vocabulary::read(bad, "v.tsv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::istringstream bad2("0\t<PAD>\t0\n1\t<UNK>\n");
  EXPECT_THROW(Vocabulary::read(bad2), ParseError);
}

TEST(Vocabulary, HashChangesWithAssignment) {
  EXPECT_NE(vocab_of({"a b"}, 10).hash(), vocab_of({"a c"}, 10).hash());
}

TEST(Encode, PrePadsShortSequences) {
  const auto v = vocab_of({"a a b"}, 4);
  const auto c = cfg_with(4, 5);
  const Tokens t{"a", "b"};
  EXPECT_EQ(encode(t, v, c), (std::vector<TokenIndex>{0, 0, 0, 2, 3}));
}

TEST(Encode, TruncatesTheTail) {
  const auto v = vocab_of({"a a a a a a b b b b b c c c c d d d e e f"}, 10);
  const auto c = cfg_with(10, 4);
  const Tokens t{"a", "b", "c", "d", "e", "f"};
  EXPECT_EQ(encode(t, v, c), (std::vector<TokenIndex>{2, 3, 4, 5}));
}

TEST(Encode, UnknownTokenIsOov) {
  const auto v = vocab_of({"a"}, 3);
  const Tokens t{"z"};
  EXPECT_EQ(encode(t, v, cfg_with(3, 2)), (std::vector<TokenIndex>{0, 1}));
}

TEST(Encode, DocumentRecordsOriginalLength) {
  const auto v = vocab_of({"a b c"}, 10);
  const Tokens t{"a", "b", "c", "a", "b", "c", "a"};
  const auto d = encode_document(t, 1, v, cfg_with(10, 4));
  EXPECT_EQ(d.original_length, 7u);
  EXPECT_EQ(d.label, 1u);
  EXPECT_EQ(d.indices.size(), 4u);
}

TEST(Encode, LengthLawAndRoundTripProperty) {
  Rng rng(21);
  std::vector<Tokens> corpus;
  for (int d = 0; d < 30; ++d) {
    Tokens doc;
    for (std::size_t t = 0, n = rng.below(12); t < n; ++t) doc.push_back("w" + std::to_string(rng.below(15)));
    corpus.push_back(doc);
  }
  for (std::size_t max_len : {1u, 3u, 8u, 20u}) {
    const auto c = cfg_with(100, max_len);
    const auto v = Vocabulary::build(corpus, c);
    for (const auto& doc : corpus) {
      const auto ids = encode(doc, v, c);
      EXPECT_EQ(ids.size(), max_len);
      const std::size_t n = std::min(doc.size(), max_len);
      for (std::size_t k = 0; k < max_len - n; ++k) EXPECT_EQ(ids[k], kPadIndex);
      if (doc.size() <= max_len) {
        EXPECT_EQ(decode(ids, v), doc);
      }
    }
  }
}

// ---------------------------------------------------------------------------

TEST(Embedding, DimHeuristic) {
  EXPECT_EQ(embedding_dim_heuristic(10000), 10u);
  EXPECT_EQ(embedding_dim_heuristic(1), 1u);
  EXPECT_EQ(embedding_dim_heuristic(16), 2u);
}

TEST(Embedding, InitRangeAndPadRow) {
  Rng rng(1);
  const auto e = init_embedding(50, 8, rng);
  EXPECT_EQ(e.vocab_size(), 50u);
  EXPECT_EQ(e.dim(), 8u);
  for (auto w : e.weights.row(0)) EXPECT_EQ(w, 0.0);
  for (std::size_t r = 1; r < 50; ++r) {
    for (auto w : e.weights.row(r)) {
      EXPECT_GE(w, 0.0);
      EXPECT_LT(w, 1.0 / 8.0);
    }
  }
}

TEST(Embedding, LookupEqualsOneHotProduct) {
  Rng rng(2);
  const auto e = init_embedding(6, 3, rng);
  const std::vector<TokenIndex> ids{0, 4, 2};
  const auto xs = lookup(ids, e);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    Matrix oh(1, 6);
    oh(0, ids[t]) = 1.0;
    const auto prod = matmul(oh, e.weights);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(xs[t][k], prod(0, k));
  }
}

TEST(Embedding, LookupOutOfRangeNamesPosition) {
  Rng rng(2);
  const auto e = init_embedding(6, 3, rng);
  const std::vector<TokenIndex> ids{1, 9};
  try {
    lookup(ids, e);
    FAIL() << "expected out_of_range";
  } catch (const std::out_of_range& err) {
    EXPECT_NE(std::string(err.what()).find("position 1"), std::string::npos);
  }
}

TEST(Embedding, PretrainedCopiesMatchesAndKeepsOthers) {
  const auto v = vocab_of({"good good bad movie"}, 10);
  Rng rng(3);
  const auto base = init_embedding(v.size(), 2, rng);
  std::istringstream in("3 2\ngood 1.5 -2\nawful 9 9\nmovie 0.25 0.5\n<PAD> 7 7\n");
  const auto r = load_pretrained(in, v, 2, base);
  EXPECT_EQ(r.matched, 2u);
  const auto good = r.embedding.weights.row(v.index_of("good"));
  EXPECT_EQ(good[0], 1.5);
  EXPECT_EQ(good[1], -2.0);
  const auto bad_row = r.embedding.weights.row(v.index_of("bad"));
  const auto base_row = base.weights.row(v.index_of("bad"));
  EXPECT_TRUE(std::equal(bad_row.begin(), bad_row.end(), base_row.begin()));
  for (auto w : r.embedding.weights.row(0)) EXPECT_EQ(w, 0.0);
}

TEST(Embedding, PretrainedDimensionMismatch) {
  const auto v = vocab_of({"good"}, 10);
  Rng rng(3);
  const auto base = init_embedding(v.size(), 2, rng);
  std::istringstream header("1 3\ngood 1 2 3\n");
  EXPECT_THROW(load_pretrained(header, v, 2, base), ConfigError);
  std::istringstream row("good 1 2 3\n");
  try {
    load_pretrained(row, v, 2, base);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
  std::istringstream junk("good 1 x\n");
  EXPECT_THROW(load_pretrained(junk, v, 2, base), ParseError);
  EXPECT_THROW(load_pretrained(row, v, 3, base), ConfigError);
}
