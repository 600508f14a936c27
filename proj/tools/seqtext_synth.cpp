// seqtext-synth: write a seeded synthetic CSV corpus (text,label).
//
//   separable  C disjoint 20-token class sets plus shared filler
//   review     binary, IMDB-shaped
//   news       five topics, BBC-shaped

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include "seqtext/synthetic.hpp"

using namespace seqtext;

int main(int argc, char** argv) {
  CLI::App app{"seqtext-synth: seeded synthetic text corpora as CSV"};
  std::string kind = "separable", out;
  std::size_t docs = 32, classes = 2;
  std::uint64_t seed = 7;
  app.add_option("kind", kind, "separable, review or news")->check(CLI::IsMember({"separable", "review", "news"}));
  app.add_option("--docs", docs, "number of documents")->check(CLI::PositiveNumber);
  app.add_option("--classes", classes, "class count (separable only)")->check(CLI::Range(2, 26));
  app.add_option("--seed", seed, "generator seed");
  app.add_option("-o,--out", out, "output CSV (default stdout)");
  CLI11_PARSE(app, argc, argv);

  TextCorpus corpus;
  if (kind == "separable") {
    corpus = separable_corpus(classes, docs, seed);
  } else if (kind == "review") {
    corpus = lexical_corpus(review_corpus_spec(docs, seed));
  } else {
    corpus = lexical_corpus(news_corpus_spec(docs, seed));
  }
  if (out.empty()) {
    corpus.write_csv(std::cout);
    return 0;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) {
    std::cerr << "error: cannot write " << out << '\n';
    return 2;
  }
  corpus.write_csv(f);
  return f ? 0 : 2;
}
