#pragma once

// Model checkpoints.
//
// Layout (all integers little-endian):
//   "SEQTXTCK"              8-byte magic
//   u32 version             currently 1
//   u64 payload_length
//   payload
//   u64 crc64(payload)      CRC-64/XZ
//
// payload:
//   str  config echo        resolved "key = value" lines
//   u64  vocabulary hash
//   str  vocabulary         "index\ttoken\tfrequency" lines
//   str  stopwords          newline separated
//   u64  class count, then one str per class name
//   u32  cell kind, u32 head kind, u64 num_classes, u32 loss, f64 dropout,
//   u8   trainable embedding, u8 literal_rnn, u8 peepholes, u32 rnn nonlinearity
//   u64  block count, then per block: str name, u64 rows, u64 cols, f64[rows*cols]
//
// str = u64 byte length + bytes; f64 = IEEE-754 bits as u64.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <boost/crc.hpp>

#include "seqtext/config.hpp"
#include "seqtext/dataset.hpp"
#include "seqtext/engine.hpp"
#include "seqtext/errors.hpp"
#include "seqtext/model.hpp"
#include "seqtext/text.hpp"

namespace seqtext {

inline constexpr char kCheckpointMagic[8] = {'S', 'E', 'Q', 'T', 'X', 'T', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ClassifierModel model;
  ExperimentConfig config;
  Vocabulary vocab;
  std::set<std::string> stopwords;
  std::vector<std::string> class_names;
  std::uint64_t vocab_hash = 0;

  PipelineConfig pipeline() const {
    PipelineConfig p;
    p.vocab_size = config.vocab_size;
    p.max_len = config.max_len;
    p.lowercase = config.lowercase;
    p.strip_nonalpha = config.strip_nonalpha;
    p.oov_token = config.oov_token;
    p.stopwords = stopwords;
    return p;
  }
};

namespace detail {

using Crc64 = boost::crc_optimal<64, 0x42F0E1EBA9EA3693ULL, ~0ULL, ~0ULL, true, true>;

inline std::uint64_t crc64(std::string_view bytes) {
  Crc64 crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buf_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) buf_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u64(s.size());
    buf_.append(s);
  }
  const std::string& bytes() const noexcept { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() {
    const auto b = take(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[k])) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    const auto b = take(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[k])) << (8 * k);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u64();
    return std::string(take(n));
  }
  bool done() const noexcept { return pos_ == data_.size(); }

 private:
  std::string_view take(std::uint64_t n) {
    if (n > data_.size() - pos_) throw IntegrityError("checkpoint: payload ends unexpectedly");
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ck) {
  detail::ByteWriter p;
  const auto& m = ck.model;
  p.str(ck.config.to_string());
  p.u64(ck.vocab.hash());
  {
    std::ostringstream os;
    ck.vocab.write(os);
    p.str(os.str());
  }
  {
    std::string sw;
    for (const auto& w : ck.stopwords) sw += w + '\n';
    p.str(sw);
  }
  p.u64(ck.class_names.size());
  for (const auto& c : ck.class_names) p.str(c);
  p.u32(static_cast<std::uint32_t>(m.cell_kind()));
  p.u32(static_cast<std::uint32_t>(m.head));
  p.u64(m.num_classes);
  p.u32(static_cast<std::uint32_t>(m.loss));
  p.f64(m.dropout);
  p.u8(m.embedding.trainable ? 1 : 0);
  const auto* rnn = std::get_if<RnnParams>(&m.cell);
  const auto* lstm = std::get_if<LstmParams>(&m.cell);
  p.u8(rnn && rnn->literal_mode ? 1 : 0);
  p.u8(lstm && !lstm->peepholes ? 0 : 1);
  p.u32(static_cast<std::uint32_t>(rnn ? rnn->g : Nonlinearity::Tanh));

  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> shapes;
  std::vector<std::span<const double>> data;
  for_each_block(
      m,
      [&](std::string_view name, const auto& block) {
        if constexpr (std::is_same_v<std::decay_t<decltype(block)>, Matrix>) {
          shapes.push_back({std::string(name), {block.rows(), block.cols()}});
        } else {
          shapes.push_back({std::string(name), {block.size(), 1}});
        }
        data.push_back(block.values());
      },
      Blocks::All);
  p.u64(shapes.size());
  for (std::size_t b = 0; b < shapes.size(); ++b) {
    p.str(shapes[b].first);
    p.u64(shapes[b].second.first);
    p.u64(shapes[b].second.second);
    for (double v : data[b]) p.f64(v);
  }

  detail::ByteWriter file;
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  file.u32(kCheckpointVersion);
  file.u64(p.bytes().size());
  out += file.bytes();
  out += p.bytes();
  detail::ByteWriter tail;
  tail.u64(detail::crc64(p.bytes()));
  out += tail.bytes();
  return out;
}

inline Checkpoint deserialize_checkpoint(std::string_view bytes) {
  constexpr std::size_t head = sizeof kCheckpointMagic + 4 + 8;
  if (bytes.size() < head + 8 || std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
    throw IntegrityError("checkpoint: bad magic or file too short");
  detail::ByteReader hdr(bytes.substr(sizeof kCheckpointMagic, 12));
  if (hdr.u32() != kCheckpointVersion) throw IntegrityError("checkpoint: unsupported version");
  const auto len = hdr.u64();
  if (len != bytes.size() - head - 8)
    throw IntegrityError("checkpoint: length field " + std::to_string(len) + " does not match file size");
  const auto payload = bytes.substr(head, len);
  if (detail::ByteReader(bytes.substr(head + len, 8)).u64() != detail::crc64(payload))
    throw IntegrityError("checkpoint: checksum mismatch");

  detail::ByteReader r(payload);
  Checkpoint ck;
  {
    std::istringstream cfg(r.str());
    ck.config.read(cfg, "checkpoint config");
  }
  ck.vocab_hash = r.u64();
  {
    std::istringstream vs(r.str());
    ck.vocab = Vocabulary::read(vs, "checkpoint vocabulary");
  }
  if (ck.vocab.hash() != ck.vocab_hash) throw IntegrityError("checkpoint: embedded vocabulary hash mismatch");
  {
    std::istringstream sw(r.str());
    ck.stopwords = read_stopwords(sw);
  }
  const auto n_classes = r.u64();
  for (std::uint64_t c = 0; c < n_classes; ++c) ck.class_names.push_back(r.str());

  const auto cell = static_cast<CellKind>(r.u32());
  const auto head_kind = static_cast<HeadKind>(r.u32());
  const auto num_classes = r.u64();
  const auto loss = static_cast<LossKind>(r.u32());
  const auto dropout = r.f64();
  const bool trainable = r.u8() != 0;
  const bool literal = r.u8() != 0;
  const bool peepholes = r.u8() != 0;
  const auto g = static_cast<Nonlinearity>(r.u32());

  struct Block {
    std::string name;
    std::size_t rows, cols;
    std::vector<double> values;
  };
  std::vector<Block> blocks(r.u64());
  for (auto& b : blocks) {
    b.name = r.str();
    b.rows = r.u64();
    b.cols = r.u64();
    if (b.rows != 0 && b.cols > (len / 8) / b.rows) throw IntegrityError("checkpoint: block shape too large");
    b.values.resize(b.rows * b.cols);
    for (auto& v : b.values) v = r.f64();
  }
  if (!r.done()) throw IntegrityError("checkpoint: trailing bytes in payload");

  auto find = [&](const std::string& name) -> const Block& {
    for (const auto& b : blocks)
      if (b.name == name) return b;
    throw IntegrityError("checkpoint: missing block '" + name + "'");
  };
  const auto& emb = find("embedding");
  const auto& dense = find("dense.W");
  const std::size_t hidden = dense.cols;

  ModelSpec spec;
  spec.vocab_size = emb.rows;
  spec.embedding_dim = emb.cols;
  spec.cell = cell;
  spec.hidden_size = hidden;
  spec.dense_size = dense.rows;
  spec.head = head_kind;
  spec.num_classes = num_classes;
  spec.loss = loss;
  spec.rnn_nonlinearity = g;
  spec.literal_rnn = literal;
  spec.peepholes = peepholes;
  spec.dropout = dropout;
  Rng scratch(0);
  try {
    ck.model = build_model(spec, scratch);
  } catch (const std::exception& e) {
    throw IntegrityError(std::string("checkpoint: inconsistent model description: ") + e.what());
  }
  ck.model.embedding.trainable = trainable;

  std::size_t seen = 0;
  for_each_block(
      ck.model,
      [&](std::string_view name, auto& block) {
        const auto& b = find(std::string(name));
        if (b.values.size() != block.values().size())
          throw IntegrityError("checkpoint: block '" + b.name + "' has the wrong shape");
        std::copy(b.values.begin(), b.values.end(), block.values().begin());
        ++seen;
      },
      Blocks::All);
  if (seen != blocks.size()) throw IntegrityError("checkpoint: unexpected extra parameter blocks");
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  const auto bytes = serialize_checkpoint(ck);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

// Refuses datasets encoded with a different vocabulary.
inline void require_same_vocabulary(const Checkpoint& ck, const Dataset& ds) {
  if (ck.vocab_hash != ds.vocab.hash())
    throw DataError("vocabulary mismatch: checkpoint " + hex64(ck.vocab_hash) + " vs dataset " +
                    hex64(ds.vocab.hash()));
}

inline EvalReport evaluate(const Checkpoint& ck, const Dataset& ds, std::span<const std::size_t> idx) {
  require_same_vocabulary(ck, ds);
  return evaluate(ck.model, ds, idx, ck.config.averaging);
}

}  // namespace seqtext
