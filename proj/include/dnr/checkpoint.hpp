#pragma once

// Binary checkpoint format, version 1. All integers and floats little-endian;
// strings are a u32 byte length followed by UTF-8 bytes.
//
//   magic         8 bytes  "DNRCKPT\0"
//   version       u32      1
//   architecture  u32      0 elman, 1 jordan, 2 bilstm-crf
//   hidden, window, embed_dim, max_epochs, seed          u64 x 5
//   learning_rate, dropout_rate, clip_norm, unk_prob     f64 x 4
//   tag count     u32, then that many strings (index order)
//   vocab size    u64, then that many strings (index order)
//   matrix count  u32, then per matrix:
//       name string, rows u64, cols u64, rows*cols f64 row-major
//
// The first matrix is "embeddings"; the rest follow the architecture's
// parameter order. See docs/FORMATS.md.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dnr/error.hpp"
#include "dnr/io.hpp"
#include "dnr/model.hpp"
#include "dnr/tags.hpp"
#include "dnr/training.hpp"

namespace dnr {

inline constexpr std::array<char, 8> kCheckpointMagic = {'D', 'N', 'R', 'C', 'K', 'P', 'T', '\0'};

namespace detail {

class ByteWriter {
 public:
  explicit ByteWriter(std::ostream& out) : out_(out) {}

  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void raw(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }

 private:
  void le(std::uint64_t v, int bytes) {
    char buf[8];
    for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out_.write(buf, bytes);
  }
  std::ostream& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string data) : data_(std::move(data)) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == data_.size(); }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw DataError("checkpoint truncated");
  }
  std::uint64_t le(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }

  std::string data_;
  std::size_t pos_ = 0;
};

inline void write_matrix(ByteWriter& w, std::string_view name, const Matrix& m) {
  w.str(name);
  w.u64(m.rows());
  w.u64(m.cols());
  for (double v : m.values()) w.f64(v);
}

inline void read_matrix_into(ByteReader& r, std::string_view expected_name, Matrix& m) {
  const std::string name = r.str();
  if (name != expected_name) {
    throw DataError("checkpoint: expected matrix '" + std::string(expected_name) + "', found '" + name + "'");
  }
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  if (rows != m.rows() || cols != m.cols()) {
    throw DataError("checkpoint: matrix '" + name + "' is " + std::to_string(rows) + "x" +
                    std::to_string(cols) + ", expected " + shape_string(m));
  }
  if (r.remaining() / 8 < rows * cols) throw DataError("checkpoint truncated");
  for (double& v : m.values()) v = r.f64();
}

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  detail::ByteWriter w(out);
  w.raw(kCheckpointMagic.data(), kCheckpointMagic.size());
  w.u32(Checkpoint::kFormatVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.architecture()));
  const HyperParams& hp = ckpt.hp;
  w.u64(hp.hidden);
  w.u64(hp.window);
  w.u64(hp.embed_dim);
  w.u64(hp.max_epochs);
  w.u64(hp.seed);
  w.f64(hp.learning_rate);
  w.f64(hp.dropout_rate);
  w.f64(hp.clip_norm);
  w.f64(hp.unk_replace_prob);
  w.u32(static_cast<std::uint32_t>(ckpt.tags.size()));
  for (const auto& t : ckpt.tags) w.str(t);
  w.u64(ckpt.vocabulary.size());
  for (const auto& word : ckpt.vocabulary.words()) w.str(word);

  std::uint32_t count = 1;
  ckpt.model.for_each_dense([&](std::string_view, const Matrix&) { ++count; });
  w.u32(count);
  detail::write_matrix(w, "embeddings", ckpt.model.embeddings().weights);
  ckpt.model.for_each_dense([&](std::string_view name, const Matrix& m) { detail::write_matrix(w, name, m); });
}

inline Checkpoint read_checkpoint(std::string bytes) {
  detail::ByteReader r(std::move(bytes));
  const std::string magic = r.raw(kCheckpointMagic.size());
  if (!std::equal(magic.begin(), magic.end(), kCheckpointMagic.begin())) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != Checkpoint::kFormatVersion) {
    throw DataError("unsupported checkpoint format version " + std::to_string(version));
  }
  const std::uint32_t arch_id = r.u32();
  if (arch_id > static_cast<std::uint32_t>(Architecture::bilstm_crf)) {
    throw DataError("checkpoint: unknown architecture id " + std::to_string(arch_id));
  }
  const auto arch = static_cast<Architecture>(arch_id);

  Checkpoint ckpt;
  HyperParams& hp = ckpt.hp;
  hp.hidden = r.u64();
  hp.window = r.u64();
  hp.embed_dim = r.u64();
  hp.max_epochs = r.u64();
  hp.seed = r.u64();
  hp.learning_rate = r.f64();
  hp.dropout_rate = r.f64();
  hp.clip_norm = r.f64();
  hp.unk_replace_prob = r.f64();
  try {
    validate_hyperparams(hp);
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }

  const std::uint32_t num_tags = r.u32();
  ckpt.tags.clear();
  for (std::uint32_t i = 0; i < num_tags; ++i) ckpt.tags.push_back(r.str());
  if (ckpt.tags != TagSet::names()) throw DataError("checkpoint: tag set does not match this build's tag set");

  const std::uint64_t vocab_size = r.u64();
  if (vocab_size > r.remaining() / 4) throw DataError("checkpoint truncated");
  std::vector<std::string> words;
  words.reserve(vocab_size);
  for (std::uint64_t i = 0; i < vocab_size; ++i) words.push_back(r.str());
  ckpt.vocabulary = Vocabulary::from_words(std::move(words));

  const ModelDims dims{ckpt.vocabulary.size(), hp.embed_dim, hp.window, hp.hidden, TagSet::size()};
  Model model;
  try {
    model = Model::zeros(arch, dims);
  } catch (const InvalidArgument& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }

  std::uint32_t expected = 1;
  model.for_each_dense([&](std::string_view, const Matrix&) { ++expected; });
  const std::uint32_t count = r.u32();
  if (count != expected) {
    throw DataError("checkpoint: " + std::to_string(count) + " matrices, expected " + std::to_string(expected));
  }
  detail::read_matrix_into(r, "embeddings", model.embeddings().weights);
  model.for_each_dense([&](std::string_view name, Matrix& m) { detail::read_matrix_into(r, name, m); });
  if (!r.at_end()) throw DataError("checkpoint: trailing bytes after the last matrix");
  ckpt.model = std::move(model);
  return ckpt;
}

inline std::string checkpoint_bytes(const Checkpoint& ckpt) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, ckpt);
  return out.str();
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  atomic_write_file(path, [&](std::ostream& out) { write_checkpoint(out, ckpt); });
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return read_checkpoint(std::move(bytes));
}

}  // namespace dnr
