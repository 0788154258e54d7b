#pragma once

// Word indices, the trainable embedding table and context windows.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dnr/corpus.hpp"
#include "dnr/error.hpp"
#include "dnr/numeric.hpp"

namespace dnr {

// ASCII lowercase with every run of digits collapsed to a single '0'.
inline std::string normalize_token(std::string_view token) {
  std::string out;
  out.reserve(token.size());
  bool in_digits = false;
  for (char c : token) {
    if (c >= '0' && c <= '9') {
      if (!in_digits) out.push_back('0');
      in_digits = true;
      continue;
    }
    in_digits = false;
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::string_view kPadWord = "<PAD>";
  static constexpr std::string_view kUnkWord = "<UNK>";

  Vocabulary() : words_{std::string(kPadWord), std::string(kUnkWord)} { reindex(); }

  // Rebuilds from an index-ordered word list (as stored in a checkpoint).
  static Vocabulary from_words(std::vector<std::string> words) {
    if (words.size() < 2 || words[kPad] != kPadWord || words[kUnk] != kUnkWord) {
      throw DataError("vocabulary must start with " + std::string(kPadWord) + ", " +
                      std::string(kUnkWord));
    }
    Vocabulary v;
    v.words_ = std::move(words);
    v.reindex();
    if (v.index_.size() != v.words_.size()) throw DataError("vocabulary contains duplicate words");
    return v;
  }

  std::size_t size() const { return words_.size(); }

  // Index of an already-normalized word; UNK when absent.
  std::size_t index_of_normalized(const std::string& word) const {
    const auto it = index_.find(word);
    return it == index_.end() ? kUnk : it->second;
  }

  std::size_t lookup(std::string_view token) const {
    return index_of_normalized(normalize_token(token));
  }

  bool contains(std::string_view token) const {
    return index_.count(normalize_token(token)) > 0;
  }

  const std::string& word(std::size_t index) const {
    if (index >= words_.size()) {
      throw InvalidArgument("vocabulary index " + std::to_string(index) + " out of range");
    }
    return words_[index];
  }

  const std::vector<std::string>& words() const { return words_; }

  std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const {
    std::vector<std::size_t> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(lookup(t));
    return out;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  friend Vocabulary build_vocabulary(std::span<const Sentence> sentences);

  void add(const std::string& normalized) {
    if (index_.emplace(normalized, words_.size()).second) words_.push_back(normalized);
  }

  void reindex() {
    index_.clear();
    for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], i);
  }

  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

// PAD, UNK, then normalized words in first-occurrence order.
inline Vocabulary build_vocabulary(std::span<const Sentence> sentences) {
  if (sentences.empty()) throw InvalidArgument("build_vocabulary: empty corpus");
  Vocabulary v;
  for (const Sentence& s : sentences) {
    for (const auto& tok : s.tokens) v.add(normalize_token(tok));
  }
  return v;
}

inline Vocabulary build_vocabulary(const Corpus& corpus) {
  return build_vocabulary(std::span<const Sentence>(corpus.sentences));
}

struct EmbeddingTable {
  Matrix weights;  // one row per vocabulary index
  bool trainable = true;

  std::size_t dim() const { return weights.cols(); }
  std::size_t rows() const { return weights.rows(); }

  static EmbeddingTable random(std::size_t vocab_size, std::size_t dim, SeededRng& rng) {
    return {uniform_init(vocab_size, dim, -1.0, 1.0, rng), true};
  }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;
};

// The `width` indices centered on position t; positions outside the sentence
// are PAD.
inline std::vector<std::size_t> context_window(std::span<const std::size_t> sentence,
                                               std::size_t t, std::size_t width) {
  if (width == 0 || width % 2 == 0) {
    throw InvalidArgument("context_window: width must be odd, got " + std::to_string(width));
  }
  if (t >= sentence.size()) {
    throw InvalidArgument("context_window: position " + std::to_string(t) +
                          " outside sentence of length " + std::to_string(sentence.size()));
  }
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(width / 2);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(sentence.size());
  std::vector<std::size_t> window;
  window.reserve(width);
  for (std::ptrdiff_t k = -half; k <= half; ++k) {
    const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t) + k;
    window.push_back(pos < 0 || pos >= n ? Vocabulary::kPad : sentence[static_cast<std::size_t>(pos)]);
  }
  return window;
}

inline Vector window_embed(std::span<const std::size_t> window, const EmbeddingTable& table) {
  Vector out;
  out.reserve(window.size() * table.dim());
  for (std::size_t idx : window) {
    if (idx >= table.rows()) {
      throw InvalidArgument("window_embed: index " + std::to_string(idx) +
                            " outside table of " + std::to_string(table.rows()) + " rows");
    }
    const auto row = table.weights.row(idx);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

}  // namespace dnr
