#pragma once

// Sentences, the two-column IOB interchange format, the offset-preserving
// tokenizer and corpus statistics.

#include <array>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dnr/error.hpp"
#include "dnr/evaluation.hpp"
#include "dnr/tags.hpp"

namespace dnr {

// Offsets count Unicode code points and are inclusive at both ends.
struct Token {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::vector<std::string> tokens;
  std::optional<std::vector<TagId>> tags;  // gold tags, one per token
  std::string id;
  std::string document;

  std::size_t size() const { return tokens.size(); }
  bool tagged() const { return tags.has_value(); }

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Corpus {
  std::vector<Sentence> sentences;
  std::string provenance;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }

  bool fully_tagged() const {
    for (const auto& s : sentences) {
      if (!s.tagged()) return false;
    }
    return true;
  }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

namespace detail {

inline std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline bool is_blank(std::string_view line) {
  for (char c : line) {
    if (c != ' ' && c != '\t' && c != '\r' && c != '\f' && c != '\v') return false;
  }
  return true;
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t from = 0;
  while (true) {
    const std::size_t tab = line.find('\t', from);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(from));
      return fields;
    }
    fields.push_back(line.substr(from, tab - from));
    from = tab + 1;
  }
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

// token<TAB>tag per line, blank line between sentences.
inline Corpus read_column_corpus(std::istream& in, const std::string& source = "<stream>") {
  Corpus corpus;
  Sentence current;
  current.tags.emplace();
  std::string raw;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (!current.tokens.empty()) corpus.sentences.push_back(std::move(current));
    current = Sentence{};
    current.tags.emplace();
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = detail::trim_cr(raw);
    if (detail::is_blank(line)) {
      flush();
      continue;
    }
    const auto fields = detail::split_tabs(line);
    if (fields.size() != 2 || fields[0].empty()) {
      throw DataError(source + ":" + std::to_string(line_no) + ": expected 'token<TAB>tag', got " +
                      std::to_string(fields.size()) + " field(s)");
    }
    const auto tag = TagSet::find(fields[1]);
    if (!tag) {
      throw DataError(source + ":" + std::to_string(line_no) + ": unknown tag '" +
                      std::string(fields[1]) + "'");
    }
    current.tokens.emplace_back(fields[0]);
    current.tags->push_back(*tag);
  }
  flush();
  return corpus;
}

inline Corpus load_column_corpus(const std::string& path) {
  auto in = detail::open_input(path);
  return read_column_corpus(in, path);
}

// One token per line without tags; blank line between sentences.
inline Corpus read_token_corpus(std::istream& in, const std::string& source = "<stream>") {
  Corpus corpus;
  Sentence current;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = detail::trim_cr(raw);
    if (detail::is_blank(line)) {
      if (!current.tokens.empty()) corpus.sentences.push_back(std::move(current));
      current = Sentence{};
      continue;
    }
    if (line.find('\t') != std::string_view::npos) {
      throw DataError(source + ":" + std::to_string(line_no) +
                      ": expected a single token per line");
    }
    current.tokens.emplace_back(line);
  }
  if (!current.tokens.empty()) corpus.sentences.push_back(std::move(current));
  return corpus;
}

// Column corpus when the first non-blank line has a tab, token corpus otherwise.
inline Corpus load_corpus(const std::string& path) {
  std::string content;
  {
    auto in = detail::open_input(path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    content = buffer.str();
  }
  std::istringstream probe(content);
  std::string raw;
  bool tabbed = false;
  while (std::getline(probe, raw)) {
    if (detail::is_blank(detail::trim_cr(raw))) continue;
    tabbed = raw.find('\t') != std::string::npos;
    break;
  }
  std::istringstream in(content);
  return tabbed ? read_column_corpus(in, path) : read_token_corpus(in, path);
}

inline void write_column_corpus(std::ostream& out, const Corpus& corpus) {
  for (const Sentence& s : corpus.sentences) {
    if (!s.tagged() || s.tags->size() != s.tokens.size()) {
      throw InvalidArgument("write_column_corpus: sentence '" + s.id + "' has no tag per token");
    }
    if (s.tokens.empty()) continue;
    for (std::size_t t = 0; t < s.tokens.size(); ++t) {
      out << s.tokens[t] << '\t' << TagSet::name((*s.tags)[t]) << '\n';
    }
    out << '\n';
  }
}

namespace detail {

struct CodePoint {
  char32_t value;
  std::size_t byte_offset;
};

// Invalid bytes decode to themselves so offsets stay defined on any input.
inline std::vector<CodePoint> decode_utf8(std::string_view text) {
  std::vector<CodePoint> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    char32_t cp = lead;
    if (lead >= 0xC0 && lead < 0xE0) {
      len = 2;
      cp = lead & 0x1F;
    } else if (lead >= 0xE0 && lead < 0xF0) {
      len = 3;
      cp = lead & 0x0F;
    } else if (lead >= 0xF0 && lead < 0xF8) {
      len = 4;
      cp = lead & 0x07;
    }
    bool valid = i + len <= text.size();
    for (std::size_t k = 1; valid && k < len; ++k) {
      const auto cont = static_cast<unsigned char>(text[i + k]);
      if ((cont & 0xC0) != 0x80) {
        valid = false;
      } else {
        cp = (cp << 6) | (cont & 0x3F);
      }
    }
    if (!valid) {
      len = 1;
      cp = lead;
    }
    out.push_back({cp, i});
    i += len;
  }
  return out;
}

inline bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' ||
         c == U'\u00A0';
}

inline bool is_punct(char32_t c) {
  return (c >= U'!' && c <= U'/') || (c >= U':' && c <= U'@') || (c >= U'[' && c <= U'`') ||
         (c >= U'{' && c <= U'~');
}

}  // namespace detail

// Whitespace split, then leading and trailing ASCII punctuation peeled off one
// character per token.
inline std::vector<Token> tokenize_with_offsets(std::string_view text) {
  const auto cps = detail::decode_utf8(text);
  std::vector<Token> tokens;
  auto emit = [&](std::size_t first, std::size_t last) {
    const std::size_t from = cps[first].byte_offset;
    const std::size_t to = last + 1 < cps.size() ? cps[last + 1].byte_offset : text.size();
    tokens.push_back({std::string(text.substr(from, to - from)), first, last});
  };
  std::size_t i = 0;
  while (i < cps.size()) {
    if (detail::is_space(cps[i].value)) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end + 1 < cps.size() && !detail::is_space(cps[end + 1].value)) ++end;
    std::size_t lo = i;
    while (lo <= end && detail::is_punct(cps[lo].value)) {
      emit(lo, lo);
      ++lo;
    }
    std::size_t hi = end + 1;  // one past the core
    while (hi > lo && detail::is_punct(cps[hi - 1].value)) --hi;
    if (lo < hi) emit(lo, hi - 1);
    for (std::size_t k = hi; k <= end && k >= lo; ++k) emit(k, k);
    i = end + 1;
  }
  return tokens;
}

// Substring of `text` between code-point offsets [start, end].
inline std::string slice_code_points(std::string_view text, std::size_t start, std::size_t end) {
  const auto cps = detail::decode_utf8(text);
  if (start > end || end >= cps.size()) {
    throw InvalidArgument("slice_code_points: [" + std::to_string(start) + ", " +
                          std::to_string(end) + "] outside text of " +
                          std::to_string(cps.size()) + " code points");
  }
  const std::size_t from = cps[start].byte_offset;
  const std::size_t to = end + 1 < cps.size() ? cps[end + 1].byte_offset : text.size();
  return std::string(text.substr(from, to - from));
}

// One sentence per line, tokenized with tokenize_with_offsets.
inline Corpus read_raw_text(std::istream& in) {
  Corpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    Sentence s;
    for (auto& tok : tokenize_with_offsets(detail::trim_cr(line))) s.tokens.push_back(tok.text);
    if (!s.tokens.empty()) corpus.sentences.push_back(std::move(s));
  }
  return corpus;
}

inline Corpus load_raw_text(const std::string& path) {
  auto in = detail::open_input(path);
  return read_raw_text(in);
}

struct CorpusStats {
  std::size_t documents = 0;
  std::size_t sentences = 0;
  std::array<std::size_t, kNumEntityClasses> spans{};

  std::size_t spans_of(EntityClass c) const { return spans[static_cast<std::size_t>(c)]; }
};

// Documents are counted by distinct non-empty document ids, so a plain column
// corpus reports zero documents.
inline CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats stats;
  std::set<std::string> documents;
  for (const Sentence& s : corpus.sentences) {
    ++stats.sentences;
    if (!s.document.empty()) documents.insert(s.document);
    if (!s.tagged()) continue;
    for (const EntitySpan& span : iob_to_spans(std::span<const TagId>(*s.tags))) {
      ++stats.spans[static_cast<std::size_t>(span.cls)];
    }
  }
  stats.documents = documents.size();
  return stats;
}

}  // namespace dnr
