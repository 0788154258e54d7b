#pragma once

// Conversion of DDI-style XML (SemEval-2013 Task 9.1 layout) into tokenized
// IOB sentences.
//
//   <document id="...">
//     <sentence id="..." text="...">
//       <entity id="..." charOffset="0-9" type="drug" text="..."/>
//       <pair .../>            (ignored)
//     </sentence>
//   </document>
//
// charOffset is inclusive and counts code points; discontinuous mentions list
// fragments separated by ';'. Only the first fragment is tagged.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "dnr/corpus.hpp"
#include "dnr/error.hpp"
#include "dnr/tags.hpp"

namespace dnr {

struct ConversionResult {
  Corpus corpus;
  std::vector<std::string> warnings;
  std::size_t documents = 0;
};

namespace detail {

struct CharRange {
  std::size_t start;
  std::size_t end;
};

inline std::size_t parse_offset(const std::string& text, const std::string& where) {
  if (text.empty() || !std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    throw DataError(where + ": malformed charOffset component '" + text + "'");
  }
  return std::stoul(text);
}

// Returns the first fragment and whether further fragments were present.
inline std::pair<CharRange, bool> parse_char_offset(const std::string& spec, const std::string& where) {
  const std::size_t semi = spec.find(';');
  const std::string first = spec.substr(0, semi);
  const std::size_t dash = first.find('-');
  if (dash == std::string::npos) throw DataError(where + ": malformed charOffset '" + spec + "'");
  CharRange range{parse_offset(first.substr(0, dash), where),
                  parse_offset(first.substr(dash + 1), where)};
  if (range.start > range.end) throw DataError(where + ": inverted charOffset '" + spec + "'");
  return {range, semi != std::string::npos};
}

struct PendingEntity {
  std::string id;
  EntityClass cls;
  CharRange range;
  std::size_t order;
};

}  // namespace detail

// Tags one sentence's tokens from character-offset entities. Entities that
// overlap an already accepted, longer (or equally long, earlier) entity are
// dropped with a warning; misaligned boundaries tag every overlapping token
// and record a warning.
inline std::vector<TagId> tag_tokens(const std::vector<Token>& tokens,
                                     std::vector<detail::PendingEntity> entities,
                                     const std::string& sentence_id,
                                     std::vector<std::string>& warnings) {
  std::vector<TagId> tags(tokens.size(), TagSet::kOutside);
  std::vector<bool> claimed(tokens.size(), false);
  std::stable_sort(entities.begin(), entities.end(), [](const auto& a, const auto& b) {
    const std::size_t la = a.range.end - a.range.start;
    const std::size_t lb = b.range.end - b.range.start;
    if (la != lb) return la > lb;
    return a.order < b.order;
  });
  for (const auto& e : entities) {
    std::size_t first = tokens.size();
    std::size_t last = 0;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (tokens[t].start <= e.range.end && tokens[t].end >= e.range.start) {
        first = std::min(first, t);
        last = t;
      }
    }
    if (first == tokens.size()) {
      warnings.push_back(sentence_id + ": entity " + e.id + " covers no token; dropped");
      continue;
    }
    bool collides = false;
    for (std::size_t t = first; t <= last; ++t) collides = collides || claimed[t];
    if (collides) {
      warnings.push_back(sentence_id + ": entity " + e.id +
                         " overlaps a longer or earlier entity; dropped");
      continue;
    }
    if (tokens[first].start != e.range.start || tokens[last].end != e.range.end) {
      warnings.push_back(sentence_id + ": entity " + e.id +
                         " is not aligned to token boundaries; covering tokens tagged");
    }
    tags[first] = TagSet::begin_tag(e.cls);
    claimed[first] = true;
    for (std::size_t t = first + 1; t <= last; ++t) {
      tags[t] = TagSet::inside_tag(e.cls);
      claimed[t] = true;
    }
  }
  return tags;
}

inline ConversionResult convert_ddi_xml(std::istream& in, const std::string& source) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw DataError(source + ": malformed XML: " + e.message());
  }
  ConversionResult result;
  const auto document = tree.get_child_optional("document");
  if (!document) throw DataError(source + ": no <document> root element");
  const std::string doc_id = document->get<std::string>("<xmlattr>.id", source);
  result.documents = 1;

  for (const auto& [name, node] : *document) {
    if (name != "sentence") continue;
    const std::string sid = node.get<std::string>("<xmlattr>.id", doc_id + ".s?");
    const auto text = node.get_optional<std::string>("<xmlattr>.text");
    if (!text) throw DataError(source + ": sentence " + sid + " has no text attribute");

    std::vector<detail::PendingEntity> entities;
    for (const auto& [child_name, child] : node) {
      if (child_name != "entity") continue;
      const std::string eid = child.get<std::string>("<xmlattr>.id", sid + ".e?");
      const std::string type = child.get<std::string>("<xmlattr>.type", "");
      const auto cls = parse_class(type);
      if (!cls) throw DataError(source + ": entity " + eid + " has unsupported class '" + type + "'");
      const auto offset = child.get_optional<std::string>("<xmlattr>.charOffset");
      if (!offset) throw DataError(source + ": entity " + eid + " has no charOffset");
      auto [range, discontinuous] = detail::parse_char_offset(*offset, source + ": entity " + eid);
      if (discontinuous) {
        result.warnings.push_back(sid + ": entity " + eid + " is discontinuous ('" + *offset +
                                  "'); only the first fragment is tagged");
      }
      entities.push_back({eid, *cls, range, entities.size()});
    }

    const auto tokens = tokenize_with_offsets(*text);
    if (tokens.empty()) {
      result.warnings.push_back(sid + ": empty sentence skipped");
      continue;
    }
    Sentence sentence;
    sentence.id = sid;
    sentence.document = doc_id;
    sentence.tags = tag_tokens(tokens, std::move(entities), sid, result.warnings);
    for (const auto& tok : tokens) sentence.tokens.push_back(tok.text);
    result.corpus.sentences.push_back(std::move(sentence));
  }
  return result;
}

inline ConversionResult convert_ddi_xml(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return convert_ddi_xml(in, path);
}

// Every *.xml file under `dir` (recursively), in path order.
inline ConversionResult convert_ddi_directory(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("'" + dir + "' is not a readable directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  ConversionResult merged;
  merged.corpus.provenance = fs::path(dir).filename().string();
  for (const auto& file : files) {
    auto part = convert_ddi_xml(file.string());
    merged.documents += part.documents;
    for (auto& s : part.corpus.sentences) merged.corpus.sentences.push_back(std::move(s));
    for (auto& w : part.warnings) merged.warnings.push_back(std::move(w));
  }
  if (files.empty()) merged.warnings.push_back("'" + dir + "' contains no .xml files");
  return merged;
}

}  // namespace dnr
