#pragma once

// The fixed IOB tag set over the four drug-name entity classes.
//
// Tag indices are part of the checkpoint contract and the argmax tie-break:
//   0 O, then B-/I- pairs for the classes in alphabetical order
//   1 B-brand  2 I-brand  3 B-drug  4 I-drug
//   5 B-drug_n 6 I-drug_n 7 B-group 8 I-group

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dnr/error.hpp"

namespace dnr {

enum class EntityClass : std::size_t { brand = 0, drug = 1, drug_n = 2, group = 3 };

inline constexpr std::size_t kNumEntityClasses = 4;

inline constexpr std::array<EntityClass, kNumEntityClasses> kAllClasses = {
    EntityClass::brand, EntityClass::drug, EntityClass::drug_n, EntityClass::group};

// Row order of the corpus statistics table.
inline constexpr std::array<EntityClass, kNumEntityClasses> kStatsRowOrder = {
    EntityClass::drug_n, EntityClass::group, EntityClass::brand, EntityClass::drug};

// Row order of the per-entity results table.
inline constexpr std::array<EntityClass, kNumEntityClasses> kReportRowOrder = {
    EntityClass::group, EntityClass::drug, EntityClass::brand, EntityClass::drug_n};

inline std::string_view class_name(EntityClass c) {
  switch (c) {
    case EntityClass::brand: return "brand";
    case EntityClass::drug: return "drug";
    case EntityClass::drug_n: return "drug_n";
    case EntityClass::group: return "group";
  }
  return "?";
}

inline std::optional<EntityClass> parse_class(std::string_view name) {
  for (EntityClass c : kAllClasses) {
    if (class_name(c) == name) return c;
  }
  return std::nullopt;
}

using TagId = std::size_t;

struct TagSet {
  static constexpr TagId kOutside = 0;
  static constexpr std::size_t kSize = 1 + 2 * kNumEntityClasses;

  static constexpr std::size_t size() { return kSize; }

  static TagId begin_tag(EntityClass c) { return 1 + 2 * static_cast<std::size_t>(c); }
  static TagId inside_tag(EntityClass c) { return 2 + 2 * static_cast<std::size_t>(c); }

  static bool is_outside(TagId t) { return t == kOutside; }
  static bool is_begin(TagId t) { return t != kOutside && t % 2 == 1; }
  static bool is_inside(TagId t) { return t != kOutside && t % 2 == 0; }

  static EntityClass entity_class(TagId t) {
    if (t == kOutside || t >= kSize) {
      throw InvalidArgument("TagSet: tag " + std::to_string(t) + " has no entity class");
    }
    return static_cast<EntityClass>((t - 1) / 2);
  }

  static std::string name(TagId t) {
    if (t >= kSize) throw InvalidArgument("TagSet: tag index " + std::to_string(t) + " out of range");
    if (t == kOutside) return "O";
    return std::string(is_begin(t) ? "B-" : "I-") + std::string(class_name(entity_class(t)));
  }

  static std::optional<TagId> find(std::string_view tag) {
    if (tag == "O") return kOutside;
    if (tag.size() < 3 || tag[1] != '-' || (tag[0] != 'B' && tag[0] != 'I')) return std::nullopt;
    const auto c = parse_class(tag.substr(2));
    if (!c) return std::nullopt;
    return tag[0] == 'B' ? begin_tag(*c) : inside_tag(*c);
  }

  static TagId parse(std::string_view tag) {
    const auto id = find(tag);
    if (!id) throw DataError("unknown tag '" + std::string(tag) + "'");
    return *id;
  }

  static std::vector<std::string> names() {
    std::vector<std::string> out;
    for (TagId t = 0; t < kSize; ++t) out.push_back(name(t));
    return out;
  }

  // Whether `next` may follow `prev` in well-formed IOB. `prev` == nullopt is
  // the sentence start.
  static bool allowed_bigram(std::optional<TagId> prev, TagId next) {
    if (!is_inside(next)) return true;
    if (!prev || *prev == kOutside) return false;
    return entity_class(*prev) == entity_class(next);
  }
};

}  // namespace dnr
