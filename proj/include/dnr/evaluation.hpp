#pragma once

// IOB <-> span conversion and strict entity-level scoring.

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dnr/error.hpp"
#include "dnr/tags.hpp"

namespace dnr {

// Token indices, both inclusive.
struct EntitySpan {
  EntityClass cls;
  std::size_t start;
  std::size_t end;

  friend auto operator<=>(const EntitySpan& a, const EntitySpan& b) {
    if (auto c = a.start <=> b.start; c != 0) return c;
    if (auto c = a.end <=> b.end; c != 0) return c;
    return a.cls <=> b.cls;
  }
  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
};

// Maximal spans in start order. An I-X that does not continue a span of class
// X opens a new span, as conlleval does.
inline std::vector<EntitySpan> iob_to_spans(std::span<const TagId> tags) {
  std::vector<EntitySpan> spans;
  bool open = false;
  for (std::size_t t = 0; t < tags.size(); ++t) {
    const TagId tag = tags[t];
    if (tag >= TagSet::size()) {
      throw DataError("iob_to_spans: tag index " + std::to_string(tag) + " out of range");
    }
    if (TagSet::is_outside(tag)) {
      open = false;
      continue;
    }
    const EntityClass cls = TagSet::entity_class(tag);
    if (TagSet::is_inside(tag) && open && spans.back().cls == cls) {
      spans.back().end = t;
    } else {
      spans.push_back({cls, t, t});
      open = true;
    }
  }
  return spans;
}

inline std::vector<EntitySpan> iob_to_spans(std::span<const std::string> tags) {
  std::vector<TagId> ids;
  ids.reserve(tags.size());
  for (const auto& tag : tags) ids.push_back(TagSet::parse(tag));
  return iob_to_spans(std::span<const TagId>(ids));
}

inline std::vector<TagId> spans_to_iob(std::span<const EntitySpan> spans, std::size_t length) {
  std::vector<EntitySpan> sorted(spans.begin(), spans.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<TagId> tags(length, TagSet::kOutside);
  std::size_t next_free = 0;
  for (const EntitySpan& s : sorted) {
    if (s.start > s.end || s.end >= length) {
      throw InvalidArgument("spans_to_iob: span [" + std::to_string(s.start) + ", " +
                            std::to_string(s.end) + "] outside sentence of length " +
                            std::to_string(length));
    }
    if (s.start < next_free) {
      throw InvalidArgument("spans_to_iob: span starting at " + std::to_string(s.start) +
                            " overlaps a previous span");
    }
    tags[s.start] = TagSet::begin_tag(s.cls);
    for (std::size_t t = s.start + 1; t <= s.end; ++t) tags[t] = TagSet::inside_tag(s.cls);
    next_free = s.end + 1;
  }
  return tags;
}

struct ClassScores {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;

  // Percentages; 0 when the denominator is empty.
  double precision() const {
    const std::size_t predicted = true_positives + false_positives;
    return predicted == 0 ? 0.0 : 100.0 * static_cast<double>(true_positives) / predicted;
  }
  double recall() const {
    const std::size_t gold = true_positives + false_negatives;
    return gold == 0 ? 0.0 : 100.0 * static_cast<double>(true_positives) / gold;
  }
  double f1() const {
    const double p = precision();
    const double r = recall();
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }

  ClassScores& operator+=(const ClassScores& o) {
    true_positives += o.true_positives;
    false_positives += o.false_positives;
    false_negatives += o.false_negatives;
    return *this;
  }
};

struct EvalReport {
  std::array<ClassScores, kNumEntityClasses> per_class{};
  ClassScores micro;

  const ClassScores& of(EntityClass c) const { return per_class[static_cast<std::size_t>(c)]; }
  ClassScores& of(EntityClass c) { return per_class[static_cast<std::size_t>(c)]; }
};

using SpansPerSentence = std::vector<std::vector<EntitySpan>>;

// A prediction is a true positive only when an unmatched gold span in the
// same sentence has the same class, start and end.
inline EvalReport evaluate_strict(const SpansPerSentence& gold, const SpansPerSentence& predicted) {
  if (gold.size() != predicted.size()) {
    throw InvalidArgument("evaluate_strict: " + std::to_string(gold.size()) +
                          " gold sentences vs " + std::to_string(predicted.size()) +
                          " predicted");
  }
  EvalReport report;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    std::vector<bool> matched(gold[s].size(), false);
    for (const EntitySpan& p : predicted[s]) {
      bool hit = false;
      for (std::size_t g = 0; g < gold[s].size(); ++g) {
        if (!matched[g] && gold[s][g] == p) {
          matched[g] = true;
          hit = true;
          break;
        }
      }
      auto& scores = report.of(p.cls);
      if (hit) {
        ++scores.true_positives;
      } else {
        ++scores.false_positives;
      }
    }
    for (std::size_t g = 0; g < gold[s].size(); ++g) {
      if (!matched[g]) ++report.of(gold[s][g].cls).false_negatives;
    }
  }
  for (const auto& c : report.per_class) report.micro += c;
  return report;
}

inline EvalReport evaluate_tags(const std::vector<std::vector<TagId>>& gold,
                                const std::vector<std::vector<TagId>>& predicted) {
  if (gold.size() != predicted.size()) {
    throw InvalidArgument("evaluate_tags: " + std::to_string(gold.size()) +
                          " gold sentences vs " + std::to_string(predicted.size()) +
                          " predicted");
  }
  SpansPerSentence g, p;
  g.reserve(gold.size());
  p.reserve(predicted.size());
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != predicted[s].size()) {
      throw InvalidArgument("evaluate_tags: sentence " + std::to_string(s) +
                            " length mismatch");
    }
    g.push_back(iob_to_spans(std::span<const TagId>(gold[s])));
    p.push_back(iob_to_spans(std::span<const TagId>(predicted[s])));
  }
  return evaluate_strict(g, p);
}

}  // namespace dnr
