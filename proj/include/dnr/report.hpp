#pragma once

// Human-readable tables and JSON documents for evaluation reports, corpus
// statistics, training records and search logs. Field names are documented in
// docs/FORMATS.md.

#include <cstdio>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "dnr/corpus.hpp"
#include "dnr/evaluation.hpp"
#include "dnr/tags.hpp"
#include "dnr/training.hpp"

namespace dnr {

inline std::string format_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

// Per-entity rows (group, drug, brand, drug_n) followed by the micro average.
inline std::string render_eval_table(const EvalReport& report, std::string_view title = {}) {
  std::string out;
  char line[128];
  if (!title.empty()) out += std::string(title) + "\n";
  std::snprintf(line, sizeof line, "%-8s %10s %10s %10s %6s %6s %6s\n", "entity", "precision", "recall",
                "f1", "tp", "fp", "fn");
  out += line;
  auto row = [&](std::string_view name, const ClassScores& s) {
    std::snprintf(line, sizeof line, "%-8s %10s %10s %10s %6zu %6zu %6zu\n", std::string(name).c_str(),
                  format_percent(s.precision()).c_str(), format_percent(s.recall()).c_str(),
                  format_percent(s.f1()).c_str(), s.true_positives, s.false_positives, s.false_negatives);
    out += line;
  };
  for (EntityClass c : kReportRowOrder) row(class_name(c), report.of(c));
  row("micro", report.micro);
  return out;
}

inline nlohmann::ordered_json scores_json(const ClassScores& s) {
  nlohmann::ordered_json j;
  j["tp"] = s.true_positives;
  j["fp"] = s.false_positives;
  j["fn"] = s.false_negatives;
  j["precision"] = s.precision();
  j["recall"] = s.recall();
  j["f1"] = s.f1();
  return j;
}

inline nlohmann::ordered_json eval_report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["micro"] = scores_json(report.micro);
  auto& per = j["per_class"];
  per = nlohmann::ordered_json::object();
  for (EntityClass c : kReportRowOrder) per[std::string(class_name(c))] = scores_json(report.of(c));
  return j;
}

// Rows: documents, sentences, drug_n, group, brand, drug.
inline std::string render_stats_table(const CorpusStats& stats, std::string_view column = "corpus") {
  std::string out;
  char line[96];
  std::snprintf(line, sizeof line, "%-10s %12s\n", "", std::string(column).c_str());
  out += line;
  std::snprintf(line, sizeof line, "%-10s %12zu\n", "documents", stats.documents);
  out += line;
  std::snprintf(line, sizeof line, "%-10s %12zu\n", "sentences", stats.sentences);
  out += line;
  for (EntityClass c : kStatsRowOrder) {
    std::snprintf(line, sizeof line, "%-10s %12zu\n", std::string(class_name(c)).c_str(), stats.spans_of(c));
    out += line;
  }
  return out;
}

inline nlohmann::ordered_json stats_json(const CorpusStats& stats) {
  nlohmann::ordered_json j;
  j["documents"] = stats.documents;
  j["sentences"] = stats.sentences;
  for (EntityClass c : kStatsRowOrder) j[std::string(class_name(c))] = stats.spans_of(c);
  return j;
}

inline nlohmann::ordered_json hyperparams_json(const HyperParams& hp) {
  nlohmann::ordered_json j;
  j["hidden"] = hp.hidden;
  j["window"] = hp.window;
  j["embed_dim"] = hp.embed_dim;
  j["learning_rate"] = hp.learning_rate;
  j["dropout_rate"] = hp.dropout_rate;
  j["max_epochs"] = hp.max_epochs;
  j["seed"] = hp.seed;
  j["clip_norm"] = hp.clip_norm;
  return j;
}

inline nlohmann::ordered_json train_record_json(const TrainRecord& record) {
  nlohmann::ordered_json j;
  j["best_epoch"] = record.best_epoch;
  j["best_validation_f1"] = record.best_validation_f1;
  auto& epochs = j["epochs"];
  epochs = nlohmann::ordered_json::array();
  for (const auto& e : record.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"validation_f1", e.validation_f1},
                      {"elapsed_seconds", e.elapsed_seconds}});
  }
  return j;
}

inline nlohmann::ordered_json trial_json(const TrialRecord& t) {
  nlohmann::ordered_json j;
  j["trial"] = t.trial;
  j["hyperparams"] = hyperparams_json(t.hp);
  j["best_epoch"] = t.best_epoch;
  j["validation_f1"] = t.validation_f1;
  return j;
}

}  // namespace dnr
