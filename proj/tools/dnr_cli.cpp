#include "dnr_cli.hpp"

#include <algorithm>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dnr/dnr.hpp"

namespace dnr::cli {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, std::ostream& out) {
  if (flag) return *flag;
  std::random_device device;
  const std::uint64_t seed = (static_cast<std::uint64_t>(device()) << 32) ^ device();
  out << "seed: " << seed << "\n";
  return seed;
}

Architecture resolve_architecture(const std::string& name) {
  const auto arch = parse_architecture(name);
  if (!arch) throw UsageError("unknown architecture '" + name + "' (expected elman, jordan or bilstm-crf)");
  return *arch;
}

Corpus load_tagged_corpus(const std::string& path) {
  Corpus corpus = load_corpus(path);
  if (!corpus.fully_tagged()) throw DataError("'" + path + "' has no gold tags (expected token<TAB>tag lines)");
  return corpus;
}

void write_json(const std::string& path, const nlohmann::ordered_json& j) {
  atomic_write_file(path, [&](std::ostream& o) { o << j.dump(2) << "\n"; });
}

void check_search_space(const HyperParams& hp, bool unrestricted) {
  try {
    validate_hyperparams(hp);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (unrestricted) return;
  const auto violations = search_space_violations(hp);
  if (!violations.empty()) {
    std::string msg = violations.front();
    for (std::size_t i = 1; i < violations.size(); ++i) msg += "; " + violations[i];
    throw UsageError(msg + " (pass --unrestricted to allow)");
  }
}

struct ConvertArgs {
  std::vector<std::string> inputs;
  std::string output;
  std::string stats_json;
};

int cmd_convert(const ConvertArgs& a, std::ostream& out, std::ostream& err) {
  Corpus merged;
  nlohmann::ordered_json stats_doc;
  std::size_t warnings = 0;
  for (const auto& dir : a.inputs) {
    ConversionResult part = convert_ddi_directory(dir);
    for (const auto& w : part.warnings) err << "warning: " << w << "\n";
    warnings += part.warnings.size();
    const CorpusStats stats = corpus_stats(part.corpus);
    out << render_stats_table(stats, std::filesystem::path(dir).filename().string());
    stats_doc[dir] = stats_json(stats);
    for (auto& s : part.corpus.sentences) merged.sentences.push_back(std::move(s));
  }
  if (a.inputs.size() > 1) {
    const CorpusStats total = corpus_stats(merged);
    out << render_stats_table(total, "total");
    stats_doc["total"] = stats_json(total);
  }
  atomic_write_file(a.output, [&](std::ostream& o) { write_column_corpus(o, merged); });
  if (!a.stats_json.empty()) write_json(a.stats_json, stats_doc);
  out << "wrote " << merged.size() << " sentences to " << a.output << " (" << warnings << " warnings)\n";
  return kSuccess;
}

struct SplitArgs {
  std::string corpus;
  std::string train_out;
  std::string validation_out;
  double ratio = 0.7;
  std::optional<std::uint64_t> seed;
};

int cmd_split(const SplitArgs& a, std::ostream& out, std::ostream&) {
  const Corpus corpus = load_tagged_corpus(a.corpus);
  const std::uint64_t seed = resolve_seed(a.seed, out);
  auto [train_set, validation_set] = split_train_validation(corpus, a.ratio, seed);
  atomic_write_file(a.train_out, [&](std::ostream& o) { write_column_corpus(o, train_set); });
  atomic_write_file(a.validation_out, [&](std::ostream& o) { write_column_corpus(o, validation_set); });
  out << "train: " << train_set.size() << " sentences, validation: " << validation_set.size() << " sentences\n";
  return kSuccess;
}

struct TrainArgs {
  std::string corpus;
  std::string validation;
  std::string output;
  std::string record;
  std::string arch = "bilstm-crf";
  HyperParams hp;
  std::optional<std::uint64_t> seed;
  bool unrestricted = false;
  bool quiet = false;
};

int cmd_train(TrainArgs a, std::ostream& out, std::ostream& err) {
  const Architecture arch = resolve_architecture(a.arch);
  check_search_space(a.hp, a.unrestricted);
  const Corpus corpus = load_tagged_corpus(a.corpus);
  a.hp.seed = resolve_seed(a.seed, out);

  Corpus train_set, validation_set;
  if (a.validation.empty()) {
    std::tie(train_set, validation_set) = split_train_validation(corpus, 0.7, a.hp.seed);
  } else {
    train_set = corpus;
    validation_set = load_tagged_corpus(a.validation);
  }
  auto progress = [&](const EpochRecord& r) {
    if (a.quiet) return;
    err << "epoch " << std::setw(3) << r.epoch << "  loss " << std::fixed << std::setprecision(4) << r.train_loss
        << "  validation F1 " << format_percent(r.validation_f1) << "\n";
    err.unsetf(std::ios::fixed);
  };
  const TrainResult result = train(arch, train_set, validation_set, a.hp, progress);
  save_checkpoint(a.output, result.checkpoint);

  nlohmann::ordered_json record;
  record["architecture"] = std::string(architecture_name(arch));
  record["hyperparams"] = hyperparams_json(a.hp);
  record["train_sentences"] = train_set.size();
  record["validation_sentences"] = validation_set.size();
  record["record"] = train_record_json(result.record);
  write_json(a.record.empty() ? a.output + ".record.json" : a.record, record);

  out << "best validation F1 " << format_percent(result.record.best_validation_f1) << " at epoch "
      << result.record.best_epoch << "; checkpoint written to " << a.output << "\n";
  return kSuccess;
}

struct SearchArgs {
  std::string corpus;
  std::string validation;
  std::string output;
  std::string log;
  std::string arch = "bilstm-crf";
  std::size_t trials = 20;
  std::size_t jobs = 1;
  std::size_t epochs = search_space::kMaxEpochs;
  double clip_norm = 0.0;
  std::optional<std::uint64_t> seed;
  bool unrestricted = false;
};

int cmd_search(const SearchArgs& a, std::ostream& out, std::ostream& err) {
  const Architecture arch = resolve_architecture(a.arch);
  if (a.trials == 0) throw UsageError("--trials must be >= 1");
  if (a.epochs == 0) throw UsageError("--epochs must be >= 1");
  if (a.epochs > search_space::kMaxEpochs && !a.unrestricted) {
    throw UsageError("max epochs " + std::to_string(a.epochs) + " exceeds 100 (pass --unrestricted to allow)");
  }
  const Corpus corpus = load_tagged_corpus(a.corpus);
  const std::uint64_t seed = resolve_seed(a.seed, out);

  Corpus train_set, validation_set;
  if (a.validation.empty()) {
    std::tie(train_set, validation_set) = split_train_validation(corpus, 0.7, seed);
  } else {
    train_set = corpus;
    validation_set = load_tagged_corpus(a.validation);
  }
  SearchOptions opts;
  opts.trials = a.trials;
  opts.seed = seed;
  opts.jobs = a.jobs;
  opts.max_epochs = a.epochs;
  opts.clip_norm = a.clip_norm;
  opts.on_trial = [&](const TrialRecord& t) {
    err << "trial " << t.trial << ": H=" << t.hp.hidden << " s=" << t.hp.window << " d=" << t.hp.embed_dim
        << " lr=" << t.hp.learning_rate << " dropout=" << t.hp.dropout_rate << " -> validation F1 "
        << format_percent(t.validation_f1) << "\n";
  };
  const SearchResult result = random_search(arch, train_set, validation_set, opts);
  save_checkpoint(a.output, result.best.checkpoint);

  nlohmann::ordered_json log;
  log["architecture"] = std::string(architecture_name(arch));
  log["seed"] = seed;
  log["best_trial"] = result.best_trial;
  log["best_validation_f1"] = result.trials[result.best_trial].validation_f1;
  log["trials"] = nlohmann::ordered_json::array();
  for (const auto& t : result.trials) log["trials"].push_back(trial_json(t));
  write_json(a.log.empty() ? a.output + ".search.json" : a.log, log);

  out << "best trial " << result.best_trial << " with validation F1 "
      << format_percent(result.trials[result.best_trial].validation_f1) << "; checkpoint written to "
      << a.output << "\n";
  return kSuccess;
}

struct EvalArgs {
  std::string checkpoint;
  std::string corpus;
  std::string report;
  bool iob_constraints = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream&) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const Corpus corpus = load_tagged_corpus(a.corpus);
  const auto predicted = predict_corpus(ckpt, corpus, a.iob_constraints);
  std::vector<std::vector<TagId>> gold;
  for (const auto& s : corpus.sentences) gold.push_back(*s.tags);
  const EvalReport report = evaluate_tags(gold, predicted);
  out << render_eval_table(report, "strict evaluation: " + a.corpus);

  nlohmann::ordered_json doc;
  doc["checkpoint"] = a.checkpoint;
  doc["corpus"] = a.corpus;
  doc["architecture"] = std::string(architecture_name(ckpt.architecture()));
  doc["sentences"] = corpus.size();
  doc["report"] = eval_report_json(report);
  write_json(a.report.empty() ? a.checkpoint + ".eval.json" : a.report, doc);
  return kSuccess;
}

struct PredictArgs {
  std::string checkpoint;
  std::string input;
  std::string output;
  bool raw = false;
  bool iob_constraints = false;
};

int cmd_predict(const PredictArgs& a, std::ostream& out, std::ostream&) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  Corpus corpus = a.raw ? load_raw_text(a.input) : load_corpus(a.input);
  const auto predicted = predict_corpus(ckpt, corpus, a.iob_constraints);
  for (std::size_t i = 0; i < corpus.size(); ++i) corpus.sentences[i].tags = predicted[i];
  atomic_write_file(a.output, [&](std::ostream& o) { write_column_corpus(o, corpus); });
  out << "tagged " << corpus.size() << " sentences into " << a.output << "\n";
  return kSuccess;
}

void add_hyperparam_flags(CLI::App* cmd, HyperParams& hp) {
  cmd->add_option("--hidden", hp.hidden, "hidden units H {25,50,100}")->capture_default_str();
  cmd->add_option("--window", hp.window, "context window s {1,3,5}")->capture_default_str();
  cmd->add_option("--embed-dim", hp.embed_dim, "embedding dimension d {50,100,300,500,1000}")->capture_default_str();
  cmd->add_option("--lr", hp.learning_rate, "learning rate [0.05,0.1]")->capture_default_str();
  cmd->add_option("--dropout", hp.dropout_rate, "dropout probability [0.05,0.1]")->capture_default_str();
  cmd->add_option("--epochs", hp.max_epochs, "epoch cap (<= 100)")->capture_default_str();
  cmd->add_option("--clip-norm", hp.clip_norm, "gradient-norm clip, 0 disables")->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Drug name recognition with recurrent taggers"};
  app.require_subcommand(1);

  ConvertArgs convert;
  auto* c_convert = app.add_subcommand("convert", "convert DDI XML directories to a column corpus");
  c_convert->add_option("inputs", convert.inputs, "directories of DDI XML files")->required();
  c_convert->add_option("-o,--output", convert.output, "column corpus to write")->required();
  c_convert->add_option("--stats-json", convert.stats_json, "also write statistics as JSON");

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "split a corpus into training and validation sets");
  c_split->add_option("corpus", split.corpus)->required();
  c_split->add_option("--train", split.train_out)->required();
  c_split->add_option("--validation", split.validation_out)->required();
  c_split->add_option("--ratio", split.ratio)->capture_default_str();
  c_split->add_option("--seed", split.seed);

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "train one model with early stopping");
  c_train->add_option("corpus", tr.corpus, "tagged column corpus")->required();
  c_train->add_option("-o,--output", tr.output, "checkpoint to write")->required();
  c_train->add_option("--arch", tr.arch, "elman, jordan or bilstm-crf")->capture_default_str();
  c_train->add_option("--validation", tr.validation, "explicit validation corpus (default: 70/30 split)");
  c_train->add_option("--record", tr.record, "training record JSON (default: <output>.record.json)");
  c_train->add_option("--seed", tr.seed);
  c_train->add_flag("--unrestricted", tr.unrestricted, "allow hyperparameters outside the search space");
  c_train->add_flag("--quiet", tr.quiet, "no per-epoch progress");
  add_hyperparam_flags(c_train, tr.hp);

  SearchArgs se;
  auto* c_search = app.add_subcommand("search", "random hyperparameter search");
  c_search->add_option("corpus", se.corpus, "tagged column corpus")->required();
  c_search->add_option("-o,--output", se.output, "best checkpoint to write")->required();
  c_search->add_option("--arch", se.arch)->capture_default_str();
  c_search->add_option("--validation", se.validation, "explicit validation corpus (default: 70/30 split)");
  c_search->add_option("--log", se.log, "per-trial log JSON (default: <output>.search.json)");
  c_search->add_option("--trials", se.trials)->capture_default_str();
  c_search->add_option("--jobs", se.jobs, "trials run concurrently")->capture_default_str();
  c_search->add_option("--epochs", se.epochs)->capture_default_str();
  c_search->add_option("--clip-norm", se.clip_norm)->capture_default_str();
  c_search->add_option("--seed", se.seed);
  c_search->add_flag("--unrestricted", se.unrestricted);

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "strict evaluation against gold tags");
  c_eval->add_option("checkpoint", ev.checkpoint)->required();
  c_eval->add_option("corpus", ev.corpus)->required();
  c_eval->add_option("--report", ev.report, "report JSON (default: <checkpoint>.eval.json)");
  c_eval->add_flag("--iob-constraints", ev.iob_constraints, "forbid invalid IOB bigrams in CRF decoding");

  PredictArgs pr;
  auto* c_predict = app.add_subcommand("predict", "tag a corpus");
  c_predict->add_option("checkpoint", pr.checkpoint)->required();
  c_predict->add_option("input", pr.input, "column/token corpus, or raw text with --raw")->required();
  c_predict->add_option("-o,--output", pr.output)->required();
  c_predict->add_flag("--raw", pr.raw, "input is plain text, one sentence per line");
  c_predict->add_flag("--iob-constraints", pr.iob_constraints);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (c_convert->parsed()) return cmd_convert(convert, out, err);
    if (c_split->parsed()) return cmd_split(split, out, err);
    if (c_train->parsed()) return cmd_train(tr, out, err);
    if (c_search->parsed()) return cmd_search(se, out, err);
    if (c_eval->parsed()) return cmd_eval(ev, out, err);
    if (c_predict->parsed()) return cmd_predict(pr, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return kNumericFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}

}  // namespace dnr::cli
