#pragma once

// Plain per-sentence SGD with full BPTT, inverted dropout, best-on-validation
// early stopping and random hyperparameter search.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dnr/corpus.hpp"
#include "dnr/error.hpp"
#include "dnr/evaluation.hpp"
#include "dnr/model.hpp"
#include "dnr/numeric.hpp"
#include "dnr/tags.hpp"
#include "dnr/vocabulary.hpp"

namespace dnr {

// The search space used for model selection.
namespace search_space {
inline constexpr std::array<std::size_t, 3> kHidden = {25, 50, 100};
inline constexpr std::array<std::size_t, 3> kWindow = {1, 3, 5};
inline constexpr std::array<std::size_t, 5> kEmbedDim = {50, 100, 300, 500, 1000};
inline constexpr double kRateLo = 0.05;
inline constexpr double kRateHi = 0.1;
inline constexpr std::size_t kMaxEpochs = 100;
}  // namespace search_space

struct HyperParams {
  std::size_t hidden = 100;
  std::size_t window = 3;
  std::size_t embed_dim = 100;
  double learning_rate = 0.05;
  double dropout_rate = 0.05;  // probability of dropping a unit
  std::size_t max_epochs = search_space::kMaxEpochs;
  std::uint64_t seed = 0;
  double clip_norm = 0.0;       // 0 disables gradient-norm clipping
  double unk_replace_prob = 0.5;  // for training-split singletons

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

// Structural sanity; throws InvalidArgument.
inline void validate_hyperparams(const HyperParams& hp) {
  auto fail = [](const std::string& msg) { throw InvalidArgument("hyperparameters: " + msg); };
  if (hp.hidden == 0) fail("hidden size must be >= 1");
  if (hp.embed_dim == 0) fail("embedding dimension must be >= 1");
  if (hp.window == 0 || hp.window % 2 == 0) fail("window size must be odd and >= 1");
  if (!(hp.learning_rate >= 0.0) || !std::isfinite(hp.learning_rate)) fail("learning rate must be >= 0");
  if (!(hp.dropout_rate >= 0.0 && hp.dropout_rate < 1.0)) fail("dropout rate must be in [0, 1)");
  if (hp.max_epochs == 0) fail("max_epochs must be >= 1");
  if (!(hp.clip_norm >= 0.0)) fail("clip norm must be >= 0");
  if (!(hp.unk_replace_prob >= 0.0 && hp.unk_replace_prob <= 1.0)) fail("UNK replacement probability must be in [0, 1]");
}

// Empty when `hp` lies inside the search space; otherwise one message per
// offending field.
inline std::vector<std::string> search_space_violations(const HyperParams& hp) {
  using namespace search_space;
  std::vector<std::string> out;
  auto in = [](const auto& set, std::size_t v) { return std::find(set.begin(), set.end(), v) != set.end(); };
  if (!in(kHidden, hp.hidden)) out.push_back("hidden size " + std::to_string(hp.hidden) + " not in {25, 50, 100}");
  if (!in(kWindow, hp.window)) out.push_back("window size " + std::to_string(hp.window) + " not in {1, 3, 5}");
  if (!in(kEmbedDim, hp.embed_dim)) {
    out.push_back("embedding dimension " + std::to_string(hp.embed_dim) + " not in {50, 100, 300, 500, 1000}");
  }
  if (!(hp.learning_rate >= kRateLo && hp.learning_rate <= kRateHi)) {
    out.push_back("learning rate " + std::to_string(hp.learning_rate) + " not in [0.05, 0.1]");
  }
  if (!(hp.dropout_rate >= kRateLo && hp.dropout_rate <= kRateHi)) {
    out.push_back("dropout rate " + std::to_string(hp.dropout_rate) + " not in [0.05, 0.1]");
  }
  if (hp.max_epochs > kMaxEpochs) out.push_back("max epochs " + std::to_string(hp.max_epochs) + " exceeds 100");
  return out;
}

inline HyperParams sample_hyperparams(SeededRng& rng) {
  using namespace search_space;
  HyperParams hp;
  hp.hidden = kHidden[rng.below(kHidden.size())];
  hp.window = kWindow[rng.below(kWindow.size())];
  hp.embed_dim = kEmbedDim[rng.below(kEmbedDim.size())];
  hp.learning_rate = rng.uniform(kRateLo, kRateHi);
  hp.dropout_rate = rng.uniform(kRateLo, kRateHi);
  hp.seed = rng.next();
  return hp;
}

// Sentence-level split; round(ratio * N) training sentences (clamped so both
// sides are non-empty), each side in original corpus order.
inline std::pair<Corpus, Corpus> split_train_validation(const Corpus& corpus, double ratio,
                                                        std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw InvalidArgument("split ratio must be in (0, 1), got " + std::to_string(ratio));
  }
  const std::size_t n = corpus.size();
  if (n < 2) throw InvalidArgument("split needs at least 2 sentences, got " + std::to_string(n));
  std::size_t n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  SeededRng rng(seed);
  rng.shuffle(order);
  std::vector<bool> in_train(n, false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;

  std::pair<Corpus, Corpus> out;
  out.first.provenance = corpus.provenance;
  out.second.provenance = corpus.provenance;
  for (std::size_t i = 0; i < n; ++i) {
    (in_train[i] ? out.first : out.second).sentences.push_back(corpus.sentences[i]);
  }
  return out;
}

// Everything prediction needs: architecture, hyperparameters, tag set,
// vocabulary and weights.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  HyperParams hp;
  std::vector<std::string> tags = TagSet::names();
  Vocabulary vocabulary;
  Model model;

  Architecture architecture() const { return model.architecture(); }

  std::vector<TagId> predict(const std::vector<std::string>& tokens, bool iob_constraints = false) const {
    const auto words = vocabulary.encode(tokens);
    return model.predict(words, iob_constraints);
  }

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

inline std::vector<EncodedSentence> encode_corpus(const Corpus& corpus, const Vocabulary& vocab) {
  std::vector<EncodedSentence> out;
  out.reserve(corpus.size());
  for (const Sentence& s : corpus.sentences) {
    if (s.tokens.empty()) continue;
    EncodedSentence e{vocab.encode(s.tokens), {}};
    if (s.tagged()) e.tags = *s.tags;
    out.push_back(std::move(e));
  }
  return out;
}

// Predictions for every sentence; evaluation against gold requires a tagged corpus.
inline std::vector<std::vector<TagId>> predict_corpus(const Checkpoint& ckpt, const Corpus& corpus,
                                                      bool iob_constraints = false) {
  std::vector<std::vector<TagId>> out;
  out.reserve(corpus.size());
  for (const Sentence& s : corpus.sentences) {
    out.push_back(s.tokens.empty() ? std::vector<TagId>{} : ckpt.predict(s.tokens, iob_constraints));
  }
  return out;
}

inline EvalReport evaluate_model(const Model& model, std::span<const EncodedSentence> gold) {
  std::vector<std::vector<TagId>> g, p;
  g.reserve(gold.size());
  p.reserve(gold.size());
  for (const auto& s : gold) {
    g.push_back(s.tags);
    p.push_back(model.predict(s.words));
  }
  return evaluate_tags(g, p);
}

// Training sentences plus which vocabulary entries occur exactly once.
struct TrainingSet {
  std::vector<EncodedSentence> sentences;
  std::vector<bool> singleton;  // by vocabulary index
};

inline TrainingSet prepare_training_set(const Corpus& train, const Vocabulary& vocab) {
  TrainingSet set;
  set.sentences = encode_corpus(train, vocab);
  std::vector<std::size_t> counts(vocab.size(), 0);
  for (const auto& s : set.sentences) {
    if (s.tags.size() != s.words.size()) throw DataError("training sentence without gold tags");
    for (std::size_t w : s.words) ++counts[w];
  }
  set.singleton.resize(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    set.singleton[i] = counts[i] == 1 && i != Vocabulary::kPad && i != Vocabulary::kUnk;
  }
  return set;
}

// One pass over `data` in a freshly shuffled order, one SGD step per
// sentence. Returns the mean per-sentence loss.
inline double sgd_epoch(Model& model, const TrainingSet& data, const HyperParams& hp, SeededRng& rng) {
  if (data.sentences.empty()) throw InvalidArgument("sgd_epoch: empty training set");
  std::vector<std::size_t> order(data.sentences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  const std::size_t hidden_dim =
      model.architecture() == Architecture::bilstm_crf ? 2 * model.dims().hidden : model.dims().hidden;
  double total = 0.0;
  for (std::size_t idx : order) {
    EncodedSentence s = data.sentences[idx];
    if (hp.unk_replace_prob > 0.0 && !data.singleton.empty()) {
      for (std::size_t& w : s.words) {
        if (data.singleton[w] && rng.uniform() < hp.unk_replace_prob) w = Vocabulary::kUnk;
      }
    }
    const DropoutMasks masks =
        DropoutMasks::sample(s.words.size(), model.dims().input_dim(), hidden_dim, hp.dropout_rate, rng);
    Gradients grads = model.zero_gradients();
    const double loss = model.loss(s, &masks, &grads);
    if (!std::isfinite(loss)) throw NumericError("non-finite training loss");
    if (hp.clip_norm > 0.0) {
      const double norm = gradient_norm(grads);
      if (norm > hp.clip_norm) {
        const double scale = hp.clip_norm / norm;
        std::visit([&](auto& p) {
          p.for_each([&](std::string_view, Matrix& m) {
            for (double& v : m.values()) v *= scale;
          });
        }, grads.params);
        for (auto& [row, v] : grads.embeddings) {
          for (double& x : v) x *= scale;
        }
      }
    }
    model.apply_gradients(grads, hp.learning_rate);
    total += loss;
  }
  if (!model.all_finite()) throw NumericError("non-finite parameter after SGD epoch");
  return total / static_cast<double>(data.sentences.size());
}

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_f1 = 0.0;
  double elapsed_seconds = 0.0;
};

struct TrainRecord {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based
  double best_validation_f1 = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  TrainRecord record;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains for at most hp.max_epochs epochs and returns the weights of the
// epoch with the highest validation micro-F1 (earliest epoch on ties).
inline TrainResult train(Architecture arch, const Corpus& train_set, const Corpus& validation_set,
                         const HyperParams& hp, const EpochCallback& on_epoch = {}) {
  validate_hyperparams(hp);
  if (train_set.empty()) throw InvalidArgument("train: empty training set");
  if (validation_set.empty()) throw InvalidArgument("train: empty validation set");
  if (!train_set.fully_tagged() || !validation_set.fully_tagged()) {
    throw DataError("train: every training and validation sentence needs gold tags");
  }
  const auto clock_start = std::chrono::steady_clock::now();
  SeededRng rng(hp.seed);
  Vocabulary vocab = build_vocabulary(train_set);
  const TrainingSet data = prepare_training_set(train_set, vocab);
  const auto validation = encode_corpus(validation_set, vocab);

  ModelDims dims{vocab.size(), hp.embed_dim, hp.window, hp.hidden, TagSet::size()};
  TrainResult result;
  result.checkpoint.hp = hp;
  result.checkpoint.vocabulary = vocab;
  result.checkpoint.model = Model::init(arch, dims, rng);
  Model model = result.checkpoint.model;

  bool have_best = false;
  for (std::size_t epoch = 1; epoch <= hp.max_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = sgd_epoch(model, data, hp, rng);
    rec.validation_f1 = evaluate_model(model, validation).micro.f1();
    rec.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    result.record.epochs.push_back(rec);
    if (!have_best || rec.validation_f1 > result.record.best_validation_f1) {
      have_best = true;
      result.record.best_epoch = epoch;
      result.record.best_validation_f1 = rec.validation_f1;
      result.checkpoint.model = model;
    }
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

// Splits 70/30 with hp.seed, then trains.
inline TrainResult train(Architecture arch, const Corpus& corpus, const HyperParams& hp,
                         const EpochCallback& on_epoch = {}) {
  auto [train_set, validation_set] = split_train_validation(corpus, 0.7, hp.seed);
  return train(arch, train_set, validation_set, hp, on_epoch);
}

struct TrialRecord {
  std::size_t trial = 0;
  HyperParams hp;
  std::size_t best_epoch = 0;
  double validation_f1 = 0.0;
};

struct SearchResult {
  std::vector<TrialRecord> trials;  // in trial order
  std::size_t best_trial = 0;
  TrainResult best;
};

struct SearchOptions {
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::size_t max_epochs = search_space::kMaxEpochs;
  double clip_norm = 0.0;
  std::function<void(const TrialRecord&)> on_trial;  // called under a lock
};

// Trial i samples its hyperparameters from a generator seeded by (seed, i),
// so results do not depend on how trials are scheduled across jobs.
inline TrialRecord sample_trial(std::size_t trial, const SearchOptions& opts) {
  SeededRng rng(SeededRng::derive_seed(opts.seed, trial));
  TrialRecord rec;
  rec.trial = trial;
  rec.hp = sample_hyperparams(rng);
  rec.hp.max_epochs = opts.max_epochs;
  rec.hp.clip_norm = opts.clip_norm;
  return rec;
}

inline SearchResult random_search(Architecture arch, const Corpus& train_set, const Corpus& validation_set,
                                  const SearchOptions& opts) {
  if (opts.trials == 0) throw InvalidArgument("random_search: trials must be >= 1");
  SearchResult result;
  result.trials.resize(opts.trials);
  std::optional<TrainResult> best;
  std::size_t best_trial = 0;
  std::mutex lock;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= opts.trials) return;
      {
        std::lock_guard guard(lock);
        if (failure) return;
      }
      try {
        TrialRecord rec = sample_trial(i, opts);
        TrainResult trained = train(arch, train_set, validation_set, rec.hp);
        rec.best_epoch = trained.record.best_epoch;
        rec.validation_f1 = trained.record.best_validation_f1;
        std::lock_guard guard(lock);
        result.trials[i] = rec;
        const bool better = !best || rec.validation_f1 > best->record.best_validation_f1 ||
                            (rec.validation_f1 == best->record.best_validation_f1 && i < best_trial);
        if (better) {
          best = std::move(trained);
          best_trial = i;
        }
        if (opts.on_trial) opts.on_trial(rec);
      } catch (...) {
        std::lock_guard guard(lock);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, opts.trials));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  result.best_trial = best_trial;
  result.best = std::move(*best);
  return result;
}

}  // namespace dnr
