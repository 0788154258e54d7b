#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dnr/crf.hpp"
#include "dnr/error.hpp"
#include "dnr/lstm.hpp"
#include "dnr/numeric.hpp"
#include "dnr/rnn.hpp"
#include "dnr/vocabulary.hpp"

namespace dnr {

enum class Architecture : std::uint32_t { elman = 0, jordan = 1, bilstm_crf = 2 };

inline std::string_view architecture_name(Architecture a) {
  switch (a) {
    case Architecture::elman: return "elman";
    case Architecture::jordan: return "jordan";
    case Architecture::bilstm_crf: return "bilstm-crf";
  }
  return "?";
}

inline std::optional<Architecture> parse_architecture(std::string_view name) {
  for (auto a : {Architecture::elman, Architecture::jordan, Architecture::bilstm_crf}) {
    if (architecture_name(a) == name) return a;
  }
  return std::nullopt;
}

using ModelParams = std::variant<ElmanParams, JordanParams, BiLstmCrfParams>;

struct Gradients {
  ModelParams params;
  EmbeddingGradient embeddings;
};

class Model {
 public:
  Model() = default;
  Model(Architecture arch, ModelDims dims, EmbeddingTable embeddings, ModelParams params)
      : arch_(arch), dims_(dims), embeddings_(std::move(embeddings)), params_(std::move(params)) {}

  // Embeddings first, then the architecture's weights, all from `rng`.
  static Model init(Architecture arch, const ModelDims& dims, SeededRng& rng) {
    validate(dims);
    auto table = EmbeddingTable::random(dims.vocab_size, dims.embed_dim, rng);
    switch (arch) {
      case Architecture::elman: return {arch, dims, std::move(table), ElmanParams::init(dims, rng)};
      case Architecture::jordan: return {arch, dims, std::move(table), JordanParams::init(dims, rng)};
      case Architecture::bilstm_crf:
        return {arch, dims, std::move(table), BiLstmCrfParams::init(dims, rng)};
    }
    throw InvalidArgument("unknown architecture");
  }

  // All-zero weights of the right shapes; filled in by checkpoint loading.
  static Model zeros(Architecture arch, const ModelDims& dims) {
    validate(dims);
    EmbeddingTable table{Matrix(dims.vocab_size, dims.embed_dim), true};
    Model m(arch, dims, std::move(table), ElmanParams{});
    m.params_ = m.zero_gradients().params;
    return m;
  }

  Architecture architecture() const { return arch_; }
  const ModelDims& dims() const { return dims_; }
  const EmbeddingTable& embeddings() const { return embeddings_; }
  EmbeddingTable& embeddings() { return embeddings_; }
  const ModelParams& params() const { return params_; }
  ModelParams& params() { return params_; }

  Gradients zero_gradients() const {
    switch (arch_) {
      case Architecture::elman: return {ElmanParams::zeros(dims_), {}};
      case Architecture::jordan: return {JordanParams::zeros(dims_), {}};
      case Architecture::bilstm_crf: return {BiLstmCrfParams::zeros(dims_), {}};
    }
    throw InvalidArgument("unknown architecture");
  }

  // Summed per-token cross-entropy (Elman, Jordan) or CRF negative
  // log-likelihood (BiLSTM-CRF) of the gold tags. Gradients are accumulated
  // into `grads` when given.
  double loss(const EncodedSentence& sentence, const DropoutMasks* masks = nullptr,
              Gradients* grads = nullptr) const {
    detail::check_sentence(sentence, true, dims_.num_tags, "Model::loss");
    EmbeddingGradient* eg = grads ? &grads->embeddings : nullptr;
    switch (arch_) {
      case Architecture::elman:
      case Architecture::jordan: {
        const auto& p = arch_ == Architecture::elman
                            ? static_cast<const RecurrentParams&>(std::get<ElmanParams>(params_))
                            : static_cast<const RecurrentParams&>(std::get<JordanParams>(params_));
        RecurrentParams* g = nullptr;
        if (grads) {
          g = arch_ == Architecture::elman
                  ? static_cast<RecurrentParams*>(&std::get<ElmanParams>(grads->params))
                  : static_cast<RecurrentParams*>(&std::get<JordanParams>(grads->params));
        }
        return detail::recurrent_pass(arch_ == Architecture::jordan, embeddings_, p, dims_.window,
                                      sentence, masks, g, eg, nullptr);
      }
      case Architecture::bilstm_crf:
        return detail::bilstm_crf_pass(
            embeddings_, std::get<BiLstmCrfParams>(params_), dims_.window, sentence, masks,
            grads ? &std::get<BiLstmCrfParams>(grads->params) : nullptr, eg);
    }
    throw InvalidArgument("unknown architecture");
  }

  // Per-token argmax of the output distribution (Elman, Jordan) or the
  // Viterbi path (BiLSTM-CRF). Never applies dropout.
  std::vector<TagId> predict(std::span<const std::size_t> words, bool iob_constraints = false) const {
    EncodedSentence s{{words.begin(), words.end()}, {}};
    detail::check_sentence(s, false, dims_.num_tags, "Model::predict");
    std::vector<TagId> tags;
    if (arch_ == Architecture::bilstm_crf) {
      const auto& p = std::get<BiLstmCrfParams>(params_);
      const auto f = detail::bilstm_crf_forward(embeddings_, p, dims_.window, s, nullptr);
      return viterbi_decode(f.emissions, iob_constraints ? with_iob_constraints(p.crf) : p.crf).path;
    }
    const auto& p = arch_ == Architecture::elman
                        ? static_cast<const RecurrentParams&>(std::get<ElmanParams>(params_))
                        : static_cast<const RecurrentParams&>(std::get<JordanParams>(params_));
    std::vector<Vector> ys;
    detail::recurrent_pass(arch_ == Architecture::jordan, embeddings_, p, dims_.window, s, nullptr,
                           nullptr, nullptr, &ys);
    for (const auto& y : ys) tags.push_back(argmax(y));
    return tags;
  }

  // Visits (name, Matrix&) for the dense weights, excluding embeddings.
  template <typename F>
  void for_each_dense(F&& f) {
    std::visit([&](auto& p) { p.for_each(f); }, params_);
  }
  template <typename F>
  void for_each_dense(F&& f) const {
    std::visit([&](const auto& p) { p.for_each(f); }, params_);
  }

  bool all_finite() const {
    bool ok = embeddings_.weights.all_finite();
    for_each_dense([&](std::string_view, const Matrix& m) { ok = ok && m.all_finite(); });
    return ok;
  }

  // params -= rate * grads, touching only embedding rows that received a gradient.
  void apply_gradients(const Gradients& grads, double rate) {
    std::vector<Matrix*> dst;
    std::vector<const Matrix*> src;
    for_each_dense([&](std::string_view, Matrix& m) { dst.push_back(&m); });
    std::visit([&](const auto& g) { g.for_each([&](std::string_view, const Matrix& m) { src.push_back(&m); }); },
               grads.params);
    for (std::size_t i = 0; i < dst.size(); ++i) {
      auto d = dst[i]->values();
      auto s = src[i]->values();
      for (std::size_t k = 0; k < d.size(); ++k) d[k] -= rate * s[k];
    }
    if (!embeddings_.trainable) return;
    for (const auto& [row, g] : grads.embeddings) {
      auto r = embeddings_.weights.row(row);
      for (std::size_t k = 0; k < r.size(); ++k) r[k] -= rate * g[k];
    }
  }

  friend bool operator==(const Model&, const Model&) = default;

 private:
  static void validate(const ModelDims& d) {
    if (d.vocab_size < 2 || d.embed_dim == 0 || d.hidden == 0 || d.num_tags == 0 ||
        d.window == 0 || d.window % 2 == 0) {
      throw InvalidArgument("invalid model dimensions (vocab " + std::to_string(d.vocab_size) +
                            ", d " + std::to_string(d.embed_dim) + ", s " +
                            std::to_string(d.window) + ", H " + std::to_string(d.hidden) +
                            ", K " + std::to_string(d.num_tags) + ")");
    }
  }

  Architecture arch_ = Architecture::elman;
  ModelDims dims_;
  EmbeddingTable embeddings_;
  ModelParams params_;
};

inline double gradient_norm(const Gradients& g) {
  double sq = 0.0;
  std::visit([&](const auto& p) {
    p.for_each([&](std::string_view, const Matrix& m) {
      for (double v : m.values()) sq += v * v;
    });
  }, g.params);
  for (const auto& [row, v] : g.embeddings) {
    for (double x : v) sq += x * x;
  }
  return std::sqrt(sq);
}

}  // namespace dnr
