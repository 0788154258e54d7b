#pragma once

// Elman and Jordan taggers: sigmoid hidden layer over the context window with
// feedback from h(t-1) (Elman) or y(t-1) (Jordan), and a softmax output layer.
// Trained with per-token cross-entropy and full backpropagation through time.

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dnr/error.hpp"
#include "dnr/numeric.hpp"
#include "dnr/tags.hpp"
#include "dnr/vocabulary.hpp"

namespace dnr {

struct ModelDims {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 0;  // d
  std::size_t window = 1;     // s
  std::size_t hidden = 0;     // H
  std::size_t num_tags = TagSet::size();

  std::size_t input_dim() const { return window * embed_dim; }

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct EncodedSentence {
  std::vector<std::size_t> words;
  std::vector<TagId> tags;  // empty when ungold
};

// Sparse per-row gradient of the embedding table.
using EmbeddingGradient = std::map<std::size_t, Vector>;

// Inverted-dropout masks, one vector per position: entries are 0 (dropped) or
// 1/(1-rate). Empty vectors mean no dropout at that layer.
struct DropoutMasks {
  std::vector<Vector> input;
  std::vector<Vector> hidden;

  static DropoutMasks sample(std::size_t length, std::size_t input_dim, std::size_t hidden_dim,
                             double rate, SeededRng& rng) {
    DropoutMasks m;
    if (rate <= 0.0) return m;
    const double keep_scale = 1.0 / (1.0 - rate);
    auto draw = [&](std::size_t n) {
      Vector v(n);
      for (double& x : v) x = rng.uniform() < rate ? 0.0 : keep_scale;
      return v;
    };
    for (std::size_t t = 0; t < length; ++t) m.input.push_back(draw(input_dim));
    for (std::size_t t = 0; t < length; ++t) m.hidden.push_back(draw(hidden_dim));
    return m;
  }
};

namespace detail {

inline void apply_mask(std::span<double> v, const std::vector<Vector>* masks, std::size_t t) {
  if (masks == nullptr || masks->empty()) return;
  const Vector& m = (*masks)[t];
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= m[i];
}

inline void require_size(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw InvalidArgument(std::string(what) + ": expected length " + std::to_string(n) + ", got " +
                          std::to_string(v.size()));
  }
}

inline Vector embed_position(const EmbeddingTable& table, std::span<const std::size_t> words,
                             std::size_t t, std::size_t window) {
  const auto ctx = context_window(words, t, window);
  return window_embed(ctx, table);
}

inline void scatter_window_gradient(EmbeddingGradient& out, std::span<const std::size_t> words,
                                    std::size_t t, std::size_t window, std::size_t dim,
                                    std::span<const double> dx) {
  const auto ctx = context_window(words, t, window);
  for (std::size_t k = 0; k < ctx.size(); ++k) {
    Vector& row = out[ctx[k]];
    if (row.empty()) row.assign(dim, 0.0);
    add_to(row, dx.subspan(k * dim, dim));
  }
}

inline void check_sentence(const EncodedSentence& s, bool need_tags, std::size_t num_tags,
                           const char* op) {
  if (s.words.empty()) throw InvalidArgument(std::string(op) + ": empty sentence");
  if (!need_tags) return;
  if (s.tags.size() != s.words.size()) {
    throw InvalidArgument(std::string(op) + ": " + std::to_string(s.tags.size()) + " tags for " +
                          std::to_string(s.words.size()) + " words");
  }
  for (TagId y : s.tags) {
    if (y >= num_tags) throw InvalidArgument(std::string(op) + ": tag index out of range");
  }
}

}  // namespace detail

// Shared layout of the Elman and Jordan parameter sets; V is H x H for Elman
// and H x K for Jordan.
struct RecurrentParams {
  Matrix U;    // H x s*d
  Matrix V;    // H x H or H x K
  Matrix W;    // K x H
  Matrix b_h;  // H x 1
  Matrix b_y;  // K x 1

  std::size_t hidden() const { return U.rows(); }
  std::size_t num_tags() const { return W.rows(); }

  template <typename F>
  void for_each(F&& f) {
    f("U", U);
    f("V", V);
    f("W", W);
    f("b_h", b_h);
    f("b_y", b_y);
  }
  template <typename F>
  void for_each(F&& f) const {
    f("U", U);
    f("V", V);
    f("W", W);
    f("b_h", b_h);
    f("b_y", b_y);
  }

  friend bool operator==(const RecurrentParams&, const RecurrentParams&) = default;
};

struct ElmanParams : RecurrentParams {
  static ElmanParams init(const ModelDims& d, SeededRng& rng) {
    ElmanParams p;
    p.U = uniform_init(d.hidden, d.input_dim(), -1.0, 1.0, rng);
    p.V = uniform_init(d.hidden, d.hidden, -1.0, 1.0, rng);
    p.W = uniform_init(d.num_tags, d.hidden, -1.0, 1.0, rng);
    p.b_h = Matrix(d.hidden, 1);
    p.b_y = Matrix(d.num_tags, 1);
    return p;
  }
  static ElmanParams zeros(const ModelDims& d) {
    ElmanParams p;
    p.U = Matrix(d.hidden, d.input_dim());
    p.V = Matrix(d.hidden, d.hidden);
    p.W = Matrix(d.num_tags, d.hidden);
    p.b_h = Matrix(d.hidden, 1);
    p.b_y = Matrix(d.num_tags, 1);
    return p;
  }
};

struct JordanParams : RecurrentParams {
  static JordanParams init(const ModelDims& d, SeededRng& rng) {
    JordanParams p;
    p.U = uniform_init(d.hidden, d.input_dim(), -1.0, 1.0, rng);
    p.V = uniform_init(d.hidden, d.num_tags, -1.0, 1.0, rng);
    p.W = uniform_init(d.num_tags, d.hidden, -1.0, 1.0, rng);
    p.b_h = Matrix(d.hidden, 1);
    p.b_y = Matrix(d.num_tags, 1);
    return p;
  }
  static JordanParams zeros(const ModelDims& d) {
    JordanParams p;
    p.U = Matrix(d.hidden, d.input_dim());
    p.V = Matrix(d.hidden, d.num_tags);
    p.W = Matrix(d.num_tags, d.hidden);
    p.b_h = Matrix(d.hidden, 1);
    p.b_y = Matrix(d.num_tags, 1);
    return p;
  }
};

// sigmoid(U x + V feedback + b_h)
inline Vector recurrent_hidden(std::span<const double> x, std::span<const double> feedback,
                               const RecurrentParams& p) {
  Vector a(p.b_h.values().begin(), p.b_h.values().end());
  gemv_accumulate(p.U, x, a);
  gemv_accumulate(p.V, feedback, a);
  for (double& v : a) v = sigmoid(v);
  return a;
}

inline Vector elman_step(std::span<const double> x, std::span<const double> h_prev,
                         const ElmanParams& p) {
  return recurrent_hidden(x, h_prev, p);
}

// y_prev is the previous output distribution, or zeros at the first position.
inline Vector jordan_step(std::span<const double> x, std::span<const double> y_prev,
                          const JordanParams& p) {
  return recurrent_hidden(x, y_prev, p);
}

inline Vector output_distribution(std::span<const double> h, const RecurrentParams& p) {
  Vector z(p.b_y.values().begin(), p.b_y.values().end());
  gemv_accumulate(p.W, h, z);
  return softmax(z);
}

namespace detail {

// Forward pass of an Elman (jordan = false) or Jordan network, with optional
// loss and gradients. Returns summed cross-entropy when tags are present.
inline double recurrent_pass(bool jordan, const EmbeddingTable& table, const RecurrentParams& p,
                             std::size_t window, const EncodedSentence& sentence,
                             const DropoutMasks* masks, RecurrentParams* grads,
                             EmbeddingGradient* embed_grads,
                             std::vector<Vector>* distributions) {
  const std::size_t n = sentence.words.size();
  const std::size_t hidden = p.hidden();
  const std::size_t k = p.num_tags();
  const bool with_loss = !sentence.tags.empty();

  std::vector<Vector> xs(n), hs(n), hs_dropped(n), ys(n);
  double loss = 0.0;
  Vector h_prev(hidden, 0.0), y_prev(k, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    xs[t] = embed_position(table, sentence.words, t, window);
    apply_mask(xs[t], masks ? &masks->input : nullptr, t);
    hs[t] = recurrent_hidden(xs[t], jordan ? std::span<const double>(y_prev) : std::span<const double>(h_prev), p);
    hs_dropped[t] = hs[t];
    apply_mask(hs_dropped[t], masks ? &masks->hidden : nullptr, t);
    ys[t] = output_distribution(hs_dropped[t], p);
    if (with_loss) loss -= std::log(ys[t][sentence.tags[t]]);
    h_prev = hs[t];
    y_prev = ys[t];
  }
  if (distributions) *distributions = ys;
  if (grads == nullptr) return loss;

  const std::size_t dim = table.dim();
  Vector dh_next(hidden, 0.0);  // Elman: dL/dh(t) from step t+1
  Vector dy_next(k, 0.0);       // Jordan: dL/dy(t) from step t+1
  for (std::size_t t = n; t-- > 0;) {
    const Vector& y = ys[t];
    Vector dz(y);
    dz[sentence.tags[t]] -= 1.0;
    if (jordan) {
      // softmax Jacobian applied to the feedback gradient
      const double proj = dot(y, dy_next);
      for (std::size_t j = 0; j < k; ++j) dz[j] += y[j] * (dy_next[j] - proj);
    }
    outer_accumulate(grads->W, dz, hs_dropped[t]);
    add_to(grads->b_y.values(), dz);

    Vector dh(hidden, 0.0);
    gemv_transposed_accumulate(p.W, dz, dh);
    apply_mask(dh, masks ? &masks->hidden : nullptr, t);
    if (!jordan) add_to(dh, dh_next);

    Vector da(hidden);
    for (std::size_t i = 0; i < hidden; ++i) da[i] = dh[i] * hs[t][i] * (1.0 - hs[t][i]);

    outer_accumulate(grads->U, da, xs[t]);
    add_to(grads->b_h.values(), da);
    if (t > 0) {
      outer_accumulate(grads->V, da, jordan ? ys[t - 1] : hs[t - 1]);
    }
    if (jordan) {
      std::fill(dy_next.begin(), dy_next.end(), 0.0);
      gemv_transposed_accumulate(p.V, da, dy_next);
    } else {
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      gemv_transposed_accumulate(p.V, da, dh_next);
    }

    if (embed_grads != nullptr) {
      Vector dx(p.U.cols(), 0.0);
      gemv_transposed_accumulate(p.U, da, dx);
      apply_mask(dx, masks ? &masks->input : nullptr, t);
      scatter_window_gradient(*embed_grads, sentence.words, t, window, dim, dx);
    }
  }
  return loss;
}

}  // namespace detail

}  // namespace dnr
