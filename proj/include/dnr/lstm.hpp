#pragma once

// Bidirectional LSTM with a linear-chain CRF output layer.
//
// Gates use the standard forget-gate formulation without peepholes:
//   i = sig(.), f = sig(.), o = sig(.), g = tanh(.)
//   c' = f*c + i*g,  h' = o*tanh(c')
// Gate rows are stacked in the order i, f, o, g.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dnr/crf.hpp"
#include "dnr/error.hpp"
#include "dnr/numeric.hpp"
#include "dnr/rnn.hpp"

namespace dnr {

struct HiddenState {
  Vector h;
  Vector c;

  static HiddenState zeros(std::size_t hidden) { return {Vector(hidden, 0.0), Vector(hidden, 0.0)}; }
};

struct LstmDirection {
  Matrix Wx;  // 4H x s*d
  Matrix Wh;  // 4H x H
  Matrix b;   // 4H x 1

  std::size_t hidden() const { return Wh.cols(); }

  static LstmDirection init(std::size_t input_dim, std::size_t hidden, SeededRng& rng) {
    LstmDirection d{uniform_init(4 * hidden, input_dim, -1.0, 1.0, rng),
                    uniform_init(4 * hidden, hidden, -1.0, 1.0, rng), Matrix(4 * hidden, 1)};
    for (std::size_t i = hidden; i < 2 * hidden; ++i) d.b(i, 0) = 1.0;  // forget gate
    return d;
  }
  static LstmDirection zeros(std::size_t input_dim, std::size_t hidden) {
    return {Matrix(4 * hidden, input_dim), Matrix(4 * hidden, hidden), Matrix(4 * hidden, 1)};
  }

  friend bool operator==(const LstmDirection&, const LstmDirection&) = default;
};

struct LstmParams {
  LstmDirection forward;
  LstmDirection backward;
  Matrix P;    // K x 2H emission projection
  Matrix b_p;  // K x 1

  std::size_t hidden() const { return forward.hidden(); }

  friend bool operator==(const LstmParams&, const LstmParams&) = default;
};

struct BiLstmCrfParams {
  LstmParams lstm;
  TransitionTable crf;

  static BiLstmCrfParams init(const ModelDims& d, SeededRng& rng) {
    BiLstmCrfParams p;
    p.lstm.forward = LstmDirection::init(d.input_dim(), d.hidden, rng);
    p.lstm.backward = LstmDirection::init(d.input_dim(), d.hidden, rng);
    p.lstm.P = uniform_init(d.num_tags, 2 * d.hidden, -1.0, 1.0, rng);
    p.lstm.b_p = Matrix(d.num_tags, 1);
    p.crf = TransitionTable::zeros(d.num_tags);
    return p;
  }
  static BiLstmCrfParams zeros(const ModelDims& d) {
    BiLstmCrfParams p;
    p.lstm.forward = LstmDirection::zeros(d.input_dim(), d.hidden);
    p.lstm.backward = LstmDirection::zeros(d.input_dim(), d.hidden);
    p.lstm.P = Matrix(d.num_tags, 2 * d.hidden);
    p.lstm.b_p = Matrix(d.num_tags, 1);
    p.crf = TransitionTable::zeros(d.num_tags);
    return p;
  }

  template <typename F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  friend bool operator==(const BiLstmCrfParams&, const BiLstmCrfParams&) = default;

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    f("lstm.forward.Wx", self.lstm.forward.Wx);
    f("lstm.forward.Wh", self.lstm.forward.Wh);
    f("lstm.forward.b", self.lstm.forward.b);
    f("lstm.backward.Wx", self.lstm.backward.Wx);
    f("lstm.backward.Wh", self.lstm.backward.Wh);
    f("lstm.backward.b", self.lstm.backward.b);
    f("lstm.P", self.lstm.P);
    f("lstm.b_p", self.lstm.b_p);
    self.crf.for_each(f);
  }
};

namespace detail {

struct LstmStepCache {
  Vector i, f, o, g;
  Vector c, tanh_c, h;
};

inline LstmStepCache lstm_cell(std::span<const double> x, const HiddenState& state,
                               const LstmDirection& p) {
  const std::size_t hidden = p.hidden();
  require_size(x, p.Wx.cols(), "lstm_step input");
  require_size(state.h, hidden, "lstm_step h");
  require_size(state.c, hidden, "lstm_step c");
  Vector a(p.b.values().begin(), p.b.values().end());
  gemv_accumulate(p.Wx, x, a);
  gemv_accumulate(p.Wh, state.h, a);
  LstmStepCache s;
  s.i.resize(hidden);
  s.f.resize(hidden);
  s.o.resize(hidden);
  s.g.resize(hidden);
  s.c.resize(hidden);
  s.tanh_c.resize(hidden);
  s.h.resize(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    s.i[j] = sigmoid(a[j]);
    s.f[j] = sigmoid(a[hidden + j]);
    s.o[j] = sigmoid(a[2 * hidden + j]);
    s.g[j] = std::tanh(a[3 * hidden + j]);
    s.c[j] = s.f[j] * state.c[j] + s.i[j] * s.g[j];
    s.tanh_c[j] = std::tanh(s.c[j]);
    s.h[j] = s.o[j] * s.tanh_c[j];
  }
  return s;
}

}  // namespace detail

inline HiddenState lstm_step(std::span<const double> x, const HiddenState& state,
                             const LstmDirection& p) {
  auto s = detail::lstm_cell(x, state, p);
  return {std::move(s.h), std::move(s.c)};
}

// Row t is [forward h(t); backward h(t)], each direction from a zero state.
inline Matrix bilstm_forward(const std::vector<Vector>& xs, const LstmParams& p) {
  if (xs.empty()) throw InvalidArgument("bilstm_forward: empty sequence");
  const std::size_t n = xs.size(), hidden = p.hidden();
  Matrix out(n, 2 * hidden);
  HiddenState state = HiddenState::zeros(hidden);
  for (std::size_t t = 0; t < n; ++t) {
    state = lstm_step(xs[t], state, p.forward);
    std::copy(state.h.begin(), state.h.end(), out.row(t).begin());
  }
  state = HiddenState::zeros(hidden);
  for (std::size_t t = n; t-- > 0;) {
    state = lstm_step(xs[t], state, p.backward);
    std::copy(state.h.begin(), state.h.end(), out.row(t).begin() + hidden);
  }
  return out;
}

namespace detail {

// Runs one direction over `order`, keeping every step for backpropagation.
inline std::vector<LstmStepCache> run_direction(const std::vector<Vector>& xs,
                                                const LstmDirection& p,
                                                const std::vector<std::size_t>& order) {
  std::vector<LstmStepCache> steps(xs.size());
  HiddenState state = HiddenState::zeros(p.hidden());
  for (std::size_t t : order) {
    steps[t] = lstm_cell(xs[t], state, p);
    state.h = steps[t].h;
    state.c = steps[t].c;
  }
  return steps;
}

// Backpropagates dL/dh(t) (from the emission layer) through one direction.
// `order` is the processing order used in the forward run.
inline void backprop_direction(const std::vector<Vector>& xs, const LstmDirection& p,
                               const std::vector<std::size_t>& order,
                               const std::vector<LstmStepCache>& steps,
                               const std::vector<Vector>& dh_out, LstmDirection& g,
                               std::vector<Vector>& dxs) {
  const std::size_t hidden = p.hidden();
  Vector dh_next(hidden, 0.0), dc_next(hidden, 0.0);
  Vector da(4 * hidden);
  const Vector zeros(hidden, 0.0);
  for (std::size_t k = order.size(); k-- > 0;) {
    const std::size_t t = order[k];
    const LstmStepCache& s = steps[t];
    const Vector& c_prev = k > 0 ? steps[order[k - 1]].c : zeros;
    const Vector& h_prev = k > 0 ? steps[order[k - 1]].h : zeros;
    for (std::size_t j = 0; j < hidden; ++j) {
      const double dh = dh_out[t][j] + dh_next[j];
      const double dc = dc_next[j] + dh * s.o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
      const double d_o = dh * s.tanh_c[j];
      const double d_i = dc * s.g[j];
      const double d_g = dc * s.i[j];
      const double d_f = dc * c_prev[j];
      da[j] = d_i * s.i[j] * (1.0 - s.i[j]);
      da[hidden + j] = d_f * s.f[j] * (1.0 - s.f[j]);
      da[2 * hidden + j] = d_o * s.o[j] * (1.0 - s.o[j]);
      da[3 * hidden + j] = d_g * (1.0 - s.g[j] * s.g[j]);
      dc_next[j] = dc * s.f[j];
    }
    outer_accumulate(g.Wx, da, xs[t]);
    outer_accumulate(g.Wh, da, h_prev);
    add_to(g.b.values(), da);
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    gemv_transposed_accumulate(p.Wh, da, dh_next);
    gemv_transposed_accumulate(p.Wx, da, dxs[t]);
  }
}

struct BiLstmForward {
  std::vector<Vector> xs;  // dropped-out window embeddings
  std::vector<std::size_t> left_to_right, right_to_left;
  std::vector<LstmStepCache> fwd, bwd;
  std::vector<Vector> features;  // dropped-out [h_fwd; h_bwd]
  EmissionScores emissions;
};

inline BiLstmForward bilstm_crf_forward(const EmbeddingTable& table, const BiLstmCrfParams& p,
                                        std::size_t window, const EncodedSentence& sentence,
                                        const DropoutMasks* masks) {
  const std::size_t n = sentence.words.size();
  const std::size_t hidden = p.lstm.hidden();
  BiLstmForward f;
  f.xs.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    f.xs[t] = embed_position(table, sentence.words, t, window);
    apply_mask(f.xs[t], masks ? &masks->input : nullptr, t);
    f.left_to_right.push_back(t);
    f.right_to_left.push_back(n - 1 - t);
  }
  f.fwd = run_direction(f.xs, p.lstm.forward, f.left_to_right);
  f.bwd = run_direction(f.xs, p.lstm.backward, f.right_to_left);
  f.features.resize(n);
  f.emissions = Matrix(n, p.lstm.P.rows());
  for (std::size_t t = 0; t < n; ++t) {
    Vector& feat = f.features[t];
    feat.reserve(2 * hidden);
    feat.insert(feat.end(), f.fwd[t].h.begin(), f.fwd[t].h.end());
    feat.insert(feat.end(), f.bwd[t].h.begin(), f.bwd[t].h.end());
    apply_mask(feat, masks ? &masks->hidden : nullptr, t);
    auto row = f.emissions.row(t);
    std::copy(p.lstm.b_p.values().begin(), p.lstm.b_p.values().end(), row.begin());
    gemv_accumulate(p.lstm.P, feat, row);
  }
  return f;
}

// CRF negative log-likelihood of the gold tags, with optional gradients.
inline double bilstm_crf_pass(const EmbeddingTable& table, const BiLstmCrfParams& p,
                              std::size_t window, const EncodedSentence& sentence,
                              const DropoutMasks* masks, BiLstmCrfParams* grads,
                              EmbeddingGradient* embed_grads) {
  const BiLstmForward f = bilstm_crf_forward(table, p, window, sentence, masks);
  if (grads == nullptr) return crf_nll(f.emissions, p.crf, sentence.tags);

  const CrfGradients cg = crf_gradients(f.emissions, p.crf, sentence.tags);
  add_to(grads->crf.transitions.values(), cg.transitions.transitions.values());
  add_to(grads->crf.start.values(), cg.transitions.start.values());
  add_to(grads->crf.stop.values(), cg.transitions.stop.values());

  const std::size_t n = sentence.words.size();
  const std::size_t hidden = p.lstm.hidden();
  std::vector<Vector> dh_fwd(n, Vector(hidden)), dh_bwd(n, Vector(hidden));
  for (std::size_t t = 0; t < n; ++t) {
    const auto de = cg.emissions.row(t);
    outer_accumulate(grads->lstm.P, de, f.features[t]);
    add_to(grads->lstm.b_p.values(), de);
    Vector dfeat(2 * hidden, 0.0);
    gemv_transposed_accumulate(p.lstm.P, de, dfeat);
    apply_mask(dfeat, masks ? &masks->hidden : nullptr, t);
    std::copy(dfeat.begin(), dfeat.begin() + hidden, dh_fwd[t].begin());
    std::copy(dfeat.begin() + hidden, dfeat.end(), dh_bwd[t].begin());
  }
  std::vector<Vector> dxs(n, Vector(f.xs.front().size(), 0.0));
  backprop_direction(f.xs, p.lstm.forward, f.left_to_right, f.fwd, dh_fwd, grads->lstm.forward, dxs);
  backprop_direction(f.xs, p.lstm.backward, f.right_to_left, f.bwd, dh_bwd, grads->lstm.backward, dxs);
  if (embed_grads != nullptr) {
    for (std::size_t t = 0; t < n; ++t) {
      apply_mask(dxs[t], masks ? &masks->input : nullptr, t);
      scatter_window_gradient(*embed_grads, sentence.words, t, window, table.dim(), dxs[t]);
    }
  }
  return cg.nll;
}

}  // namespace detail

}  // namespace dnr
