#pragma once

// Linear-chain CRF over per-token emission scores.
//
// score(y) = start[y_0] + sum_t e[t, y_t] + sum_{t>0} A[y_{t-1}, y_t] + stop[y_{T-1}]
//
// Everything runs in log space with max-shifted log-sum-exp.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dnr/error.hpp"
#include "dnr/numeric.hpp"
#include "dnr/tags.hpp"

namespace dnr {

using EmissionScores = Matrix;  // T x K

struct TransitionTable {
  Matrix transitions;  // K x K, [from, to]
  Matrix start;        // 1 x K
  Matrix stop;         // 1 x K

  static TransitionTable zeros(std::size_t num_tags) {
    return {Matrix(num_tags, num_tags), Matrix(1, num_tags), Matrix(1, num_tags)};
  }

  std::size_t num_tags() const { return start.cols(); }

  template <typename F>
  void for_each(F&& f) {
    f("crf.transitions", transitions);
    f("crf.start", start);
    f("crf.stop", stop);
  }
  template <typename F>
  void for_each(F&& f) const {
    f("crf.transitions", transitions);
    f("crf.start", start);
    f("crf.stop", stop);
  }

  friend bool operator==(const TransitionTable&, const TransitionTable&) = default;
};

namespace detail {

inline void check_chain(const EmissionScores& e, const TransitionTable& tr, const char* op) {
  if (e.rows() == 0) throw InvalidArgument(std::string(op) + ": empty emission sequence");
  const std::size_t k = e.cols();
  if (tr.transitions.rows() != k || tr.transitions.cols() != k || tr.start.cols() != k ||
      tr.stop.cols() != k || tr.start.rows() != 1 || tr.stop.rows() != 1) {
    throw InvalidArgument(std::string(op) + ": transition table does not match " +
                          std::to_string(k) + " tags");
  }
}

inline void check_gold(const EmissionScores& e, std::span<const TagId> gold, const char* op) {
  if (gold.size() != e.rows()) {
    throw InvalidArgument(std::string(op) + ": gold length " + std::to_string(gold.size()) +
                          " != " + std::to_string(e.rows()) + " positions");
  }
  for (TagId y : gold) {
    if (y >= e.cols()) {
      throw InvalidArgument(std::string(op) + ": gold tag " + std::to_string(y) + " out of range");
    }
  }
}

// alpha[t][k] = log sum over prefixes ending in k at t (emission at t included).
inline Matrix forward_scores(const EmissionScores& e, const TransitionTable& tr) {
  const std::size_t n = e.rows(), k = e.cols();
  Matrix alpha(n, k);
  for (std::size_t j = 0; j < k; ++j) alpha(0, j) = tr.start(0, j) + e(0, j);
  Vector scratch(k);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t i = 0; i < k; ++i) scratch[i] = alpha(t - 1, i) + tr.transitions(i, j);
      alpha(t, j) = e(t, j) + log_sum_exp(scratch);
    }
  }
  return alpha;
}

// beta[t][k] = log sum over suffixes after t given y_t = k (stop included).
inline Matrix backward_scores(const EmissionScores& e, const TransitionTable& tr) {
  const std::size_t n = e.rows(), k = e.cols();
  Matrix beta(n, k);
  for (std::size_t j = 0; j < k; ++j) beta(n - 1, j) = tr.stop(0, j);
  Vector scratch(k);
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        scratch[j] = tr.transitions(i, j) + e(t + 1, j) + beta(t + 1, j);
      }
      beta(t, i) = log_sum_exp(scratch);
    }
  }
  return beta;
}

inline double final_log_sum(const Matrix& alpha, const TransitionTable& tr) {
  const std::size_t last = alpha.rows() - 1;
  Vector scratch(alpha.cols());
  for (std::size_t j = 0; j < alpha.cols(); ++j) scratch[j] = alpha(last, j) + tr.stop(0, j);
  return log_sum_exp(scratch);
}

}  // namespace detail

inline double crf_path_score(const EmissionScores& e, const TransitionTable& tr,
                             std::span<const TagId> path) {
  detail::check_chain(e, tr, "crf_path_score");
  detail::check_gold(e, path, "crf_path_score");
  double score = tr.start(0, path.front()) + tr.stop(0, path.back());
  for (std::size_t t = 0; t < path.size(); ++t) {
    score += e(t, path[t]);
    if (t > 0) score += tr.transitions(path[t - 1], path[t]);
  }
  return score;
}

inline double crf_log_partition(const EmissionScores& e, const TransitionTable& tr) {
  detail::check_chain(e, tr, "crf_log_partition");
  return detail::final_log_sum(detail::forward_scores(e, tr), tr);
}

inline double crf_nll(const EmissionScores& e, const TransitionTable& tr,
                      std::span<const TagId> gold) {
  detail::check_chain(e, tr, "crf_nll");
  detail::check_gold(e, gold, "crf_nll");
  return crf_log_partition(e, tr) - crf_path_score(e, tr, gold);
}

struct ViterbiResult {
  std::vector<TagId> path;
  double score = 0.0;
};

// Ties go to the lowest tag index, both for the final tag and for every
// back-pointer.
inline ViterbiResult viterbi_decode(const EmissionScores& e, const TransitionTable& tr) {
  detail::check_chain(e, tr, "viterbi_decode");
  const std::size_t n = e.rows(), k = e.cols();
  Matrix delta(n, k);
  std::vector<std::vector<TagId>> back(n, std::vector<TagId>(k, 0));
  for (std::size_t j = 0; j < k; ++j) delta(0, j) = tr.start(0, j) + e(0, j);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      TagId best = 0;
      double best_score = delta(t - 1, 0) + tr.transitions(0, j);
      for (std::size_t i = 1; i < k; ++i) {
        const double s = delta(t - 1, i) + tr.transitions(i, j);
        if (s > best_score) {
          best_score = s;
          best = i;
        }
      }
      delta(t, j) = best_score + e(t, j);
      back[t][j] = best;
    }
  }
  ViterbiResult result;
  TagId last = 0;
  result.score = delta(n - 1, 0) + tr.stop(0, 0);
  for (std::size_t j = 1; j < k; ++j) {
    const double s = delta(n - 1, j) + tr.stop(0, j);
    if (s > result.score) {
      result.score = s;
      last = j;
    }
  }
  result.path.assign(n, 0);
  result.path[n - 1] = last;
  for (std::size_t t = n - 1; t > 0; --t) result.path[t - 1] = back[t][result.path[t]];
  return result;
}

struct CrfGradients {
  double nll = 0.0;
  Matrix emissions;             // T x K
  TransitionTable transitions;  // same layout as the parameters
};

// Gradients of crf_nll from forward-backward marginals.
inline CrfGradients crf_gradients(const EmissionScores& e, const TransitionTable& tr,
                                  std::span<const TagId> gold) {
  detail::check_chain(e, tr, "crf_gradients");
  detail::check_gold(e, gold, "crf_gradients");
  const std::size_t n = e.rows(), k = e.cols();
  const Matrix alpha = detail::forward_scores(e, tr);
  const Matrix beta = detail::backward_scores(e, tr);
  const double log_z = detail::final_log_sum(alpha, tr);

  CrfGradients g;
  g.nll = log_z - crf_path_score(e, tr, gold);
  g.emissions = Matrix(n, k);
  g.transitions = TransitionTable::zeros(k);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      g.emissions(t, j) = std::exp(alpha(t, j) + beta(t, j) - log_z);
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    g.transitions.start(0, j) = g.emissions(0, j);
    g.transitions.stop(0, j) = g.emissions(n - 1, j);
  }
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        g.transitions.transitions(i, j) +=
            std::exp(alpha(t - 1, i) + tr.transitions(i, j) + e(t, j) + beta(t, j) - log_z);
      }
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    g.emissions(t, gold[t]) -= 1.0;
    if (t > 0) g.transitions.transitions(gold[t - 1], gold[t]) -= 1.0;
  }
  g.transitions.start(0, gold.front()) -= 1.0;
  g.transitions.stop(0, gold.back()) -= 1.0;
  return g;
}

// Copy of `tr` with -inf on every bigram (and start) that breaks IOB
// well-formedness. Decode-time only.
inline TransitionTable with_iob_constraints(const TransitionTable& tr) {
  if (tr.num_tags() != TagSet::size()) {
    throw InvalidArgument("with_iob_constraints: table has " + std::to_string(tr.num_tags()) +
                          " tags, expected " + std::to_string(TagSet::size()));
  }
  constexpr double kForbidden = -std::numeric_limits<double>::infinity();
  TransitionTable out = tr;
  for (TagId j = 0; j < TagSet::size(); ++j) {
    if (!TagSet::allowed_bigram(std::nullopt, j)) out.start(0, j) = kForbidden;
    for (TagId i = 0; i < TagSet::size(); ++i) {
      if (!TagSet::allowed_bigram(i, j)) out.transitions(i, j) = kForbidden;
    }
  }
  return out;
}

}  // namespace dnr
