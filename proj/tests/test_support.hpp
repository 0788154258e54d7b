#pragma once

// Test-only oracles. Nothing here calls into the CRF or model code it is used
// to check.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dnr/dnr.hpp"

namespace dnr::testing {

inline std::string data_path(const std::string& name) {
  return std::string(DNR_TEST_DATA_DIR) + "/" + name;
}

struct CrfInstance {
  Matrix emissions;
  TransitionTable table;
};

inline CrfInstance random_crf(std::size_t length, std::size_t tags, std::mt19937_64& gen,
                              double lo = -5.0, double hi = 5.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  CrfInstance c{Matrix(length, tags), TransitionTable::zeros(tags)};
  for (double& v : c.emissions.values()) v = u(gen);
  for (double& v : c.table.transitions.values()) v = u(gen);
  for (double& v : c.table.start.values()) v = u(gen);
  for (double& v : c.table.stop.values()) v = u(gen);
  return c;
}

// Direct evaluation of the path score, written independently of crf.hpp.
inline double oracle_path_score(const CrfInstance& c, const std::vector<TagId>& y) {
  double s = c.table.start.values()[y[0]] + c.table.stop.values()[y.back()];
  for (std::size_t t = 0; t < y.size(); ++t) {
    s += c.emissions.values()[t * c.emissions.cols() + y[t]];
    if (t > 0) s += c.table.transitions.values()[y[t - 1] * c.emissions.cols() + y[t]];
  }
  return s;
}

// Calls f(path) for every K^T tag sequence in lexicographic order.
template <typename F>
void enumerate_paths(std::size_t length, std::size_t tags, F&& f) {
  std::vector<TagId> y(length, 0);
  while (true) {
    f(y);
    std::size_t pos = length;
    while (pos > 0) {
      --pos;
      if (++y[pos] < tags) break;
      y[pos] = 0;
      if (pos == 0) return;
    }
    if (length == 0) return;
  }
}

struct BruteForce {
  double log_z = 0.0;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<TagId> best_path;  // first maximum in lexicographic order
};

inline BruteForce brute_force(const CrfInstance& c) {
  const std::size_t n = c.emissions.rows(), k = c.emissions.cols();
  std::vector<double> scores;
  BruteForce out;
  enumerate_paths(n, k, [&](const std::vector<TagId>& y) {
    const double s = oracle_path_score(c, y);
    scores.push_back(s);
    if (s > out.best_score) {
      out.best_score = s;
      out.best_path = y;
    }
  });
  double m = -std::numeric_limits<double>::infinity();
  for (double s : scores) m = std::max(m, s);
  long double total = 0.0L;
  for (double s : scores) total += std::exp(static_cast<long double>(s - m));
  out.log_z = m + static_cast<double>(std::log(total));
  return out;
}

inline EncodedSentence random_sentence(std::size_t length, std::size_t vocab, std::size_t tags,
                                       std::mt19937_64& gen) {
  std::uniform_int_distribution<std::size_t> w(0, vocab - 1), t(0, tags - 1);
  EncodedSentence s;
  for (std::size_t i = 0; i < length; ++i) {
    s.words.push_back(w(gen));
    s.tags.push_back(t(gen));
  }
  return s;
}

// Rescales every weight of a freshly initialized model into [-scale, scale).
inline void shrink(Model& model, double scale) {
  for (double& v : model.embeddings().weights.values()) v *= scale;
  model.for_each_dense([&](std::string_view, Matrix& m) {
    for (double& v : m.values()) v *= scale;
  });
}

// Finite-difference check of Model::loss over every parameter, embeddings
// included (as a dense block).
inline GradientCheckResult check_model_gradients(Model& model, const EncodedSentence& s,
                                                 const DropoutMasks* masks, double step = 1e-6) {
  Gradients g = model.zero_gradients();
  model.loss(s, masks, &g);
  std::vector<Matrix> analytic;
  std::vector<std::string> names;
  std::visit([&](const auto& p) {
    p.for_each([&](std::string_view name, const Matrix& m) {
      analytic.push_back(m);
      names.emplace_back(name);
    });
  }, g.params);
  Matrix embed_grad(model.embeddings().rows(), model.embeddings().dim());
  for (const auto& [row, v] : g.embeddings) {
    for (std::size_t k = 0; k < v.size(); ++k) embed_grad(row, k) = v[k];
  }
  std::vector<GradientBlock> blocks;
  blocks.push_back({"embeddings", model.embeddings().weights.values(), embed_grad.values()});
  std::size_t i = 0;
  model.for_each_dense([&](std::string_view, Matrix& m) {
    blocks.push_back({names[i], m.values(), analytic[i].values()});
    ++i;
  });
  return finite_diff_check([&] { return model.loss(s, masks, nullptr); }, blocks, step);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream b;
  b << in.rdbuf();
  return b.str();
}

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("dnr_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace dnr::testing
