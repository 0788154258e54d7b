#pragma once

// Dense row-major matrices, activations, the seeded generator and the
// central-difference gradient checker shared by every model.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dnr/error.hpp"

namespace dnr {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw InvalidArgument("Matrix: data length " + std::to_string(data_.size()) +
                            " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double value) { std::fill(data_.begin(), data_.end(), value); }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline std::string shape_string(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// out += m * x
inline void gemv_accumulate(const Matrix& m, std::span<const double> x, std::span<double> out) {
  if (x.size() != m.cols() || out.size() != m.rows()) {
    throw InvalidArgument("gemv: matrix " + shape_string(m) + " against x[" +
                          std::to_string(x.size()) + "], out[" + std::to_string(out.size()) + "]");
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.row(r).data();
    double sum = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) sum += row[c] * x[c];
    out[r] += sum;
  }
}

// out += m^T * x
inline void gemv_transposed_accumulate(const Matrix& m, std::span<const double> x,
                                       std::span<double> out) {
  if (x.size() != m.rows() || out.size() != m.cols()) {
    throw InvalidArgument("gemv^T: matrix " + shape_string(m) + " against x[" +
                          std::to_string(x.size()) + "], out[" + std::to_string(out.size()) + "]");
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    const double* row = m.row(r).data();
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += row[c] * xr;
  }
}

// m += a * b^T
inline void outer_accumulate(Matrix& m, std::span<const double> a, std::span<const double> b) {
  if (a.size() != m.rows() || b.size() != m.cols()) {
    throw InvalidArgument("outer: matrix " + shape_string(m) + " against a[" +
                          std::to_string(a.size()) + "], b[" + std::to_string(b.size()) + "]");
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double ar = a[r];
    if (ar == 0.0) continue;
    double* row = m.row(r).data();
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += ar * b[c];
  }
}

inline void add_to(std::span<double> dst, std::span<const double> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

// Stable for |x| up to the double range: never evaluates exp of a positive argument.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Vector softmax(std::span<const double> z) {
  if (z.empty()) throw InvalidArgument("softmax: empty input");
  const double shift = *std::max_element(z.begin(), z.end());
  Vector out(z.size());
  double total = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    out[k] = std::exp(z[k] - shift);
    total += out[k];
  }
  for (double& v : out) v /= total;
  return out;
}

inline double log_sum_exp(std::span<const double> z) {
  if (z.empty()) throw InvalidArgument("log_sum_exp: empty input");
  const double shift = *std::max_element(z.begin(), z.end());
  if (shift == -std::numeric_limits<double>::infinity()) return shift;
  double total = 0.0;
  for (double v : z) total += std::exp(v - shift);
  return shift + std::log(total);
}

// Lowest index wins ties.
inline std::size_t argmax(std::span<const double> z) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < z.size(); ++k) {
    if (z[k] > z[best]) best = k;
  }
  return best;
}

// MT19937-64 for the raw stream (output sequence fixed by the C++ standard);
// integer and real conversions are done here so results do not depend on the
// standard library's distribution implementations.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next() { return engine_(); }

  // [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n).
  std::size_t below(std::size_t n) {
    if (n == 0) throw InvalidArgument("SeededRng::below: n must be positive");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = next();
    while (draw >= limit) draw = next();
    return static_cast<std::size_t>(draw % bound);
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  // Independent stream keyed by (seed, stream); used to give each search
  // trial its own generator regardless of scheduling.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ (stream + 0x9E3779B97F4A7C15ULL));
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

inline Matrix uniform_init(std::size_t rows, std::size_t cols, double lo, double hi,
                           SeededRng& rng) {
  if (!(lo < hi)) {
    throw InvalidArgument("uniform_init: lo (" + std::to_string(lo) + ") must be < hi (" +
                          std::to_string(hi) + ")");
  }
  Matrix m(rows, cols);
  for (double& v : m.values()) {
    v = rng.uniform(lo, hi);
    // lo + (hi-lo)*u can round up to hi when u is just below 1.
    if (v >= hi) v = std::nextafter(hi, lo);
  }
  return m;
}

// A parameter block under test: live values the loss closure reads, and the
// analytic gradient computed at those values.
struct GradientBlock {
  std::string name;
  std::span<double> values;
  std::span<const double> analytic;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_block;
  std::size_t worst_index = 0;
};

inline GradientCheckResult finite_diff_check(const std::function<double()>& loss,
                                             std::span<const GradientBlock> blocks,
                                             double step) {
  if (!(step > 0.0)) throw InvalidArgument("finite_diff_check: step must be > 0");
  GradientCheckResult result;
  for (const GradientBlock& block : blocks) {
    if (block.values.size() != block.analytic.size()) {
      throw InvalidArgument("finite_diff_check: block '" + block.name +
                            "' has mismatched gradient length");
    }
    for (std::size_t i = 0; i < block.values.size(); ++i) {
      const double saved = block.values[i];
      block.values[i] = saved + step;
      const double plus = loss();
      block.values[i] = saved - step;
      const double minus = loss();
      block.values[i] = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw NumericError("finite_diff_check: non-finite loss probing " + block.name + "[" +
                           std::to_string(i) + "]");
      }
      const double numeric = (plus - minus) / (2.0 * step);
      const double analytic = block.analytic[i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic - numeric) / denom;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_block = block.name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace dnr
