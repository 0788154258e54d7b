#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dnr/numeric.hpp"

namespace dnr {
namespace {

TEST(Sigmoid, SymmetryPointAndReference) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  // 40-digit evaluation of 1/(1+e^-10)
  EXPECT_NEAR(sigmoid(10.0), 0.9999546021312975656054952, 1e-12);
}

TEST(Sigmoid, ComplementSymmetry) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-700.0, 700.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(gen);
    EXPECT_NEAR(sigmoid(-x) + sigmoid(x), 1.0, 1e-15) << x;
  }
}

TEST(Sigmoid, NoOverflowAtExtremes) {
  EXPECT_TRUE(std::isfinite(sigmoid(-700.0)));
  EXPECT_TRUE(std::isfinite(sigmoid(700.0)));
  EXPECT_GE(sigmoid(-700.0), 0.0);
  EXPECT_LE(sigmoid(700.0), 1.0);
}

TEST(Sigmoid, Monotone) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int i = 0; i < 1000; ++i) {
    double a = u(gen), b = u(gen);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    EXPECT_LT(sigmoid(a), sigmoid(b));
  }
}

TEST(Softmax, UniformLogits) {
  const auto p = softmax(Vector{0.0, 0.0, 0.0});
  for (double v : p) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Softmax, MatchesHighPrecisionReference) {
  const auto p = softmax(Vector{1.0, 2.0, 3.0});
  EXPECT_NEAR(p[0], 0.0900305731703804579980221, 1e-12);
  EXPECT_NEAR(p[1], 0.2447284710547976524729596, 1e-12);
  EXPECT_NEAR(p[2], 0.6652409557748218895290183, 1e-12);
}

TEST(Softmax, ShiftInvariant) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    Vector z(5);
    for (double& v : z) v = u(gen);
    const double c = u(gen) * 50.0;
    Vector shifted = z;
    for (double& v : shifted) v += c;
    const auto a = softmax(z), b = softmax(shifted);
    for (std::size_t k = 0; k < z.size(); ++k) EXPECT_NEAR(a[k], b[k], 1e-12);
  }
}

TEST(Softmax, ProbabilityVectorOnWideInputs) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::uniform_int_distribution<int> len(1, 12);
  for (int i = 0; i < 1000; ++i) {
    Vector z(static_cast<std::size_t>(len(gen)));
    for (double& v : z) v = u(gen);
    const auto p = softmax(z);
    double sum = 0.0;
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(Softmax, EmptyIsError) { EXPECT_THROW(softmax(Vector{}), InvalidArgument); }

TEST(UniformInit, Deterministic) {
  SeededRng a(7), b(7);
  EXPECT_EQ(uniform_init(2, 2, -1.0, 1.0, a), uniform_init(2, 2, -1.0, 1.0, b));
}

TEST(UniformInit, RangeContainment) {
  SeededRng rng(11);
  const Matrix m = uniform_init(100, 100, -1.0, 1.0, rng);
  for (double v : m.values()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LT(v, 1.0);
  }
  const Matrix tiny = uniform_init(1, 1, 0.0, 0.0001, rng);
  EXPECT_GE(tiny(0, 0), 0.0);
  EXPECT_LT(tiny(0, 0), 0.0001);
}

TEST(UniformInit, RejectsEmptyRange) {
  SeededRng rng(1);
  EXPECT_THROW(uniform_init(1, 1, 1.0, 1.0, rng), InvalidArgument);
  EXPECT_THROW(uniform_init(1, 1, 2.0, 1.0, rng), InvalidArgument);
}

TEST(SeededRng, BelowIsInRangeAndShuffleIsPermutation) {
  SeededRng rng(5);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.below(7), 7u);
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  rng.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}));
  EXPECT_NE(SeededRng::derive_seed(1, 0), SeededRng::derive_seed(1, 1));
}

TEST(FiniteDiffCheck, ExactQuadratic) {
  Vector p{0.3, -1.2, 2.5, 0.0};
  Vector grad(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) grad[i] = 2.0 * p[i];
  auto loss = [&] {
    double s = 0.0;
    for (double v : p) s += v * v;
    return s;
  };
  const GradientBlock blocks[] = {{"p", p, grad}};
  EXPECT_LT(finite_diff_check(loss, blocks, 1e-6).max_relative_error, 1e-8);
}

TEST(FiniteDiffCheck, ReportsWrongGradient) {
  Vector p{1.0, 2.0};
  Vector grad{2.0, 0.0};  // second entry wrong
  auto loss = [&] { return p[0] * p[0] + p[1] * p[1]; };
  const GradientBlock blocks[] = {{"p", p, grad}};
  const auto r = finite_diff_check(loss, blocks, 1e-6);
  EXPECT_NEAR(r.max_relative_error, 1.0, 1e-6);
  EXPECT_EQ(r.worst_block, "p");
  EXPECT_EQ(r.worst_index, 1u);
}

TEST(FiniteDiffCheck, NonFiniteLossNamesParameter) {
  Vector p{1.0};
  Vector grad{0.0};
  auto loss = [&] { return std::log(p[0] - 1.0); };
  const GradientBlock blocks[] = {{"bad", p, grad}};
  try {
    finite_diff_check(loss, blocks, 1e-6);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("bad[0]"), std::string::npos);
  }
}

TEST(Matrix, RejectsInconsistentData) {
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1.0, 2.0, 3.0}), InvalidArgument);
}

}  // namespace
}  // namespace dnr
