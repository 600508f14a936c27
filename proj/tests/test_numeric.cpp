#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "seqtext/numeric.hpp"
#include "seqtext/random.hpp"

using namespace seqtext;

TEST(Matmul, TwoByTwo) {
  const Matrix a{{1, 2}, {3, 4}};
  const Matrix b{{5, 6}, {7, 8}};
  EXPECT_EQ(matmul(a, b), (Matrix{{19, 22}, {43, 50}}));
}

TEST(Matmul, IdentityIsNeutral) {
  Rng rng(3);
  Matrix a(3, 4);
  oracle::randomize(a.values(), rng);
  EXPECT_EQ(matmul(Matrix::identity(3), a), a);
  EXPECT_EQ(matmul(a, Matrix::identity(4)), a);
}

TEST(Matmul, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), ShapeError);
  EXPECT_THROW(matvec(Matrix(2, 3), Vector(2)), ShapeError);
  EXPECT_THROW(add(Vector(2), Vector(3)), ShapeError);
  EXPECT_THROW(hadamard(Vector(2), Vector(3)), ShapeError);
}

TEST(Matmul, RaggedInitializerThrows) {
  EXPECT_THROW((Matrix{{1, 2}, {3}}), ShapeError);
}

TEST(Matvec, AgreesWithMatmulOnColumn) {
  Rng rng(5);
  Matrix m(3, 4), col(4, 1);
  oracle::randomize(m.values(), rng);
  oracle::randomize(col.values(), rng);
  Vector v(std::vector<double>(col.values().begin(), col.values().end()));
  const auto a = matvec(m, v);
  const auto b = matmul(m, col);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(a[i], b(i, 0));
}

TEST(Matvec, TransposeAccumulateMatchesExplicitTranspose) {
  Rng rng(6);
  Matrix m(3, 4);
  oracle::randomize(m.values(), rng);
  const auto v = oracle::random_vector(3, rng);
  Vector out(4, 1.0);
  matvec_t_acc(m, v, out);
  for (std::size_t j = 0; j < 4; ++j) {
    double s = 1.0;
    for (std::size_t i = 0; i < 3; ++i) s += m(i, j) * v[i];
    EXPECT_NEAR(out[j], s, 1e-15);
  }
}

TEST(Matvec, OuterProductAccumulates) {
  Matrix m(2, 3, 1.0);
  add_outer(m, Vector{1, 2}, Vector{3, 4, 5});
  EXPECT_EQ(m, (Matrix{{4, 5, 6}, {7, 9, 11}}));
}

TEST(Elementwise, HadamardAddSubDot) {
  EXPECT_EQ(hadamard(Vector{1, 2, 3}, Vector{4, 5, 6}), (Vector{4, 10, 18}));
  EXPECT_EQ(add(Vector{1, 2}, Vector{3, 4}), (Vector{4, 6}));
  EXPECT_EQ(sub(Vector{1, 2}, Vector{3, 5}), (Vector{-2, -3}));
  EXPECT_DOUBLE_EQ(dot(Vector{1, 2, 3}, Vector{4, 5, 6}), 32.0);
}

TEST(Activations, SigmoidFixtures) {
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(2.0), 1.0 / (1.0 + std::exp(-2.0)), 1e-16);
  EXPECT_TRUE(std::isfinite(sigmoid(-1000.0)));
  EXPECT_TRUE(std::isfinite(sigmoid(1000.0)));
  EXPECT_DOUBLE_EQ(sigmoid(1000.0), 1.0);
}

TEST(Activations, ReluAndTanhFixtures) {
  EXPECT_EQ(relu(-3.0), 0.0);
  EXPECT_EQ(relu(2.5), 2.5);
  EXPECT_EQ(std::tanh(0.0), 0.0);
}

TEST(Activations, SigmoidSymmetryAndRange) {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const double v = rng.uniform(-40.0, 40.0);
    const double s = sigmoid(v);
    EXPECT_GT(s, 0.0);
    EXPECT_LE(s, 1.0);
    if (std::abs(v) < 36.0) {
      EXPECT_LT(s, 1.0);
    }
    EXPECT_NEAR(s + sigmoid(-v), 1.0, 1e-12);
    EXPECT_NEAR(std::tanh(-v), -std::tanh(v), 1e-12);
  }
}

TEST(Activations, DerivativesMatchCentralDifferences) {
  Rng rng(12);
  const double eps = 1e-6;
  for (int i = 0; i < 500; ++i) {
    double x = rng.uniform(-5.0, 5.0);
    const double fd_sig = (sigmoid(x + eps) - sigmoid(x - eps)) / (2 * eps);
    const double fd_tanh = (std::tanh(x + eps) - std::tanh(x - eps)) / (2 * eps);
    EXPECT_NEAR(sigmoid_prime(x), fd_sig, 1e-6);
    EXPECT_NEAR(tanh_prime(x), fd_tanh, 1e-6);
    if (std::abs(x) > eps) {
      const double fd_relu = (relu(x + eps) - relu(x - eps)) / (2 * eps);
      EXPECT_NEAR(relu_prime(x), fd_relu, 1e-6);
    }
  }
}

TEST(Activations, VectorFormsAreElementwise) {
  const Vector x{-1.0, 0.0, 2.0};
  const auto s = sigmoid(x);
  const auto t = seqtext::tanh(x);
  const auto r = relu(x);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(s[i], sigmoid(x[i]));
    EXPECT_EQ(t[i], std::tanh(x[i]));
    EXPECT_EQ(r[i], relu(x[i]));
  }
}

TEST(Finite, DetectsNanAndInf) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_TRUE(all_finite(Vector{1, 2}.values()));
  EXPECT_FALSE(all_finite(Vector{1, nan}.values()));
  EXPECT_FALSE(all_finite(Vector{inf}.values()));
}

TEST(Rng, SameSeedSameStream) {
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  Rng c(100);
  EXPECT_NE(Rng(99).next(), c.next());
}

TEST(Rng, ShuffleIsAPermutation) {
  Rng rng(4);
  std::vector<int> xs(50);
  for (int i = 0; i < 50; ++i) xs[i] = i;
  rng.shuffle(std::span<int>(xs));
  auto sorted = xs;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(Rng, UniformInRange) {
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(rng.below(7), 7u);
  }
}
