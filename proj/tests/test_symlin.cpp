#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "oedkit/random.hpp"
#include "oedkit/symlin.hpp"

using namespace oedkit;

namespace {

SymMatrix random_symmetric(std::size_t p, std::uint64_t seed) {
  SplitMix64 rng(seed);
  SymMatrix m(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) m.set(i, j, rng.uniform(-5.0, 5.0));
  return m;
}

Eigen::MatrixXd to_eigen(const SymMatrix& m) {
  Eigen::MatrixXd a(m.dim(), m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) a(i, j) = m(i, j);
  return a;
}

}  // namespace

TEST(TriIndex, RoundTripsEveryPair) {
  for (std::size_t p = 1; p <= 20; ++p) {
    EXPECT_EQ(tri_size(p), p * (p + 1) / 2);
    std::size_t expected = 0;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = i; j < p; ++j) {
        const std::size_t k = tri_index(i, j, p);
        EXPECT_EQ(k, expected++);
        EXPECT_EQ(tri_pair(k, p), std::make_pair(i, j));
      }
  }
}

TEST(TriIndex, RejectsLowerOrOutOfRange) {
  EXPECT_THROW(tri_index(1, 0, 2), Error);
  EXPECT_THROW(tri_index(0, 2, 2), Error);
}

TEST(ExpandFull, TwoByTwo) {
  const Matrix a = expand_full(SymMatrix(2, {1.0, 2.0, 3.0}));
  EXPECT_EQ(a(0, 0), 1.0);
  EXPECT_EQ(a(0, 1), 2.0);
  EXPECT_EQ(a(1, 0), 2.0);
  EXPECT_EQ(a(1, 1), 3.0);
}

TEST(SymEigen, Diagonal) {
  const EigenDecomposition ed = sym_eigen(SymMatrix::diagonal({2.0, 4.0}));
  EXPECT_EQ(ed.eigenvalues[0], 2.0);
  EXPECT_EQ(ed.eigenvalues[1], 4.0);
  EXPECT_EQ(ed.vec(0, 0), 1.0);
  EXPECT_EQ(ed.vec(1, 0), 0.0);
  EXPECT_EQ(ed.vec(0, 1), 0.0);
  EXPECT_EQ(ed.vec(1, 1), 1.0);
}

TEST(SymEigen, Identity) {
  const EigenDecomposition ed = sym_eigen(SymMatrix::identity(3));
  for (double l : ed.eigenvalues) EXPECT_EQ(l, 1.0);
}

TEST(SymEigen, TwoByTwoSignRule) {
  const EigenDecomposition ed = sym_eigen(SymMatrix(2, {2.0, 1.0, 2.0}));
  EXPECT_NEAR(ed.eigenvalues[0], 1.0, 1e-15);
  EXPECT_NEAR(ed.eigenvalues[1], 3.0, 1e-15);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(ed.vec(0, 0), r, 1e-15);
  EXPECT_NEAR(ed.vec(1, 0), -r, 1e-15);
  EXPECT_NEAR(ed.vec(0, 1), r, 1e-15);
  EXPECT_NEAR(ed.vec(1, 1), r, 1e-15);
}

TEST(SymEigen, ReconstructsAndIsOrthonormal) {
  for (std::size_t p = 2; p <= 12; ++p)
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const SymMatrix m = random_symmetric(p, 1000 * p + seed);
      const EigenDecomposition ed = sym_eigen(m);
      const double scale = m.full().norm_inf();
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
          double rec = 0.0, dot = 0.0;
          for (std::size_t s = 0; s < p; ++s) {
            rec += ed.vec(i, s) * ed.eigenvalues[s] * ed.vec(j, s);
            dot += ed.vec(s, i) * ed.vec(s, j);
          }
          EXPECT_NEAR(rec, m(i, j), 1e-9 * scale);
          EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-12);
        }
      for (std::size_t s = 1; s < p; ++s) EXPECT_LE(ed.eigenvalues[s - 1], ed.eigenvalues[s]);
    }
}

TEST(SymEigen, MatchesEigenOracle) {
  for (std::size_t p = 2; p <= 10; ++p) {
    const SymMatrix m = random_symmetric(p, 77 + p);
    const EigenDecomposition ed = sym_eigen(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(m));
    for (std::size_t s = 0; s < p; ++s) {
      EXPECT_NEAR(ed.eigenvalues[s], es.eigenvalues()(static_cast<long>(s)), 1e-12 * 25.0);
      double dot = 0.0;
      for (std::size_t i = 0; i < p; ++i)
        dot += ed.vec(i, s) * es.eigenvectors()(static_cast<long>(i), static_cast<long>(s));
      EXPECT_NEAR(std::abs(dot), 1.0, 1e-9);
    }
  }
}

TEST(SymEigen, LargestComponentPositive) {
  const EigenDecomposition ed = sym_eigen(random_symmetric(6, 5));
  for (std::size_t s = 0; s < 6; ++s) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < 6; ++i)
      if (std::abs(ed.vec(i, s)) > std::abs(ed.vec(arg, s))) arg = i;
    EXPECT_GT(ed.vec(arg, s), 0.0);
  }
}

TEST(SymEigen, RejectsNonFinite) {
  SymMatrix m = SymMatrix::identity(2);
  m.set(0, 1, std::nan(""));
  EXPECT_THROW(sym_eigen(m), Error);
}

TEST(PseudoInverse, Examples) {
  const SymMatrix a = pseudo_inverse(SymMatrix::diagonal({2.0, 4.0}));
  EXPECT_DOUBLE_EQ(a(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(a(1, 1), 0.25);
  EXPECT_EQ(a(0, 1), 0.0);

  const SymMatrix b = pseudo_inverse(SymMatrix::diagonal({1.0, 0.0}), 1e-12);
  EXPECT_DOUBLE_EQ(b(0, 0), 1.0);
  EXPECT_EQ(b(1, 1), 0.0);

  const SymMatrix c = pseudo_inverse(SymMatrix(2, {5.0, 3.0, 2.0}));
  EXPECT_NEAR(c(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(c(0, 1), -3.0, 1e-12);
  EXPECT_NEAR(c(1, 1), 5.0, 1e-12);
}

TEST(PseudoInverse, Idempotent) {
  for (std::size_t p = 2; p <= 8; ++p) {
    SymMatrix m = random_symmetric(p, 300 + p);
    for (std::size_t i = 0; i < p; ++i) m.add(i, i, 20.0);
    const SymMatrix back = pseudo_inverse(pseudo_inverse(m));
    for (std::size_t k = 0; k < m.entries().size(); ++k)
      EXPECT_NEAR(back.entries()[k], m.entries()[k], 1e-8 * std::max(1.0, std::abs(m.entries()[k])));
  }
}

TEST(PseudoInverse, PenroseConditionsOnRankDeficient) {
  // rank 2 in 4 dimensions
  Matrix b(4, 2);
  SplitMix64 rng(9);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 2; ++j) b(i, j) = rng.uniform(-1.0, 1.0);
  const SymMatrix m = SymMatrix::from_full(b * b.transpose());
  const Matrix a = m.full();
  const Matrix x = pseudo_inverse(m).full();
  EXPECT_LT((a * x * a - a).max_abs(), 1e-12);
  EXPECT_LT((x * a * x - x).max_abs(), 1e-9);
  const Eigen::MatrixXd oracle = to_eigen(m).completeOrthogonalDecomposition().pseudoInverse();
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      EXPECT_NEAR(x(i, j), oracle(static_cast<long>(i), static_cast<long>(j)), 1e-8);
}

TEST(SignedLogDet, Examples) {
  const SignedLogDet a = signed_log_det(SymMatrix::identity(4));
  EXPECT_EQ(a.sign, 1);
  EXPECT_EQ(a.logabsdet, 0.0);
  const SignedLogDet b = signed_log_det(SymMatrix::diagonal({2.0, 4.0}));
  EXPECT_EQ(b.sign, 1);
  EXPECT_NEAR(b.logabsdet, 2.0794415416798357, 1e-15);
  const SignedLogDet c = signed_log_det(SymMatrix::diagonal({3.0, -2.0}));
  EXPECT_EQ(c.sign, -1);
  EXPECT_NEAR(c.logabsdet, std::log(6.0), 1e-15);
  EXPECT_EQ(signed_log_det(SymMatrix::diagonal({1.0, 0.0})).sign, 0);
}

TEST(SignedLogDet, MatchesEigenOracle) {
  for (std::size_t p = 2; p <= 10; ++p) {
    const SymMatrix m = random_symmetric(p, 500 + p);
    const SignedLogDet r = signed_log_det(m);
    const double det = to_eigen(m).determinant();
    EXPECT_EQ(r.sign, det > 0 ? 1 : -1);
    EXPECT_NEAR(r.logabsdet, std::log(std::abs(det)), 1e-10 * std::abs(std::log(std::abs(det))) + 1e-12);
  }
}
