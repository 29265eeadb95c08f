#include <gtest/gtest.h>

#include "oedkit/verify.hpp"

using namespace oedkit;

namespace {

const std::vector<Criterion> nontrivial{Criterion::A, Criterion::D, Criterion::E, Criterion::ME};

double condition(const SymMatrix& m) {
  const auto l = sym_eigen(m).eigenvalues;
  return l.back() / l.front();
}

}  // namespace

TEST(RandomSpd, MinimumEigenvalue) {
  for (std::size_t p = 2; p <= 10; ++p)
    for (std::uint64_t s = 0; s < 20; ++s)
      EXPECT_GE(sym_eigen(random_spd(p, s)).eigenvalues.front(), 0.1 - 1e-12);
}

TEST(RandomSpd, Reproducible) {
  EXPECT_EQ(random_spd(4, 17), random_spd(4, 17));
  EXPECT_NE(random_spd(4, 17), random_spd(4, 18));
}

TEST(RandomSpd, FrozenConditionNumber) {
  const double k = condition(random_spd(5, 42));
  EXPECT_LT(k, 1e6);
  EXPECT_NEAR(k, 45.237494221175474, 1e-8 * 45.237494221175474);
}

TEST(SampleSeed, DistinctAcrossCoordinates) {
  std::set<std::uint64_t> seen;
  for (std::size_t p = 2; p <= 10; ++p)
    for (std::size_t s = 0; s < 100; ++s)
      for (std::size_t a = 0; a < 2; ++a) seen.insert(sample_seed(2024, p, s, a));
  EXPECT_EQ(seen.size(), 9u * 100u * 2u);
}

TEST(Log10Error, FloorAndScale) {
  EXPECT_EQ(log10_rel_error(1.0, 1.0, 1.0), log10_error_floor);
  EXPECT_NEAR(log10_rel_error(1.0, 1.001, 1.0), -3.0, 1e-9);
  // tiny analytic entries are measured against the matrix scale
  EXPECT_NEAR(log10_rel_error(0.0, 1e-12, 1.0), -4.0, 1e-9);
}

TEST(FirstOrder, PseudoAIsExactToRounding) {
  const VerificationReport r = check_first_derivatives({Criterion::PseudoA}, {2, 5, 10}, 20);
  for (const VerificationRow& row : r.rows) EXPECT_LE(row.max_log10, -10.0);
}

TEST(FirstOrder, ErrorsShrinkWithCentralScheme) {
  const VerificationReport fwd = check_first_derivatives(nontrivial, {3}, 20, 1e-4, FdScheme::Forward);
  const VerificationReport ctr = check_first_derivatives(nontrivial, {3}, 20, 1e-4, FdScheme::Central);
  for (std::size_t k = 0; k < fwd.rows.size(); ++k)
    EXPECT_LT(ctr.rows[k].mean_log10, fwd.rows[k].mean_log10 - 2.0) << to_string(fwd.rows[k].criterion);
}

TEST(SecondOrder, EveryElementWithinThreshold) {
  const VerificationReport r = check_second_derivatives(nontrivial, 2, 10);
  ASSERT_EQ(r.rows.size(), 4u);
  for (const VerificationRow& row : r.rows) {
    EXPECT_EQ(row.element_max_log10.size(), 16u);
    EXPECT_LE(row.max_log10, -3.0) << to_string(row.criterion);
  }
}

TEST(SecondOrder, PseudoAExactlyZero) {
  const VerificationReport r = check_second_derivatives({Criterion::PseudoA}, 2, 5);
  EXPECT_EQ(r.rows[0].max_log10, log10_error_floor);
}

TEST(TriSpace, GradientAndHessian) {
  const VerificationReport r = check_greybox(nontrivial, {2, 3, 4}, 10);
  for (const VerificationRow& row : r.rows) {
    const double limit = row.order == 2 ? -3.0 : (row.criterion == Criterion::D ? -5.0 : -4.5);
    const double measured = row.order == 2 ? row.max_log10 : row.mean_log10;
    EXPECT_LE(measured, limit) << to_string(row.criterion) << " p=" << row.p << " order " << row.order;
  }
}

TEST(Reports, ReproduciblePerSeed) {
  const auto a = check_first_derivatives(nontrivial, {2, 4}, 10, 1e-4, FdScheme::Forward, 7);
  const auto b = check_first_derivatives(nontrivial, {2, 4}, 10, 1e-4, FdScheme::Forward, 7);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    EXPECT_EQ(a.rows[k].mean_log10, b.rows[k].mean_log10);
    EXPECT_EQ(a.rows[k].max_log10, b.rows[k].max_log10);
  }
}
