#include <gtest/gtest.h>

#include <cmath>

#include "oedkit/estimate.hpp"
#include "oedkit/models.hpp"

using namespace oedkit;

namespace {

const Dataset bod_table2{{{1.0}, {8.3}}, {{7.0}, {19.8}}};

Bounds box(const Vector& center, double lo, double hi) {
  Bounds b;
  for (double v : center) b.emplace_back(lo * v, hi * v);
  return b;
}

Dataset membrane_factorial(double noise) {
  return generate_factorial_data(membrane_experiment(), {{27, 33}, {90, 110}, {1.7}, {17}},
                                 membrane_truth(), 11, noise);
}

}  // namespace

TEST(Wsse, ZeroResiduals) {
  const LabeledExperiment e = bod_experiment();
  const Dataset d{{{2.0}, {bod_simulate(2.0, 20.3, 0.53)}}};
  EXPECT_EQ(wsse(e, d, {20.3, 0.53}), 0.0);
}

TEST(Wsse, HalfFactor) {
  const LabeledExperiment e = bod_experiment();
  const Dataset d{{{2.0}, {bod_simulate(2.0, 20.3, 0.53) + 2.0}}};
  EXPECT_NEAR(wsse(e, d, {20.3, 0.53}), 2.0, 1e-12);
}

TEST(Wsse, BodTable2ByHand) {
  // y(1) = 8.35132, y(7) = 20.3(1 - e^-3.71) = 19.80311
  const double y1 = 20.3 * (1.0 - std::exp(-0.53));
  const double y7 = 20.3 * (1.0 - std::exp(-3.71));
  const double expected = 0.5 * ((8.3 - y1) * (8.3 - y1) + (19.8 - y7) * (19.8 - y7));
  EXPECT_NEAR(wsse(bod_experiment(), bod_table2, {20.3, 0.53}), expected, 1e-14);
  EXPECT_NEAR(expected, 0.5 * (0.05132 * 0.05132 + 0.00311 * 0.00311), 1e-7);
}

TEST(Estimate, RejectsEmptyOrMisshapenData) {
  const LabeledExperiment e = bod_experiment();
  EXPECT_THROW(estimate_parameters(e, {}, {20, 0.5}, box({20, 0.5}, 0.1, 10)), Error);
  EXPECT_THROW(estimate_parameters(e, {{{1.0, 2.0}, {3.0}}}, {20, 0.5}, box({20, 0.5}, 0.1, 10)), Error);
}

TEST(Estimate, BodTable2) {
  const LabeledExperiment e = bod_experiment();
  const EstimationResult r = estimate_parameters(e, bod_table2, {20.0, 0.5}, {{1.0, 100.0}, {0.01, 5.0}});
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.theta_hat[0], 20.3, 0.02 * 20.3);
  EXPECT_NEAR(r.theta_hat[1], 0.53, 0.02 * 0.53);
  const SymMatrix v = relative_covariance(r.covariance, r.theta_hat);
  EXPECT_NEAR(v(0, 0), 4.03e-3, 0.1 * 4.03e-3);
  EXPECT_NEAR(v(0, 1), -8.27e-3, 0.1 * 8.27e-3);
  EXPECT_NEAR(v(1, 1), 42.8e-3, 0.1 * 42.8e-3);
  EXPECT_LE(r.wsse, wsse(e, bod_table2, {20.0, 0.5}));
}

TEST(Estimate, FimSharesTheAssemblyPath) {
  const LabeledExperiment e = bod_experiment();
  const EstimationOptions opt;
  const EstimationResult r = estimate_parameters(e, bod_table2, {20.0, 0.5}, {{1.0, 100.0}, {0.01, 5.0}}, opt);
  SymMatrix sum(2);
  for (const Record& rec : bod_table2)
    sum += assemble_fim(sensitivity_matrix(e, rec.phi, r.theta_hat, FdScheme::Central, opt.rel_step),
                        {e.output_sigmas}, PriorInformation::none(2));
  for (std::size_t k = 0; k < 3; ++k)
    EXPECT_NEAR(r.fim.entries()[k], sum.entries()[k], 1e-8 * std::abs(sum.entries()[k]));
}

TEST(Estimate, NoiselessBodRecoversTruth) {
  const LabeledExperiment e = bod_experiment();
  Dataset d;
  for (double t : {1.0, 3.0, 7.0}) d.push_back({{t}, {bod_simulate(t, 20.3, 0.53)}});
  const EstimationResult r = estimate_parameters(e, d, {21.0, 0.5}, {{1.0, 100.0}, {0.01, 5.0}});
  EXPECT_NEAR(r.theta_hat[0], 20.3, 1e-6 * 20.3);
  EXPECT_NEAR(r.theta_hat[1], 0.53, 1e-6 * 0.53);
}

TEST(Estimate, NoiselessMembraneFactorial) {
  const Vector truth = membrane_truth();
  const LabeledExperiment e = membrane_experiment();
  const MultistartEstimate ms =
      estimate_multistart(e, membrane_factorial(0.0), std::nullopt, box(truth, 0.8, 1.25), 5, 3);
  for (std::size_t k = 0; k < truth.size(); ++k)
    EXPECT_NEAR(ms.best.theta_hat[k], truth[k], 0.01 * truth[k]) << e.parameter_names[k];
  EXPECT_EQ(ms.starts.size(), 5u);
}

TEST(Estimate, BoundsAreRespected) {
  const LabeledExperiment e = bod_experiment();
  const EstimationResult r = estimate_parameters(e, bod_table2, {14.0, 0.5}, {{1.0, 15.0}, {0.01, 5.0}});
  EXPECT_LE(r.theta_hat[0], 15.0);
  EXPECT_GE(r.theta_hat[1], 0.01);
}

TEST(Estimate, MultistartIsDeterministic) {
  const LabeledExperiment e = bod_experiment();
  const auto a = estimate_multistart(e, bod_table2, std::nullopt, {{1.0, 100.0}, {0.01, 5.0}}, 4, 9);
  const auto b = estimate_multistart(e, bod_table2, std::nullopt, {{1.0, 100.0}, {0.01, 5.0}}, 4, 9);
  EXPECT_EQ(a.best.theta_hat, b.best.theta_hat);
  EXPECT_EQ(a.starts, b.starts);
}

TEST(Estimate, CovarianceShrinksWhenARunIsAppended) {
  const Vector truth = membrane_truth();
  const LabeledExperiment e = membrane_experiment();
  Dataset four = membrane_factorial(0.0);
  Dataset five = four;
  five.push_back({{27, 110, 2.0, 20.0}, e.run({27, 110, 2.0, 20.0}, truth)});
  const SymMatrix v4 = relative_covariance(covariance_from_fim(dataset_fim(e, four, truth, 1e-6)).value, truth);
  const SymMatrix v5 = relative_covariance(covariance_from_fim(dataset_fim(e, five, truth, 1e-6)).value, truth);
  SymMatrix diff = v4;
  diff += -1.0 * v5;
  const double scale = v4.full().norm_inf();
  EXPECT_GE(sym_eigen(diff).eigenvalues.front(), -1e-9 * scale);
}
