#include <gtest/gtest.h>

#include <cmath>

#include "oedkit/models.hpp"

using namespace oedkit;

namespace {

const Vector truth = membrane_truth();

std::vector<Vector> factorial_points() {
  std::vector<Vector> out;
  for (double qdf : {27.0, 33.0})
    for (double qff : {90.0, 110.0}) out.push_back({qdf, qff, 1.7, 17.0});
  return out;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

void expect_balanced(const Vector& phi, const MembraneSolution& s, double tol) {
  const double q_in = phi[0] + phi[1];
  const double q_out = s.product_permeate.q + s.product_retentate.q;
  EXPECT_LT(rel(q_out, q_in), tol);
  for (int j = 0; j < 2; ++j) {
    const double in = phi[1] * phi[2 + j];
    const double out = s.product_permeate.q * s.product_permeate.c[j] +
                       s.product_retentate.q * s.product_retentate.c[j];
    if (in == 0.0) {
      EXPECT_EQ(out, 0.0);
    } else {
      EXPECT_LT(rel(out, in), tol);
    }
  }
}

}  // namespace

TEST(Bod, ClosedForm) {
  EXPECT_NEAR(bod_simulate(1.0, 20.3, 0.53), 8.352, 1e-3);
  EXPECT_EQ(bod_simulate(0.0, 20.3, 0.53), 0.0);
  EXPECT_NEAR(bod_simulate(100.0, 20.3, 0.53), 20.3, 1e-10);
}

TEST(Bod, IncreasingInTime) {
  double prev = -1.0;
  for (double t = 0.0; t <= 20.0; t += 0.25) {
    const double y = bod_simulate(t, 20.3, 0.53);
    EXPECT_GT(y, prev);
    prev = y;
  }
}

TEST(Tclab, EquilibriumWithHeaterOff) {
  const Vector y = tclab_simulate(Vector(30, 0.0), tclab_table_beta());
  for (double v : y) EXPECT_EQ(v, 21.0);
}

TEST(Tclab, SteadyStateUnderConstantHeater) {
  TclabSettings s;
  s.intervals = 400;
  const Vector beta = tclab_table_beta();
  const TclabTrajectory tr = tclab_integrate(Vector(s.intervals, 0.5), beta, s);
  const double expected = s.t_amb + beta[3] * 0.5 / beta[0];
  EXPECT_NEAR(tr.th.back(), expected, 0.01);
  EXPECT_NEAR(tr.ts.back(), expected, 0.01);
}

TEST(Tclab, Superposition) {
  const Vector beta = tclab_table_beta();
  SplitMix64 rng(3);
  Vector u1(30), u2(30), mix(30);
  for (std::size_t k = 0; k < 30; ++k) {
    u1[k] = rng.uniform();
    u2[k] = rng.uniform();
    mix[k] = 0.3 * u1[k] + 0.6 * u2[k];
  }
  const Vector y1 = tclab_simulate(u1, beta), y2 = tclab_simulate(u2, beta),
               ym = tclab_simulate(mix, beta);
  for (std::size_t k = 0; k < 30; ++k)
    EXPECT_NEAR(ym[k] - 21.0, 0.3 * (y1[k] - 21.0) + 0.6 * (y2[k] - 21.0), 1e-8);
}

TEST(Tclab, StepRefinementConvergesAtFourthOrder) {
  const Vector beta = tclab_table_beta();
  Vector u(30);
  for (std::size_t k = 0; k < 30; ++k) u[k] = k % 3 == 0 ? 1.0 : 0.2;
  auto run = [&](double dt) {
    TclabSettings s;
    s.dt = dt;
    return tclab_simulate(u, beta, s);
  };
  const Vector a = run(2.0), b = run(1.0), c = run(0.5);
  double d1 = 0.0, d2 = 0.0;
  for (std::size_t k = 0; k < 30; ++k) {
    d1 = std::max(d1, std::abs(a[k] - b[k]));
    d2 = std::max(d2, std::abs(b[k] - c[k]));
  }
  EXPECT_GT(d1 / d2, 10.0);
}

TEST(Tclab, RejectsBadProfiles) {
  EXPECT_THROW(tclab_simulate(Vector(29, 0.0), tclab_table_beta()), Error);
  TclabSettings s;
  s.dt = 7.0;
  EXPECT_THROW(tclab_simulate(Vector(30, 0.0), tclab_table_beta(), s), Error);
}

TEST(Tclab, CapPenaltyOnlyAboveCap) {
  const Vector beta = tclab_table_beta();
  EXPECT_EQ(tclab_cap_penalty(Vector(30, 1.0), beta, {}), 0.0);
  TclabSettings s;
  s.cap = 21.5;
  EXPECT_GT(tclab_cap_penalty(Vector(30, 1.0), beta, s), 0.0);
}

TEST(Membrane, MidpointBalances) {
  const Vector phi{30, 100, 1.7, 17};
  const MembraneSolution s = membrane_solve(phi, truth);
  expect_balanced(phi, s, 1e-6);
  EXPECT_LT(s.tear_residual, 1e-12);
}

TEST(Membrane, StageBalances) {
  const Vector phi{30, 100, 1.7, 17};
  const MembraneSolution s = membrane_solve(phi, truth);
  auto flow = [](const Stream& a) { return a.q; };
  auto ion = [](const Stream& a, int j) { return a.q * a.c[j]; };
  const auto& r = s.retentate;
  const auto& p = s.permeate;
  EXPECT_LT(rel(flow(r[0]) + flow(p[0]), flow(r[1])), 1e-8);
  EXPECT_LT(rel(flow(r[1]) + flow(p[1]), flow(r[2]) + flow(p[0])), 1e-8);
  EXPECT_LT(rel(flow(r[2]) + flow(p[2]), phi[0] + phi[1] + flow(p[1])), 1e-8);
  for (int j = 0; j < 2; ++j) {
    EXPECT_LT(rel(ion(r[0], j) + ion(p[0], j), ion(r[1], j)), 1e-8);
    EXPECT_LT(rel(ion(r[1], j) + ion(p[1], j), ion(r[2], j) + ion(p[0], j)), 1e-8);
    EXPECT_LT(rel(ion(r[2], j) + ion(p[2], j), phi[1] * phi[2 + j] + ion(p[1], j)), 1e-8);
  }
}

TEST(Membrane, FactorialBalancesAndSievingPositive) {
  for (const Vector& phi : factorial_points()) {
    const MembraneSolution s = membrane_solve(phi, truth);
    expect_balanced(phi, s, 1e-6);
    EXPECT_GT(s.min_sieving[0], 0.0);
    EXPECT_GT(s.min_sieving[1], 0.0);
    EXPECT_GE(s.min_state, -1e-10);
  }
}

TEST(Membrane, OptimalConditionsConverge) {
  const Vector phi{27, 110, 2.0, 20.0};
  const Vector y = membrane_simulate(phi, truth);
  for (double v : y) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 0.0);
  }
  expect_balanced(phi, membrane_solve(phi, truth), 1e-6);
}

TEST(Membrane, ZeroSoluteFeed) {
  const Vector phi{30, 100, 0.0, 0.0};
  const MembraneSolution s = membrane_solve(phi, truth);
  EXPECT_EQ(s.product_permeate.c[0], 0.0);
  EXPECT_EQ(s.product_permeate.c[1], 0.0);
  EXPECT_EQ(s.product_retentate.c[0], 0.0);
  EXPECT_EQ(s.product_retentate.c[1], 0.0);
  expect_balanced(phi, s, 1e-6);
}

TEST(Membrane, ElementRefinementConverges) {
  const Vector phi{30, 100, 1.7, 17};
  auto run = [&](std::size_t n) {
    MembraneSettings s;
    s.elements = n;
    return membrane_simulate(phi, truth, s);
  };
  const Vector y10 = run(10), y20 = run(20), y40 = run(40);
  double d1 = 0.0, d2 = 0.0;
  for (std::size_t k = 0; k < y10.size(); ++k) {
    d1 = std::max(d1, rel(y10[k], y20[k]));
    d2 = std::max(d2, rel(y20[k], y40[k]));
  }
  RecordProperty("delta_10_20", std::to_string(d1));
  RecordProperty("delta_20_40", std::to_string(d2));
  EXPECT_LT(d1, 0.05);
  EXPECT_LT(d2, d1);
}

TEST(Membrane, ZeroPermeabilityFailsToConverge) {
  try {
    membrane_simulate({30, 100, 1.7, 17}, {0.0, 1.3, 0.5, 5e-4, 1.5e-4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RecycleNotConverged);
    EXPECT_TRUE(e.numerical());
  }
}

TEST(Membrane, RejectsBadShapes) {
  EXPECT_THROW(membrane_simulate({30, 100, 1.7}, truth), Error);
  EXPECT_THROW(membrane_simulate({30, 100, 1.7, 17}, {1.0}), Error);
}

TEST(Factorial, MembraneDesign) {
  const LabeledExperiment e = membrane_experiment();
  const std::vector<Vector> levels{{27, 33}, {90, 110}, {1.7}, {17}};
  const Dataset a = generate_factorial_data(e, levels, truth, 5);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a[1].phi, (Vector{27, 110, 1.7, 17}));
  const Dataset b = generate_factorial_data(e, levels, truth, 5);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(a[k].y, b[k].y);
  const Dataset clean = generate_factorial_data(e, levels, truth, 5, 0.0);
  for (const Record& r : clean) EXPECT_EQ(r.y, e.run(r.phi, truth));
  const Dataset other = generate_factorial_data(e, levels, truth, 6);
  EXPECT_NE(a[0].y, other[0].y);
}
