#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "experiment.hpp"
#include "random.hpp"

namespace oedkit {

// ---------------------------------------------------------------- BOD

inline double bod_simulate(double t, double theta1, double theta2) {
  return theta1 * (1.0 - std::exp(-theta2 * t));
}

inline LabeledExperiment bod_experiment(Vector nominal = {20.3, 0.53}) {
  LabeledExperiment e;
  e.name = "bod";
  e.simulate = [](const Vector& phi, const Vector& th) {
    if (phi.size() != 1 || th.size() != 2)
      throw Error(ErrorKind::DimensionMismatch, "bod: expects 1 input and 2 parameters");
    if (phi[0] < 0.0) throw Error(ErrorKind::InvalidArgument, "bod: sample time must be >= 0");
    return Vector{bod_simulate(phi[0], th[0], th[1])};
  };
  e.input_bounds = {{1.0, 10.0}};
  e.output_sigmas = {1.0};
  e.parameter_names = {"theta1", "theta2"};
  e.nominal_parameters = std::move(nominal);
  e.input_names = {"t"};
  e.output_names = {"y"};
  return e;
}

// ---------------------------------------------------------------- TCLab

struct TclabSettings {
  double t_amb = 21.0;
  double dt = 1.0;
  double interval = 30.0;
  std::size_t intervals = 30;
  double cap = 85.0;
};

inline constexpr double tclab_alpha = 0.00016;
inline constexpr double tclab_power = 200.0;

// β from (U_a, U_b, Cp_H, Cp_S).
inline Vector tclab_beta(double ua, double ub, double cph, double cps) {
  return {ua / cph, ub / cph, ub / cps, tclab_alpha * tclab_power / cph};
}

inline Vector tclab_table_beta() { return tclab_beta(0.0418, 0.0303, 5.487, 0.588); }

struct TclabTrajectory {
  Vector t;    // sample instants
  Vector ts;   // T_S at samples
  Vector th;   // T_H at samples
  double peak = 0.0;  // max over every integration step and both states
};

inline TclabTrajectory tclab_integrate(const Vector& u, const Vector& beta,
                                       const TclabSettings& s = {}) {
  if (u.size() != s.intervals)
    throw Error(ErrorKind::DimensionMismatch,
                "tclab: expected " + std::to_string(s.intervals) + " control values");
  if (beta.size() != 4) throw Error(ErrorKind::DimensionMismatch, "tclab: expected 4 parameters");
  const double ratio = s.interval / s.dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (!(s.dt > 0.0) || std::abs(ratio - static_cast<double>(steps)) > 1e-9 || steps == 0)
    throw Error(ErrorKind::InvalidArgument, "tclab: dt must divide the control interval");
  const double b1 = beta[0], b2 = beta[1], b3 = beta[2], b4 = beta[3];
  const double ta = s.t_amb;

  TclabTrajectory out;
  double th = ta, ts = ta;
  out.peak = ta;
  for (std::size_t k = 0; k < s.intervals; ++k) {
    const double uk = u[k];
    auto f = [&](double h, double sv, double& dh, double& ds) {
      dh = b1 * (ta - h) + b2 * (sv - h) + b4 * uk;
      ds = b3 * (h - sv);
    };
    for (std::size_t n = 0; n < steps; ++n) {
      double k1h, k1s, k2h, k2s, k3h, k3s, k4h, k4s;
      const double dt = s.dt;
      f(th, ts, k1h, k1s);
      f(th + 0.5 * dt * k1h, ts + 0.5 * dt * k1s, k2h, k2s);
      f(th + 0.5 * dt * k2h, ts + 0.5 * dt * k2s, k3h, k3s);
      f(th + dt * k3h, ts + dt * k3s, k4h, k4s);
      th += dt / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h);
      ts += dt / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
      out.peak = std::max({out.peak, th, ts});
    }
    out.t.push_back(static_cast<double>(k + 1) * s.interval);
    out.ts.push_back(ts);
    out.th.push_back(th);
  }
  if (!std::isfinite(out.peak)) throw Error(ErrorKind::NonFinite, "tclab: trajectory diverged");
  return out;
}

inline Vector tclab_simulate(const Vector& u, const Vector& beta, const TclabSettings& s = {}) {
  return tclab_integrate(u, beta, s).ts;
}

// Quadratic penalty on the temperature cap (weight per squared °C).
inline double tclab_cap_penalty(const Vector& u, const Vector& beta, const TclabSettings& s,
                                double weight = 1e3) {
  const double over = tclab_integrate(u, beta, s).peak - s.cap;
  return over > 0.0 ? weight * over * over : 0.0;
}

inline LabeledExperiment tclab_experiment(Vector nominal = tclab_table_beta(),
                                          TclabSettings s = {}) {
  LabeledExperiment e;
  e.name = "tclab";
  e.simulate = [s](const Vector& phi, const Vector& th) { return tclab_simulate(phi, th, s); };
  e.input_bounds.assign(s.intervals, {0.0, 1.0});
  e.output_sigmas.assign(s.intervals, 0.25);
  e.parameter_names = {"beta1", "beta2", "beta3", "beta4"};
  e.nominal_parameters = std::move(nominal);
  for (std::size_t k = 0; k < s.intervals; ++k) {
    e.input_names.push_back("u" + std::to_string(k + 1));
    e.output_names.push_back("TS_" + std::to_string(static_cast<long>((k + 1) * s.interval)));
  }
  return e;
}

// ---------------------------------------------------------------- membrane

struct MembraneSettings {
  double r_gas = 8.314;
  double temperature = 298.15;
  double delta_p = 1e6;
  double width = 1.5;
  double length = 200.0;
  std::size_t elements = 10;
  std::array<double, 2> charge{1.0, 2.0};
  double damping = 0.5;
  double tear_tol = 1e-12;
  std::size_t max_iterations = 500;

  double element_area() const { return length / static_cast<double>(elements) * width; }
};

inline Vector membrane_truth() { return {3e-7, 1.3, 0.5, 5e-4, 1.5e-4}; }

struct Stream {
  double q = 0.0;
  std::array<double, 2> c{0.0, 0.0};
};

inline Stream mix(const Stream& a, const Stream& b) {
  Stream m;
  m.q = a.q + b.q;
  for (int j = 0; j < 2; ++j) m.c[j] = (a.q * a.c[j] + b.q * b.c[j]) / m.q;
  return m;
}

struct MembraneSolution {
  Stream product_permeate;   // stage-3 permeate (q_pp, c_pp)
  Stream product_retentate;  // stage-1 retentate (q_rp, c_rp)
  std::array<Stream, 3> retentate;
  std::array<Stream, 3> permeate;
  std::size_t iterations = 0;
  double tear_residual = 0.0;
  double min_state = 0.0;
  std::array<double, 2> min_sieving{0.0, 0.0};
};

namespace detail {

struct MembraneParams {
  double lp;
  std::array<double, 2> s_bar;
  std::array<double, 2> delta;
};

struct StageOut {
  Stream retentate;
  Stream permeate;
};

class MembraneSolver {
 public:
  MembraneSolver(const MembraneSettings& s, const Vector& theta) : s_(s) {
    if (theta.size() != 5) throw Error(ErrorKind::DimensionMismatch, "membrane: 5 parameters");
    p_ = {theta[0], {theta[1], theta[2]}, {theta[3], theta[4]}};
    rt_ = s.r_gas * s.temperature;
    area_ = s.element_area();
  }

  double min_state = 0.0;
  std::array<double, 2> min_sieving{1e300, 1e300};

  // One finite volume: permeate flux from the retentate-side osmotic
  // pressure, sieving from the inlet ionic strength.
  void element(Stream& in, Stream& permeate) {
    const auto& c_in = in.c;
    double strength = 0.0;
    for (int j = 0; j < 2; ++j) strength += c_in[j] * s_.charge[j] * s_.charge[j];
    std::array<double, 2> sv{};
    for (int j = 0; j < 2; ++j) {
      sv[j] = p_.s_bar[j] + p_.delta[j] * strength;
      min_sieving[j] = std::min(min_sieving[j], sv[j]);
    }
    std::array<double, 2> cr{};
    double jw = p_.lp * s_.delta_p;
    for (int it = 0; it < 200; ++it) {
      const double qp = jw * area_;
      const double qo = in.q - qp;
      double osm = 0.0;
      for (int j = 0; j < 2; ++j) {
        cr[j] = in.q * c_in[j] / (qo + qp * sv[j]);
        osm += cr[j] * (1.0 - sv[j]);
      }
      const double jn = p_.lp * (s_.delta_p - rt_ * osm);
      const bool done = std::abs(jn - jw) <= 1e-15 * std::abs(jw);
      jw = jn;
      if (done) break;
    }
    const double qp = jw * area_;
    const double qo = in.q - qp;
    for (int j = 0; j < 2; ++j) cr[j] = in.q * c_in[j] / (qo + qp * sv[j]);
    permeate.q = qp;
    for (int j = 0; j < 2; ++j) permeate.c[j] = sv[j] * cr[j];
    in.q = qo;
    in.c = cr;
    track(in);
    track(permeate);
  }

  StageOut stage(Stream feed, const Stream* side) {
    double qp_total = 0.0;
    std::array<double, 2> mass{0.0, 0.0};
    for (std::size_t e = 0; e < s_.elements; ++e) {
      if (side && e + 1 == s_.elements) feed = mix(feed, *side);
      Stream perm;
      element(feed, perm);
      qp_total += perm.q;
      for (int j = 0; j < 2; ++j) mass[j] += perm.q * perm.c[j];
    }
    StageOut out{feed, {qp_total, {mass[0] / qp_total, mass[1] / qp_total}}};
    return out;
  }

 private:
  void track(const Stream& st) {
    min_state = std::min({min_state, st.q, st.c[0], st.c[1]});
  }

  MembraneSettings s_;
  MembraneParams p_{};
  double rt_ = 0.0;
  double area_ = 0.0;
};

}  // namespace detail

// Three-stage diafiltration cascade. Stage 1 is fed by the stage-2
// retentate, stage 2 by the stage-3 retentate plus stage-1 permeate, stage 3
// by diafiltrate plus stage-2 permeate with the fresh feed joining ahead of
// its last element. Tear: stage-2 and stage-3 retentates.
inline MembraneSolution membrane_solve(const Vector& phi, const Vector& theta,
                                       const MembraneSettings& s = {}) {
  if (phi.size() != 4) throw Error(ErrorKind::DimensionMismatch, "membrane: 4 design inputs");
  for (double v : phi)
    if (!(v >= 0.0)) throw Error(ErrorKind::InvalidArgument, "membrane: design must be >= 0");
  for (double v : theta)
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, "membrane: parameters");
  const double q_df = phi[0], q_ff = phi[1];
  const Stream fresh{q_ff, {phi[2], phi[3]}};
  const Stream diafiltrate{q_df, {0.0, 0.0}};

  detail::MembraneSolver solver(s, theta);
  // tear guess: total fresh flow at feed composition
  const double guess_q = q_ff + q_df;
  std::array<double, 6> x{guess_q, phi[2], phi[3], guess_q, phi[2], phi[3]};

  MembraneSolution sol;
  for (std::size_t it = 1; it <= s.max_iterations; ++it) {
    solver.min_state = 0.0;
    const detail::StageOut s1 = solver.stage(Stream{x[0], {x[1], x[2]}}, nullptr);
    const detail::StageOut s2 = solver.stage(mix(Stream{x[3], {x[4], x[5]}}, s1.permeate), nullptr);
    const detail::StageOut s3 = solver.stage(mix(diafiltrate, s2.permeate), &fresh);

    const std::array<double, 6> xn{s2.retentate.q, s2.retentate.c[0], s2.retentate.c[1],
                                   s3.retentate.q, s3.retentate.c[0], s3.retentate.c[1]};
    double res = 0.0;
    for (int k = 0; k < 6; ++k) {
      const double r = std::abs(xn[k] - x[k]) / std::max(std::abs(x[k]), 1e-12);
      res = std::isnan(r) ? r : std::max(res, r);
      if (std::isnan(res)) break;
    }
    if (!std::isfinite(res))
      throw Error(ErrorKind::RecycleNotConverged,
                  "membrane: tear residual is not finite at iteration " + std::to_string(it));
    if (solver.min_state < -1e-10)
      throw Error(ErrorKind::NegativeState, "membrane: negative flow or concentration " +
                                                std::to_string(solver.min_state));

    sol.iterations = it;
    sol.tear_residual = res;
    sol.retentate = {s1.retentate, s2.retentate, s3.retentate};
    sol.permeate = {s1.permeate, s2.permeate, s3.permeate};
    if (res < s.tear_tol) {
      sol.product_permeate = s3.permeate;
      sol.product_retentate = s1.retentate;
      sol.min_state = solver.min_state;
      sol.min_sieving = solver.min_sieving;
      return sol;
    }
    for (int k = 0; k < 6; ++k) x[k] = s.damping * x[k] + (1.0 - s.damping) * xn[k];
  }
  throw Error(ErrorKind::RecycleNotConverged,
              "membrane: tear residual " + std::to_string(sol.tear_residual) + " after " +
                  std::to_string(s.max_iterations) + " iterations");
}

inline Vector membrane_simulate(const Vector& phi, const Vector& theta,
                                const MembraneSettings& s = {}) {
  const MembraneSolution sol = membrane_solve(phi, theta, s);
  const Stream& pp = sol.product_permeate;
  const Stream& rp = sol.product_retentate;
  return {pp.q, pp.c[0], pp.c[1], rp.q, rp.c[0], rp.c[1]};
}

inline LabeledExperiment membrane_experiment(Vector nominal = membrane_truth(),
                                             MembraneSettings s = {}) {
  LabeledExperiment e;
  e.name = "membrane";
  e.simulate = [s](const Vector& phi, const Vector& th) { return membrane_simulate(phi, th, s); };
  e.input_bounds = {{27.0, 33.0}, {90.0, 110.0}, {1.5, 2.0}, {15.0, 20.0}};
  e.output_sigmas = {2.0, 0.1, 0.1, 2.0, 0.1, 0.1};
  e.parameter_names = {"L_p", "S_bar1", "S_bar2", "delta1", "delta2"};
  e.nominal_parameters = std::move(nominal);
  e.input_names = {"q_df", "q_ff", "c_ff1", "c_ff2"};
  e.output_names = {"q_pp", "c_pp1", "c_pp2", "q_rp", "c_rp1", "c_rp2"};
  return e;
}

// ---------------------------------------------------------------- data

// All corners of the per-input level lists (first input varies slowest),
// with N(0, σ_r²) noise on each output.
inline Dataset generate_factorial_data(const LabeledExperiment& model,
                                       const std::vector<Vector>& levels, const Vector& theta,
                                       std::uint64_t seed, double noise_scale = 1.0) {
  if (levels.size() != model.num_inputs())
    throw Error(ErrorKind::DimensionMismatch, "factorial: one level list per design input");
  std::size_t total = 1;
  for (const auto& l : levels) {
    if (l.empty()) throw Error(ErrorKind::InvalidArgument, "factorial: empty level list");
    total *= l.size();
  }
  SplitMix64 rng(seed);
  Dataset out;
  for (std::size_t n = 0; n < total; ++n) {
    Vector phi(levels.size());
    std::size_t rem = n;
    for (std::size_t k = levels.size(); k-- > 0;) {
      phi[k] = levels[k][rem % levels[k].size()];
      rem /= levels[k].size();
    }
    Vector y = model.run(phi, theta);
    for (std::size_t r = 0; r < y.size(); ++r) y[r] += noise_scale * model.output_sigmas[r] * rng.normal();
    out.push_back({phi, y});
  }
  return out;
}

}  // namespace oedkit
