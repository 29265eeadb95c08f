#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "symlin.hpp"

namespace oedkit {

using Vector = std::vector<double>;
using SimulateFn = std::function<Vector(const Vector& phi, const Vector& theta)>;

struct LabeledExperiment {
  std::string name;
  SimulateFn simulate;
  std::vector<std::pair<double, double>> input_bounds;
  Vector output_sigmas;
  std::vector<std::string> parameter_names;
  Vector nominal_parameters;
  std::vector<std::string> input_names;
  std::vector<std::string> output_names;

  std::size_t num_inputs() const { return input_bounds.size(); }
  std::size_t num_outputs() const { return output_sigmas.size(); }
  std::size_t num_parameters() const { return parameter_names.size(); }

  void validate() const {
    if (!simulate) throw Error(ErrorKind::InvalidArgument, name + ": no simulate function");
    for (std::size_t k = 0; k < input_bounds.size(); ++k)
      if (!(input_bounds[k].first < input_bounds[k].second))
        throw Error(ErrorKind::InvalidArgument, name + ": design bound " + std::to_string(k) +
                                                    " has lo >= hi");
    for (double s : output_sigmas)
      if (!(s > 0.0)) throw Error(ErrorKind::InvalidArgument, name + ": output sigma must be > 0");
    if (input_bounds.size() != input_names.size())
      throw Error(ErrorKind::DimensionMismatch, name + ": input bounds and names differ in length");
    if (output_sigmas.size() != output_names.size())
      throw Error(ErrorKind::DimensionMismatch, name + ": output sigmas and names differ in length");
    if (nominal_parameters.size() != parameter_names.size())
      throw Error(ErrorKind::DimensionMismatch, name + ": nominal parameter count");
  }

  // simulate with failure and finiteness checks
  Vector run(const Vector& phi, const Vector& theta) const {
    Vector y;
    try {
      y = simulate(phi, theta);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(ErrorKind::SimulationFailure, name + ": " + e.what());
    }
    if (y.size() != num_outputs())
      throw Error(ErrorKind::DimensionMismatch, name + ": simulate returned " +
                                                    std::to_string(y.size()) + " outputs");
    for (double v : y)
      if (!std::isfinite(v)) throw Error(ErrorKind::NonFinite, name + ": non-finite output");
    return y;
  }
};

struct Record {
  Vector phi;
  Vector y;
};

using Dataset = std::vector<Record>;

struct MeasurementCovariance {
  Vector sigmas;  // Σ_y = diag(σ²)
};

enum class FdScheme { Central, Forward };

struct SensitivityMatrix {
  Matrix q;       // N_meas × p
  Vector steps;   // h_j
};

struct PriorInformation {
  SymMatrix fim_prior;

  static PriorInformation none(std::size_t p) { return {SymMatrix(p)}; }
};

inline constexpr double fd_abs_floor = 1e-8;

inline double fd_step(double theta_j, double rel_step, double abs_floor = fd_abs_floor) {
  return rel_step * std::max(std::abs(theta_j), abs_floor);
}

inline SensitivityMatrix sensitivity_matrix(const LabeledExperiment& exp, const Vector& phi,
                                            const Vector& theta, FdScheme scheme,
                                            double rel_step) {
  if (!(rel_step > 0.0)) throw Error(ErrorKind::InvalidArgument, "rel_step must be > 0");
  if (theta.size() != exp.num_parameters())
    throw Error(ErrorKind::DimensionMismatch, "sensitivity_matrix: parameter count");
  const std::size_t p = theta.size();
  const std::size_t n = exp.num_outputs();
  SensitivityMatrix out{Matrix(n, p), Vector(p)};
  const Vector base = scheme == FdScheme::Forward ? exp.run(phi, theta) : Vector{};
  for (std::size_t j = 0; j < p; ++j) {
    const double h = fd_step(theta[j], rel_step);
    out.steps[j] = h;
    Vector tp = theta;
    tp[j] += h;
    const Vector yp = exp.run(phi, tp);
    if (scheme == FdScheme::Central) {
      Vector tm = theta;
      tm[j] -= h;
      const Vector ym = exp.run(phi, tm);
      for (std::size_t r = 0; r < n; ++r) out.q(r, j) = (yp[r] - ym[r]) / (2.0 * h);
    } else {
      for (std::size_t r = 0; r < n; ++r) out.q(r, j) = (yp[r] - base[r]) / h;
    }
  }
  return out;
}

// Sensitivities with respect to relative parameters θ_j/θ̂_j.
inline SensitivityMatrix scale_by_nominal(SensitivityMatrix s, const Vector& theta) {
  for (std::size_t r = 0; r < s.q.rows(); ++r)
    for (std::size_t j = 0; j < s.q.cols(); ++j) s.q(r, j) *= theta[j];
  return s;
}

inline SymMatrix assemble_fim(const SensitivityMatrix& q, const MeasurementCovariance& sigma,
                              const PriorInformation& prior) {
  const std::size_t n = q.q.rows();
  const std::size_t p = q.q.cols();
  if (sigma.sigmas.size() != n)
    throw Error(ErrorKind::DimensionMismatch, "assemble_fim: sigma length");
  if (prior.fim_prior.dim() != p)
    throw Error(ErrorKind::DimensionMismatch, "assemble_fim: prior dimension");
  Matrix m(p, p);
  for (std::size_t r = 0; r < n; ++r) {
    const double w = 1.0 / (sigma.sigmas[r] * sigma.sigmas[r]);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) m(i, j) += q.q(r, i) * q.q(r, j) * w;
  }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) m(i, j) += prior.fim_prior(i, j);
  return SymMatrix::from_full(m);
}

struct Inversion {
  SymMatrix value;
  bool rank_deficient = false;
};

namespace detail {

inline Inversion invert_sym(const SymMatrix& m) {
  detail::require_finite(m, "inversion input");
  const EigenDecomposition ed = sym_eigen(m);
  const double cut = default_rtol(m.dim()) * max_abs_eigenvalue(ed);
  bool deficient = false;
  for (double l : ed.eigenvalues)
    if (!(std::abs(l) > cut) || l == 0.0) deficient = true;
  return {pseudo_inverse(ed, default_rtol(m.dim())), deficient};
}

}  // namespace detail

inline Inversion covariance_from_fim(const SymMatrix& m) { return detail::invert_sym(m); }
inline Inversion fim_from_covariance(const SymMatrix& v) { return detail::invert_sym(v); }

}  // namespace oedkit
