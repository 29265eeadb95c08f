#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "experiment.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace oedkit {

using Bounds = std::vector<std::pair<double, double>>;

struct EstimationOptions {
  double rel_step = 1e-6;
  double tol = 1e-9;
  std::size_t max_iterations = 200;
  double initial_damping = 1e-3;
};

struct EstimationResult {
  Vector theta_hat;
  double wsse = 0.0;
  SymMatrix covariance;
  SymMatrix fim;
  bool converged = false;
  std::size_t iterations = 0;
  bool rank_deficient = false;
};

inline void validate_dataset(const LabeledExperiment& exp, const Dataset& data) {
  if (data.empty()) throw Error(ErrorKind::InvalidArgument, "dataset has no records");
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].phi.size() != exp.num_inputs())
      throw Error(ErrorKind::DimensionMismatch, "record " + std::to_string(i) + ": expected " +
                                                    std::to_string(exp.num_inputs()) +
                                                    " design values");
    if (data[i].y.size() != exp.num_outputs())
      throw Error(ErrorKind::DimensionMismatch, "record " + std::to_string(i) + ": expected " +
                                                    std::to_string(exp.num_outputs()) +
                                                    " measurements");
  }
}

// Weighted residuals (y - ŷ)/σ stacked over records.
inline Vector weighted_residuals(const LabeledExperiment& exp, const Dataset& data,
                                 const Vector& theta) {
  Vector r;
  for (const Record& rec : data) {
    const Vector yhat = exp.run(rec.phi, theta);
    for (std::size_t k = 0; k < yhat.size(); ++k)
      r.push_back((rec.y[k] - yhat[k]) / exp.output_sigmas[k]);
  }
  return r;
}

inline double half_sum_squares(const Vector& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return 0.5 * s;
}

// ½ Σ (y - ŷ)²/σ²
inline double wsse(const LabeledExperiment& exp, const Dataset& data, const Vector& theta) {
  return half_sum_squares(weighted_residuals(exp, data, theta));
}

// Σ over records of QᵀΣ⁻¹Q plus prior.
inline SymMatrix dataset_fim(const LabeledExperiment& exp, const Dataset& data,
                             const Vector& theta, double rel_step,
                             std::optional<PriorInformation> prior = std::nullopt) {
  const MeasurementCovariance sigma{exp.output_sigmas};
  SymMatrix m = prior ? prior->fim_prior : SymMatrix(theta.size());
  const PriorInformation zero = PriorInformation::none(theta.size());
  for (const Record& rec : data)
    m += assemble_fim(sensitivity_matrix(exp, rec.phi, theta, FdScheme::Central, rel_step),
                      sigma, zero);
  return m;
}

// D⁻¹ V D⁻¹ with D = diag(θ): covariance of θ_j/θ̂_j.
inline SymMatrix relative_covariance(const SymMatrix& v, const Vector& theta) {
  SymMatrix out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i)
    for (std::size_t j = i; j < v.dim(); ++j) out.set(i, j, v(i, j) / (theta[i] * theta[j]));
  return out;
}

// D M D: information on θ_j/θ̂_j.
inline SymMatrix relative_fim(const SymMatrix& m, const Vector& theta) {
  SymMatrix out(m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = i; j < m.dim(); ++j) out.set(i, j, m(i, j) * theta[i] * theta[j]);
  return out;
}

namespace detail {

// Solves the small SPD system a·x = b by Cholesky; false if not SPD.
inline bool cholesky_solve(Matrix a, Vector b, Vector& x) {
  const std::size_t n = b.size();
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > 0.0)) return false;
    a(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / a(j, j);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= a(i, k) * b[k];
    b[i] /= a(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) b[i] -= a(k, i) * b[k];
    b[i] /= a(i, i);
  }
  x = std::move(b);
  return true;
}

// ∂r/∂x for x_j = θ_j/d_j, from the shared sensitivity code.
inline Matrix scaled_residual_jacobian(const LabeledExperiment& exp, const Dataset& data,
                                       const Vector& theta, const Vector& d, double rel_step) {
  const std::size_t p = theta.size();
  const std::size_t n = exp.num_outputs();
  Matrix j(data.size() * n, p);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const SensitivityMatrix s =
        sensitivity_matrix(exp, data[i].phi, theta, FdScheme::Central, rel_step);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t k = 0; k < p; ++k)
        j(i * n + r, k) = -s.q(r, k) * d[k] / exp.output_sigmas[r];
  }
  return j;
}

}  // namespace detail

// Levenberg-damped Gauss-Newton in nominal-scaled coordinates with box
// projection. Converges on a scaled step or scaled gradient below tol.
inline EstimationResult estimate_parameters(const LabeledExperiment& exp, const Dataset& data,
                                            const Vector& theta0, const Bounds& bounds,
                                            const EstimationOptions& opt = {}) {
  validate_dataset(exp, data);
  const std::size_t p = theta0.size();
  if (p != exp.num_parameters() || bounds.size() != p)
    throw Error(ErrorKind::DimensionMismatch, "estimate: parameter/bounds length");
  for (std::size_t k = 0; k < p; ++k)
    if (theta0[k] < bounds[k].first || theta0[k] > bounds[k].second)
      throw Error(ErrorKind::InvalidArgument, "estimate: initial guess outside bounds");

  Vector d(p);
  for (std::size_t k = 0; k < p; ++k) d[k] = std::max(std::abs(theta0[k]), fd_abs_floor);

  Vector theta = theta0;
  Vector r = weighted_residuals(exp, data, theta);
  double f = half_sum_squares(r);
  double mu = opt.initial_damping;
  EstimationResult res;

  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    res.iterations = it;
    const Matrix j = detail::scaled_residual_jacobian(exp, data, theta, d, opt.rel_step);
    Matrix jtj(p, p);
    Vector g(p, 0.0);
    for (std::size_t row = 0; row < j.rows(); ++row)
      for (std::size_t a = 0; a < p; ++a) {
        g[a] += j(row, a) * r[row];
        for (std::size_t b = 0; b < p; ++b) jtj(a, b) += j(row, a) * j(row, b);
      }
    // projected gradient: components pushing into an active bound are dropped
    double gmax = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      const bool at_lo = theta[k] <= bounds[k].first && g[k] > 0.0;
      const bool at_hi = theta[k] >= bounds[k].second && g[k] < 0.0;
      if (!at_lo && !at_hi) gmax = std::max(gmax, std::abs(g[k]));
    }
    if (gmax < opt.tol) {
      res.converged = true;
      break;
    }
    double dmax = 0.0;
    for (std::size_t k = 0; k < p; ++k) dmax = std::max(dmax, jtj(k, k));

    bool accepted = false;
    bool tiny_step = false;
    for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
      Matrix a = jtj;
      for (std::size_t k = 0; k < p; ++k)
        a(k, k) += mu * std::max(jtj(k, k), 1e-12 * std::max(dmax, 1e-300));
      Vector rhs(p);
      for (std::size_t k = 0; k < p; ++k) rhs[k] = -g[k];
      Vector step;
      if (!detail::cholesky_solve(a, rhs, step)) {
        mu *= 10.0;
        continue;
      }
      Vector trial(p);
      double smax = 0.0;
      for (std::size_t k = 0; k < p; ++k) {
        trial[k] = std::clamp(theta[k] + step[k] * d[k], bounds[k].first, bounds[k].second);
        smax = std::max(smax, std::abs(trial[k] - theta[k]) / d[k]);
      }
      if (smax < opt.tol) {
        tiny_step = true;
        break;
      }
      try {
        Vector rt = weighted_residuals(exp, data, trial);
        const double ft = half_sum_squares(rt);
        if (ft < f) {
          theta = std::move(trial);
          r = std::move(rt);
          f = ft;
          mu = std::max(mu / 3.0, 1e-12);
          accepted = true;
        } else {
          mu *= 4.0;
        }
      } catch (const Error&) {
        mu *= 10.0;
      }
    }
    if (tiny_step) {
      res.converged = true;
      break;
    }
    if (!accepted) break;
  }

  res.theta_hat = theta;
  res.wsse = f;
  res.fim = dataset_fim(exp, data, theta, opt.rel_step);
  const Inversion inv = covariance_from_fim(res.fim);
  res.covariance = inv.value;
  res.rank_deficient = inv.rank_deficient;
  return res;
}

struct MultistartEstimate {
  EstimationResult best;
  std::vector<Vector> starts;
  std::vector<std::optional<EstimationResult>> runs;
};

inline bool better_estimate(const EstimationResult& a, const EstimationResult& b) {
  if (a.wsse != b.wsse) return a.wsse < b.wsse;
  return a.theta_hat < b.theta_hat;
}

// First start is theta0 when given; the rest are seeded Latin-hypercube
// points over the bounds. Failed starts are skipped.
inline MultistartEstimate estimate_multistart(const LabeledExperiment& exp, const Dataset& data,
                                              const std::optional<Vector>& theta0,
                                              const Bounds& bounds, std::size_t starts,
                                              std::uint64_t seed,
                                              const EstimationOptions& opt = {}) {
  if (starts == 0) throw Error(ErrorKind::InvalidArgument, "estimate: starts must be >= 1");
  MultistartEstimate out;
  const std::size_t n_lhs = theta0 ? starts - 1 : starts;
  if (theta0) out.starts.push_back(*theta0);
  for (auto& pt : latin_hypercube(n_lhs, bounds, seed)) out.starts.push_back(pt);
  out.runs.resize(out.starts.size());
  parallel_for(out.starts.size(), [&](std::size_t k) {
    try {
      out.runs[k] = estimate_parameters(exp, data, out.starts[k], bounds, opt);
    } catch (const Error& e) {
      if (!e.numerical()) throw;
    }
  });
  const EstimationResult* best = nullptr;
  for (const auto& r : out.runs)
    if (r && (!best || better_estimate(*r, *best))) best = &*r;
  if (!best) throw Error(ErrorKind::AllStartsFailed, "estimate: every start failed");
  out.best = *best;
  return out;
}

}  // namespace oedkit
