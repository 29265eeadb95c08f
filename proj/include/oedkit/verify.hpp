#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "criteria.hpp"
#include "experiment.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace oedkit {

// R·Rᵀ + 0.1·I with R uniform on [-1, 1].
inline SymMatrix random_spd(std::size_t p, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Matrix r(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) r(i, j) = rng.uniform(-1.0, 1.0);
  Matrix a = r * r.transpose();
  for (std::size_t i = 0; i < p; ++i) a(i, i) += 0.1;
  return SymMatrix::from_full(a);
}

inline std::uint64_t sample_seed(std::uint64_t base, std::size_t p, std::size_t sample,
                                 std::size_t attempt) {
  SplitMix64 mix(base ^ (0x100000001B3ULL * (p + 1)));
  std::uint64_t s = mix.next();
  s ^= 0x9E3779B97F4A7C15ULL * (sample + 1);
  s ^= 0xC2B2AE3D27D4EB4FULL * (attempt + 1);
  return SplitMix64(s).next();
}

inline constexpr double log10_error_floor = -17.0;

// |a - n| / max(|a|, 1e-8·scale), reported as log10 and clamped at -17.
inline double log10_rel_error(double analytic, double numeric, double scale) {
  const double denom = std::max(std::abs(analytic), 1e-8 * scale);
  const double err = denom > 0.0 ? std::abs(analytic - numeric) / denom
                                 : std::abs(analytic - numeric);
  if (!(err > 0.0)) return log10_error_floor;
  return std::max(std::log10(err), log10_error_floor);
}

// Symmetric pair perturbation: M_ij and M_ji both move by t.
inline SymMatrix perturb_pair(SymMatrix m, std::size_t i, std::size_t j, double t) {
  m.add(i, j, t);
  return m;
}

inline double pair_multiplicity(std::size_t i, std::size_t j) { return i == j ? 1.0 : 2.0; }

using ValueFn = std::function<double(const SymMatrix&)>;
using GradientFn = std::function<Matrix(const SymMatrix&)>;

// Per-element log10 relative errors of the analytic gradient against finite
// differences of the value.
inline Vector first_derivative_errors(const SymMatrix& m, const Matrix& analytic,
                                      const ValueFn& value, double h, FdScheme scheme) {
  const std::size_t p = m.dim();
  const double scale = analytic.max_abs();
  const double f0 = scheme == FdScheme::Forward ? value(m) : 0.0;
  Vector out;
  out.reserve(p * p);
  Matrix numeric(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) {
      const double total = pair_multiplicity(i, j) * h;
      double d;
      if (scheme == FdScheme::Forward) {
        d = (value(perturb_pair(m, i, j, h)) - f0) / total;
      } else {
        d = (value(perturb_pair(m, i, j, h)) - value(perturb_pair(m, i, j, -h))) / (2.0 * total);
      }
      numeric(i, j) = d;
      numeric(j, i) = d;
    }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j)
      out.push_back(log10_rel_error(analytic(i, j), numeric(i, j), scale));
  return out;
}

// Per-element log10 relative errors of the full-space Hessian against central
// differences of the gradient. Symmetric pair perturbation measures
// (H_ijkl + H_ijlk)/2, which is what the analytic side is reduced to.
inline Vector second_derivative_errors(const SymMatrix& m, const Matrix& analytic_hessian,
                                       const GradientFn& gradient, double h) {
  const std::size_t p = m.dim();
  const double scale = analytic_hessian.max_abs();
  Vector out(p * p * p * p);
  for (std::size_t k = 0; k < p; ++k)
    for (std::size_t l = k; l < p; ++l) {
      const Matrix gp = gradient(perturb_pair(m, k, l, h));
      const Matrix gm = gradient(perturb_pair(m, k, l, -h));
      const double total = 2.0 * h * pair_multiplicity(k, l);
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
          const double num = (gp(i, j) - gm(i, j)) / total;
          const double ana =
              0.5 * (analytic_hessian(i * p + j, k * p + l) + analytic_hessian(i * p + j, l * p + k));
          const double e = log10_rel_error(ana, num, scale);
          out[((i * p + j) * p + k) * p + l] = e;
          out[((i * p + j) * p + l) * p + k] = e;
        }
    }
  return out;
}

struct VerificationRow {
  Criterion criterion;
  std::size_t p = 0;
  int order = 1;
  std::string space = "full";
  FdScheme scheme = FdScheme::Forward;
  double step = 0.0;
  std::size_t samples = 0;
  std::size_t redrawn = 0;
  double mean_log10 = 0.0;
  double stderr_log10 = 0.0;
  double max_log10 = 0.0;
  Vector element_max_log10;  // per element, worst over samples
};

struct VerificationReport {
  std::vector<VerificationRow> rows;
};

namespace detail {

inline void summarize(VerificationRow& row, const std::vector<Vector>& per_sample) {
  double sum = 0.0, sq = 0.0;
  std::size_t n = 0;
  row.max_log10 = log10_error_floor;
  row.element_max_log10.assign(per_sample.empty() ? 0 : per_sample.front().size(),
                               log10_error_floor);
  for (const Vector& s : per_sample)
    for (std::size_t e = 0; e < s.size(); ++e) {
      sum += s[e];
      sq += s[e] * s[e];
      ++n;
      row.max_log10 = std::max(row.max_log10, s[e]);
      row.element_max_log10[e] = std::max(row.element_max_log10[e], s[e]);
    }
  row.mean_log10 = sum / static_cast<double>(n);
  const double var = n > 1 ? (sq - sum * sum / static_cast<double>(n)) / static_cast<double>(n - 1)
                           : 0.0;
  row.stderr_log10 = std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
}

// Draws sample matrices, redrawing when the extreme eigenvalues are not
// simple; body(m) returns that sample's per-element errors.
template <class Body>
VerificationRow run_samples(Criterion c, std::size_t p, std::size_t samples, std::uint64_t seed,
                            Body body) {
  if (samples == 0) throw Error(ErrorKind::InvalidArgument, "verify: samples must be > 0");
  std::vector<Vector> per(samples);
  std::vector<std::size_t> redraws(samples, 0);
  parallel_for(samples, [&](std::size_t s) {
    for (std::size_t attempt = 0;; ++attempt) {
      const SymMatrix m = random_spd(p, sample_seed(seed, p, s, attempt));
      try {
        per[s] = body(m);
        redraws[s] = attempt;
        return;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::RepeatedExtremeEigenvalue || attempt > 100) throw;
      }
    }
  });
  VerificationRow row;
  row.criterion = c;
  row.p = p;
  row.samples = samples;
  for (std::size_t r : redraws) row.redrawn += r;
  summarize(row, per);
  return row;
}

}  // namespace detail

inline VerificationReport check_first_derivatives(const std::vector<Criterion>& criteria,
                                                  const std::vector<std::size_t>& sizes,
                                                  std::size_t samples = 100, double h = 1e-4,
                                                  FdScheme scheme = FdScheme::Forward,
                                                  std::uint64_t seed = 2024) {
  VerificationReport rep;
  for (Criterion c : criteria)
    for (std::size_t p : sizes) {
      VerificationRow row = detail::run_samples(c, p, samples, seed, [&](const SymMatrix& m) {
        const ValueFn value = [c](const SymMatrix& x) { return eval_criterion(x, c); };
        return first_derivative_errors(m, grad_criterion(m, c), value, h, scheme);
      });
      row.order = 1;
      row.scheme = scheme;
      row.step = h;
      rep.rows.push_back(std::move(row));
    }
  return rep;
}

inline VerificationReport check_second_derivatives(const std::vector<Criterion>& criteria,
                                                   std::size_t p = 2, std::size_t samples = 10,
                                                   double h = 1e-6, std::uint64_t seed = 2024) {
  VerificationReport rep;
  for (Criterion c : criteria) {
    VerificationRow row = detail::run_samples(c, p, samples, seed, [&](const SymMatrix& m) {
      const GradientFn grad = [c](const SymMatrix& x) { return grad_criterion(x, c); };
      return second_derivative_errors(m, hess_criterion(m, c), grad, h);
    });
    row.order = 2;
    row.scheme = FdScheme::Central;
    row.step = h;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

// Tri-space: J* against central differences of Ψ over upper-triangular
// entries, H* against central differences of J*. The H* step defaults to
// ~ε^(1/3); at 1e-6 roundoff swamps the smallest Hessian entries for p = 4.
inline Vector greybox_gradient_errors(const SymMatrix& m, Criterion c, double h) {
  const std::size_t n = tri_size(m.dim());
  const GreyBoxEval gb = greybox_evaluate(m, c);
  double scale = 0.0;
  for (double g : gb.gradient) scale = std::max(scale, std::abs(g));
  Vector out(n);
  for (std::size_t t = 0; t < n; ++t) {
    SymMatrix up = m, dn = m;
    up.entries()[t] += h;
    dn.entries()[t] -= h;
    const double num = (eval_criterion(up, c) - eval_criterion(dn, c)) / (2.0 * h);
    out[t] = log10_rel_error(gb.gradient[t], num, scale);
  }
  return out;
}

inline Vector greybox_hessian_errors(const SymMatrix& m, Criterion c, double h) {
  const std::size_t n = tri_size(m.dim());
  const GreyBoxEval gb = greybox_evaluate(m, c);
  const double scale = gb.hessian.max_abs();
  Vector out(n * n);
  for (std::size_t u = 0; u < n; ++u) {
    SymMatrix up = m, dn = m;
    up.entries()[u] += h;
    dn.entries()[u] -= h;
    const Vector jp = contract_gradient(grad_criterion(up, c));
    const Vector jm = contract_gradient(grad_criterion(dn, c));
    for (std::size_t t = 0; t < n; ++t)
      out[t * n + u] = log10_rel_error(gb.hessian(t, u), (jp[t] - jm[t]) / (2.0 * h), scale);
  }
  return out;
}

inline VerificationReport check_greybox(const std::vector<Criterion>& criteria,
                                        const std::vector<std::size_t>& sizes,
                                        std::size_t samples = 20, double h1 = 1e-4,
                                        double h2 = 1e-5, std::uint64_t seed = 2024) {
  VerificationReport rep;
  for (Criterion c : criteria)
    for (std::size_t p : sizes) {
      VerificationRow r1 = detail::run_samples(
          c, p, samples, seed, [&](const SymMatrix& m) { return greybox_gradient_errors(m, c, h1); });
      r1.order = 1;
      r1.space = "tri";
      r1.scheme = FdScheme::Central;
      r1.step = h1;
      rep.rows.push_back(std::move(r1));
      VerificationRow r2 = detail::run_samples(
          c, p, samples, seed, [&](const SymMatrix& m) { return greybox_hessian_errors(m, c, h2); });
      r2.order = 2;
      r2.space = "tri";
      r2.scheme = FdScheme::Central;
      r2.step = h2;
      rep.rows.push_back(std::move(r2));
    }
  return rep;
}

}  // namespace oedkit
