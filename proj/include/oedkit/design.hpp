#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "criteria.hpp"
#include "estimate.hpp"
#include "experiment.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace oedkit {

inline constexpr double singular_penalty = 1e12;

struct DesignProblem {
  LabeledExperiment experiment;
  Criterion criterion = Criterion::D;
  PriorInformation prior;
  Vector theta;
  Bounds bounds;  // empty: experiment.input_bounds
  // sensitivities and prior in θ_j/θ̂_j coordinates
  bool scale_parameters = false;
  FdScheme scheme = FdScheme::Central;
  double rel_step = 1e-3;
  // multiplier on the A objective; 0 selects λ_max of the prior FIM
  double a_scale = 0.0;
  std::size_t starts = 8;
  std::uint64_t seed = 1;
  double simplex_tol = 1e-6;
  std::size_t max_evaluations = 0;  // 0: 1000 + 400·N_d per start
  std::function<double(const Vector&)> penalty;

  const Bounds& design_bounds() const {
    return bounds.empty() ? experiment.input_bounds : bounds;
  }
};

struct ObjectiveValue {
  double value = 0.0;  // internal minimize sense, penalties included
  SymMatrix fim;
  bool penalized = false;
  std::string warning;
};

struct AuditEntry {
  Criterion criterion;
  double value;     // paper convention, NaN when undefined
  double log10_value;
};

struct StartLog {
  Vector phi0;
  Vector phi_star;
  double value = 0.0;
  std::size_t evaluations = 0;
  bool failed = false;
};

struct DesignResult {
  Vector phi_hat;
  double criterion_value = 0.0;
  double objective_value = 0.0;
  SymMatrix fim_at_opt;
  std::vector<AuditEntry> audit;
  std::vector<StartLog> starts;
  std::size_t penalized_evaluations = 0;
};

inline double effective_a_scale(const DesignProblem& pb) {
  if (pb.a_scale > 0.0) return pb.a_scale;
  const double lmax = max_abs_eigenvalue(sym_eigen(pb.prior.fim_prior));
  return lmax > 0.0 ? lmax : 1.0;
}

inline void validate_problem(const DesignProblem& pb) {
  pb.experiment.validate();
  const std::size_t p = pb.experiment.num_parameters();
  if (pb.theta.size() != p)
    throw Error(ErrorKind::DimensionMismatch, "design: theta has " +
                                                  std::to_string(pb.theta.size()) +
                                                  " entries, model has " + std::to_string(p));
  if (pb.prior.fim_prior.dim() != p)
    throw Error(ErrorKind::DimensionMismatch, "design: prior dimension");
  const Bounds& b = pb.design_bounds();
  if (b.size() != pb.experiment.num_inputs())
    throw Error(ErrorKind::DimensionMismatch, "design: bounds count");
  for (const auto& [lo, hi] : b)
    if (!(lo < hi)) throw Error(ErrorKind::InvalidArgument, "design: bound with lo >= hi");
}

// FIM of the candidate experiment plus prior.
inline SymMatrix design_fim(const DesignProblem& pb, const Vector& phi) {
  SensitivityMatrix q = sensitivity_matrix(pb.experiment, phi, pb.theta, pb.scheme, pb.rel_step);
  if (pb.scale_parameters) q = scale_by_nominal(std::move(q), pb.theta);
  return assemble_fim(q, MeasurementCovariance{pb.experiment.output_sigmas}, pb.prior);
}

inline ObjectiveValue objective_from_fim(const DesignProblem& pb, SymMatrix fim,
                                         double a_scale) {
  ObjectiveValue out;
  out.fim = std::move(fim);
  try {
    const double v = eval_criterion(out.fim, pb.criterion);
    out.value = internal_sign(pb.criterion) * v * (pb.criterion == Criterion::A ? a_scale : 1.0);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SingularFIM && e.kind() != ErrorKind::NonPositiveDeterminant)
      throw;
    out.value = singular_penalty;
    out.penalized = true;
    out.warning = e.what();
  }
  return out;
}

inline ObjectiveValue design_objective(const DesignProblem& pb, const Vector& phi) {
  const Bounds& b = pb.design_bounds();
  if (phi.size() != b.size()) throw Error(ErrorKind::DimensionMismatch, "design: phi length");
  for (std::size_t k = 0; k < phi.size(); ++k)
    if (phi[k] < b[k].first || phi[k] > b[k].second)
      throw Error(ErrorKind::InvalidArgument, "design: phi outside bounds");
  ObjectiveValue out = objective_from_fim(pb, design_fim(pb, phi), effective_a_scale(pb));
  if (pb.penalty && !out.penalized) out.value += pb.penalty(phi);
  return out;
}

inline double log10_of(Criterion c, double v) {
  if (!std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();
  switch (c) {
    case Criterion::D:
    case Criterion::ME: return v / std::numbers::ln10;
    default: return v > 0.0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN();
  }
}

// All five criteria in the paper's convention; log10 column as reported in
// cross-evaluation tables (D: log10 det M, ME: log10 κ).
inline std::vector<AuditEntry> audit_fim(const SymMatrix& m) {
  const EigenDecomposition ed = sym_eigen(m);
  std::vector<AuditEntry> out;
  for (Criterion c : all_criteria) {
    double v = std::numeric_limits<double>::quiet_NaN();
    try {
      v = eval_criterion(ed, c);
    } catch (const Error&) {
    }
    out.push_back({c, v, log10_of(c, v)});
  }
  return out;
}

namespace detail {

struct LocalResult {
  Vector x;
  double f = 0.0;
  std::size_t evaluations = 0;
};

// Nelder-Mead on the unit box with clamped vertices; stops when every vertex
// lies within tol (∞-norm) of the best one.
template <class F>
LocalResult nelder_mead_unit(F f, Vector x0, double tol, std::size_t max_evals) {
  const std::size_t n = x0.size();
  auto clamp01 = [](Vector x) {
    for (double& v : x) v = std::clamp(v, 0.0, 1.0);
    return x;
  };
  std::size_t evals = 0;
  auto eval = [&](const Vector& x) {
    ++evals;
    return f(x);
  };
  std::vector<Vector> s(n + 1, clamp01(x0));
  std::vector<double> fs(n + 1);
  for (std::size_t k = 0; k < n; ++k) {
    double& v = s[k + 1][k];
    v = v + 0.1 <= 1.0 ? v + 0.1 : v - 0.1;
  }
  for (std::size_t k = 0; k <= n; ++k) fs[k] = eval(s[k]);

  std::vector<std::size_t> idx(n + 1);
  while (true) {
    for (std::size_t k = 0; k <= n; ++k) idx[k] = k;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return fs[a] < fs[b] || (fs[a] == fs[b] && s[a] < s[b]);
    });
    {
      std::vector<Vector> s2;
      std::vector<double> f2;
      for (std::size_t k : idx) {
        s2.push_back(s[k]);
        f2.push_back(fs[k]);
      }
      s = std::move(s2);
      fs = std::move(f2);
    }
    double size = 0.0;
    for (std::size_t k = 1; k <= n; ++k)
      for (std::size_t j = 0; j < n; ++j) size = std::max(size, std::abs(s[k][j] - s[0][j]));
    if (size <= tol || evals >= max_evals) break;

    Vector c(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) c[j] += s[k][j] / static_cast<double>(n);
    auto along = [&](double t) {
      Vector x(n);
      for (std::size_t j = 0; j < n; ++j) x[j] = c[j] + t * (s[n][j] - c[j]);
      return clamp01(std::move(x));
    };
    const Vector xr = along(-1.0);
    const double fr = eval(xr);
    if (fr < fs[0]) {
      const Vector xe = along(-2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        s[n] = xe;
        fs[n] = fe;
      } else {
        s[n] = xr;
        fs[n] = fr;
      }
    } else if (fr < fs[n - 1]) {
      s[n] = xr;
      fs[n] = fr;
    } else {
      const bool outside = fr < fs[n];
      const Vector xc = along(outside ? -0.5 : 0.5);
      const double fc = eval(xc);
      if (fc < std::min(fr, fs[n])) {
        s[n] = xc;
        fs[n] = fc;
      } else {
        for (std::size_t k = 1; k <= n; ++k) {
          for (std::size_t j = 0; j < n; ++j) s[k][j] = s[0][j] + 0.5 * (s[k][j] - s[0][j]);
          fs[k] = eval(s[k]);
        }
      }
    }
  }
  return {s[0], fs[0], evals};
}

template <class F>
LocalResult golden_section(F f, double a, double b, double tol) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  std::size_t evals = 2;
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
    ++evals;
  }
  return fc <= fd ? LocalResult{{c}, fc, evals} : LocalResult{{d}, fd, evals};
}

inline Vector to_design(const Vector& u, const Bounds& b) {
  Vector phi(u.size());
  for (std::size_t k = 0; k < u.size(); ++k)
    phi[k] = std::clamp(b[k].first + u[k] * (b[k].second - b[k].first), b[k].first, b[k].second);
  return phi;
}

inline Vector to_unit(const Vector& phi, const Bounds& b) {
  Vector u(phi.size());
  for (std::size_t k = 0; k < phi.size(); ++k)
    u[k] = (phi[k] - b[k].first) / (b[k].second - b[k].first);
  return u;
}

}  // namespace detail

inline DesignResult optimize_design(const DesignProblem& pb) {
  validate_problem(pb);
  if (pb.starts == 0) throw Error(ErrorKind::InvalidArgument, "design: starts must be >= 1");
  const Bounds& b = pb.design_bounds();
  const std::size_t nd = b.size();
  const double a_scale = effective_a_scale(pb);
  const std::size_t max_evals = pb.max_evaluations ? pb.max_evaluations : 1000 + 400 * nd;

  auto objective = [&](const Vector& phi) {
    ObjectiveValue o = objective_from_fim(pb, design_fim(pb, phi), a_scale);
    if (pb.penalty && !o.penalized) o.value += pb.penalty(phi);
    return o;
  };

  Bounds unit(nd, {0.0, 1.0});
  const auto x0s = latin_hypercube(pb.starts, unit, pb.seed);
  std::vector<StartLog> logs(pb.starts);
  std::vector<std::size_t> penalized(pb.starts, 0);
  parallel_for(pb.starts, [&](std::size_t k) {
    StartLog& lg = logs[k];
    lg.phi0 = detail::to_design(x0s[k], b);
    try {
      auto f = [&](const Vector& u) {
        const ObjectiveValue o = objective(detail::to_design(u, b));
        if (o.penalized) ++penalized[k];
        return o.value;
      };
      const detail::LocalResult r = detail::nelder_mead_unit(f, x0s[k], pb.simplex_tol, max_evals);
      lg.phi_star = detail::to_design(r.x, b);
      lg.value = r.f;
      lg.evaluations = r.evaluations;
    } catch (const Error& e) {
      if (!e.numerical()) throw;
      lg.failed = true;
    }
  });

  const StartLog* best = nullptr;
  for (const StartLog& lg : logs) {
    if (lg.failed) continue;
    if (!best || lg.value < best->value ||
        (lg.value == best->value && lg.phi_star < best->phi_star))
      best = &lg;
  }
  if (!best) throw Error(ErrorKind::AllStartsFailed, "design: every start failed");

  Vector phi_hat = best->phi_star;
  double f_hat = best->value;
  std::size_t extra_penalized = 0;
  if (nd == 1) {
    const double width = b[0].second - b[0].first;
    const double h = 0.01 * width;
    const double lo = std::max(b[0].first, phi_hat[0] - h);
    const double hi = std::min(b[0].second, phi_hat[0] + h);
    auto f1 = [&](double t) {
      const ObjectiveValue o = objective({t});
      if (o.penalized) ++extra_penalized;
      return o.value;
    };
    const detail::LocalResult g = detail::golden_section(f1, lo, hi, 1e-10 * width);
    for (double cand : {g.x[0], lo, hi}) {
      const double fv = f1(cand);
      if (fv < f_hat) {
        f_hat = fv;
        phi_hat = {cand};
      }
    }
  }

  DesignResult out;
  out.phi_hat = phi_hat;
  out.objective_value = f_hat;
  out.fim_at_opt = design_fim(pb, phi_hat);
  out.audit = audit_fim(out.fim_at_opt);
  out.criterion_value = std::numeric_limits<double>::quiet_NaN();
  for (const AuditEntry& a : out.audit)
    if (a.criterion == pb.criterion) out.criterion_value = a.value;
  out.starts = std::move(logs);
  for (std::size_t n : penalized) out.penalized_evaluations += n;
  out.penalized_evaluations += extra_penalized;
  return out;
}

struct ScanRow {
  double phi;
  std::vector<double> values;  // per requested criterion, NaN on failure
  double lambda_min;
  double lambda_max;
  double trace;
};

inline std::vector<ScanRow> scan_design_1d(const DesignProblem& pb,
                                           const std::vector<Criterion>& criteria,
                                           const Vector& grid) {
  if (pb.experiment.num_inputs() != 1)
    throw Error(ErrorKind::InvalidArgument,
                "scan: the model has " + std::to_string(pb.experiment.num_inputs()) +
                    " design inputs; 1-D scans need exactly one");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<ScanRow> rows(grid.size());
  parallel_for(grid.size(), [&](std::size_t k) {
    ScanRow& row = rows[k];
    row = {grid[k], Vector(criteria.size(), nan), nan, nan, nan};
    try {
      const SymMatrix m = design_fim(pb, {grid[k]});
      const EigenDecomposition ed = sym_eigen(m);
      row.lambda_min = ed.eigenvalues.front();
      row.lambda_max = ed.eigenvalues.back();
      row.trace = 0.0;
      for (std::size_t i = 0; i < m.dim(); ++i) row.trace += m(i, i);
      for (std::size_t c = 0; c < criteria.size(); ++c) {
        try {
          row.values[c] = eval_criterion(ed, criteria[c]);
        } catch (const Error&) {
        }
      }
    } catch (const Error& e) {
      if (!e.numerical()) throw;
    }
  });
  return rows;
}

// Grid point optimizing criterion column c (first on ties).
inline std::size_t scan_argopt(const std::vector<ScanRow>& rows, std::size_t column,
                               Criterion c) {
  const double sign = internal_sign(c);
  std::size_t best = rows.size();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double v = rows[k].values[column];
    if (std::isnan(v)) continue;
    if (best == rows.size() || sign * v < sign * rows[best].values[column]) best = k;
  }
  if (best == rows.size()) throw Error(ErrorKind::AllStartsFailed, "scan: no finite values");
  return best;
}

inline Vector make_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo))
    throw Error(ErrorKind::InvalidArgument, "grid: need lo <= hi and step > 0");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  Vector g(n);
  for (std::size_t k = 0; k < n; ++k) g[k] = lo + static_cast<double>(k) * step;
  return g;
}

struct EigenReport {
  std::vector<std::string> labels;
  Vector eigenvalues;  // descending
  Matrix eigenvectors; // column s pairs with eigenvalues[s]
  std::vector<std::vector<std::size_t>> dominant;  // per vector, components with |v| >= 0.5
};

inline EigenReport eigenanalysis(const SymMatrix& v, const std::vector<std::string>& labels) {
  if (labels.size() != v.dim()) throw Error(ErrorKind::DimensionMismatch, "eigenanalysis labels");
  const EigenDecomposition ed = sym_eigen(v);
  const std::size_t p = v.dim();
  EigenReport r;
  r.labels = labels;
  r.eigenvectors = Matrix(p, p);
  r.dominant.resize(p);
  for (std::size_t s = 0; s < p; ++s) {
    const std::size_t src = p - 1 - s;
    r.eigenvalues.push_back(ed.eigenvalues[src]);
    for (std::size_t k = 0; k < p; ++k) {
      r.eigenvectors(k, s) = ed.vec(k, src);
      if (std::abs(ed.vec(k, src)) >= 0.5) r.dominant[s].push_back(k);
    }
  }
  return r;
}

struct Ellipse {
  std::size_t i = 0, j = 0;
  double level = 0.95;
  double center_i = 0.0, center_j = 0.0;
  double semi_major = 0.0, semi_minor = 0.0;
  double angle = 0.0;  // radians, major axis from the i axis
};

inline double chi2_2dof_quantile(double level) { return -2.0 * std::log(1.0 - level); }

inline Ellipse confidence_ellipse(const SymMatrix& v, std::size_t i, std::size_t j,
                                  double level = 0.95) {
  if (!(level > 0.0 && level < 1.0))
    throw Error(ErrorKind::InvalidArgument, "ellipse: level must be in (0,1)");
  if (i == j || i >= v.dim() || j >= v.dim())
    throw Error(ErrorKind::IndexOutOfRange, "ellipse: need distinct indices in range");
  const SymMatrix sub(2, {v(i, i), v(i, j), v(j, j)});
  const EigenDecomposition ed = sym_eigen(sub);
  if (!(ed.eigenvalues[0] > 0.0))
    throw Error(ErrorKind::NonPositiveSubmatrix, "ellipse: 2x2 submatrix is not positive definite");
  const double q = chi2_2dof_quantile(level);
  Ellipse e;
  e.i = i;
  e.j = j;
  e.level = level;
  e.semi_major = std::sqrt(ed.eigenvalues[1] * q);
  e.semi_minor = std::sqrt(ed.eigenvalues[0] * q);
  e.angle = std::atan2(ed.vec(1, 1), ed.vec(0, 1));
  return e;
}

// dΨ/dφ by the chain rule J*·dM/dφ, with dM/dφ from central differences
// (internal minimize sense, no penalties).
inline Vector design_gradient(const DesignProblem& pb, const Vector& phi, double rel_h = 1e-5) {
  const Bounds& b = pb.design_bounds();
  const std::size_t p = pb.theta.size();
  const GreyBoxEval gb = greybox_evaluate(design_fim(pb, phi), pb.criterion);
  const double scale =
      internal_sign(pb.criterion) * (pb.criterion == Criterion::A ? effective_a_scale(pb) : 1.0);
  Vector g(phi.size());
  for (std::size_t k = 0; k < phi.size(); ++k) {
    const double h = rel_h * (b[k].second - b[k].first);
    Vector up = phi, dn = phi;
    up[k] = std::min(phi[k] + h, b[k].second);
    dn[k] = std::max(phi[k] - h, b[k].first);
    const SymMatrix mu = design_fim(pb, up), md = design_fim(pb, dn);
    double s = 0.0;
    for (std::size_t t = 0; t < tri_size(p); ++t)
      s += gb.gradient[t] * (mu.entries()[t] - md.entries()[t]) / (up[k] - dn[k]);
    g[k] = scale * s;
  }
  return g;
}

// Rows: designs optimized for each criterion; columns: log10 audit values.
struct CrossEvaluation {
  std::vector<Criterion> designs;
  std::vector<DesignResult> results;
};

inline CrossEvaluation cross_evaluate(DesignProblem pb, const std::vector<Criterion>& designs) {
  CrossEvaluation out;
  for (Criterion c : designs) {
    pb.criterion = c;
    out.designs.push_back(c);
    out.results.push_back(optimize_design(pb));
  }
  return out;
}

}  // namespace oedkit
