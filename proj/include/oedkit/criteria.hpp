#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "symlin.hpp"

namespace oedkit {

enum class Criterion { A, D, E, ME, PseudoA };

inline constexpr std::array<Criterion, 5> all_criteria{Criterion::A, Criterion::D, Criterion::E,
                                                       Criterion::ME, Criterion::PseudoA};

inline const char* to_string(Criterion c) {
  switch (c) {
    case Criterion::A: return "A";
    case Criterion::D: return "D";
    case Criterion::E: return "E";
    case Criterion::ME: return "ME";
    case Criterion::PseudoA: return "pseudoA";
  }
  return "?";
}

inline Criterion parse_criterion(const std::string& s) {
  for (Criterion c : all_criteria)
    if (s == to_string(c)) return c;
  if (s == "PseudoA" || s == "pseudo-A") return Criterion::PseudoA;
  throw Error(ErrorKind::InvalidArgument, "unknown criterion '" + s + "' (A, D, E, ME, pseudoA)");
}

// +1 when the paper's criterion is minimized, -1 when maximized.
inline double internal_sign(Criterion c) {
  return (c == Criterion::A || c == Criterion::ME) ? 1.0 : -1.0;
}

inline constexpr double seprtol_factor = 1e-9;

struct GreyBoxEval {
  double value = 0.0;
  std::vector<double> gradient;  // length p(p+1)/2
  Matrix hessian;                // p(p+1)/2 square
};

namespace detail {

inline double rank_tol(const EigenDecomposition& ed) {
  return default_rtol(ed.dim()) * max_abs_eigenvalue(ed);
}

inline void require_full_rank(const EigenDecomposition& ed, Criterion c) {
  const double lmin = ed.eigenvalues.front();
  if (!(lmin > rank_tol(ed)))
    throw Error(ErrorKind::SingularFIM, std::string(to_string(c)) +
                                            ": minimum eigenvalue " + std::to_string(lmin) +
                                            " at or below rank tolerance");
}

inline void require_simple(const EigenDecomposition& ed, std::size_t s, std::size_t neighbour,
                           const char* which) {
  const double l = ed.eigenvalues[s];
  const double sep = std::abs(l - ed.eigenvalues[neighbour]);
  if (sep <= seprtol_factor * std::max(1.0, std::abs(l)))
    throw Error(ErrorKind::RepeatedExtremeEigenvalue,
                std::string(which) + " eigenvalue " + std::to_string(l) + " is not simple");
}

inline void check_extremes(const EigenDecomposition& ed, Criterion c) {
  const std::size_t p = ed.dim();
  if (p < 2) return;
  if (c == Criterion::E || c == Criterion::ME) require_simple(ed, 0, 1, "minimum");
  if (c == Criterion::ME) require_simple(ed, p - 1, p - 2, "maximum");
}

inline void check_preconditions(const EigenDecomposition& ed, Criterion c) {
  if (c == Criterion::D && signed_log_det(ed).sign <= 0)
    throw Error(ErrorKind::NonPositiveDeterminant, "D: determinant is not positive");
  if (c == Criterion::A || c == Criterion::D || c == Criterion::ME) require_full_rank(ed, c);
}

inline Matrix inverse_full(const EigenDecomposition& ed, int power) {
  return spectral_map(
             ed, [power](double l) { return std::pow(l, -power); },
             [](double l) { return l != 0.0; })
      .full();
}

inline Matrix outer(const EigenDecomposition& ed, std::size_t s) {
  const std::size_t p = ed.dim();
  Matrix g(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) g(i, j) = ed.vec(i, s) * ed.vec(j, s);
  return g;
}

// d²λ_s / dM_ij dM_kl for a simple eigenvalue s.
inline Matrix eigenvalue_hessian(const EigenDecomposition& ed, std::size_t s) {
  const std::size_t p = ed.dim();
  Matrix h(p * p, p * p);
  for (std::size_t r = 0; r < p; ++r) {
    if (r == s) continue;
    const double w = 1.0 / (ed.eigenvalues[s] - ed.eigenvalues[r]);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) {
        const double sr = ed.vec(i, s) * ed.vec(j, r);
        const double rs = ed.vec(i, r) * ed.vec(j, s);
        for (std::size_t k = 0; k < p; ++k)
          for (std::size_t l = 0; l < p; ++l)
            h(i * p + j, k * p + l) +=
                w * (sr * ed.vec(k, r) * ed.vec(l, s) + rs * ed.vec(k, s) * ed.vec(l, r));
      }
  }
  return h;
}

inline double value_from(const EigenDecomposition& ed, Criterion c) {
  const auto& lam = ed.eigenvalues;
  switch (c) {
    case Criterion::A: {
      double s = 0.0;
      for (double l : lam) s += 1.0 / l;
      return s;
    }
    case Criterion::D: {
      const SignedLogDet sld = signed_log_det(ed);
      if (sld.sign <= 0)
        throw Error(ErrorKind::NonPositiveDeterminant, "D: determinant is not positive");
      return sld.logabsdet;
    }
    case Criterion::E: return lam.front();
    case Criterion::ME: return std::log(lam.back() / lam.front());
    case Criterion::PseudoA: {
      double s = 0.0;
      for (double l : lam) s += l;
      return s;
    }
  }
  return 0.0;
}

inline Matrix gradient_from(const EigenDecomposition& ed, Criterion c) {
  const std::size_t p = ed.dim();
  switch (c) {
    case Criterion::A: {
      Matrix g = inverse_full(ed, 2);
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) g(i, j) = -g(i, j);
      return g;
    }
    case Criterion::D: return inverse_full(ed, 1);
    case Criterion::E: return outer(ed, 0);
    case Criterion::ME: {
      const double lmin = ed.eigenvalues.front();
      const double lmax = ed.eigenvalues.back();
      Matrix g(p, p);
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j)
          g(i, j) = ed.vec(i, p - 1) * ed.vec(j, p - 1) / lmax - ed.vec(i, 0) * ed.vec(j, 0) / lmin;
      return g;
    }
    case Criterion::PseudoA: return Matrix::identity(p);
  }
  return Matrix();
}

inline Matrix hessian_from(const EigenDecomposition& ed, Criterion c) {
  const std::size_t p = ed.dim();
  Matrix h(p * p, p * p);
  switch (c) {
    case Criterion::A: {
      const Matrix m1 = inverse_full(ed, 1);
      const Matrix m2 = inverse_full(ed, 2);
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j)
          for (std::size_t k = 0; k < p; ++k)
            for (std::size_t l = 0; l < p; ++l)
              h(i * p + j, k * p + l) = m1(i, l) * m2(k, j) + m2(i, l) * m1(k, j);
      return h;
    }
    case Criterion::D: {
      const Matrix m1 = inverse_full(ed, 1);
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j)
          for (std::size_t k = 0; k < p; ++k)
            for (std::size_t l = 0; l < p; ++l) h(i * p + j, k * p + l) = -m1(i, l) * m1(k, j);
      return h;
    }
    case Criterion::E: return eigenvalue_hessian(ed, 0);
    case Criterion::ME: {
      const double lmin = ed.eigenvalues.front();
      const double lmax = ed.eigenvalues.back();
      const Matrix hmax = eigenvalue_hessian(ed, p - 1);
      const Matrix hmin = eigenvalue_hessian(ed, 0);
      const Matrix gmax = outer(ed, p - 1);
      const Matrix gmin = outer(ed, 0);
      for (std::size_t a = 0; a < p * p; ++a)
        for (std::size_t b = 0; b < p * p; ++b) {
          const double gxa = gmax(a / p, a % p), gxb = gmax(b / p, b % p);
          const double gna = gmin(a / p, a % p), gnb = gmin(b / p, b % p);
          h(a, b) = hmax(a, b) / lmax - gxa * gxb / (lmax * lmax) + gna * gnb / (lmin * lmin) -
                    hmin(a, b) / lmin;
        }
      return h;
    }
    case Criterion::PseudoA: return h;
  }
  return h;
}

}  // namespace detail

// Value in the paper's convention (A: trace M⁻¹, D: ln det M, E: λ_min,
// ME: ln κ, PseudoA: trace M).
inline double eval_criterion(const EigenDecomposition& ed, Criterion c) {
  detail::check_preconditions(ed, c);
  return detail::value_from(ed, c);
}

// PseudoA reads the diagonal directly, so finite differences of it are exact.
inline double eval_criterion(const SymMatrix& m, Criterion c) {
  if (c == Criterion::PseudoA) {
    if (!m.all_finite()) throw Error(ErrorKind::NonFinite, "pseudoA: non-finite matrix entry");
    double t = 0.0;
    for (std::size_t i = 0; i < m.dim(); ++i) t += m(i, i);
    return t;
  }
  return eval_criterion(sym_eigen(m), c);
}

inline Matrix grad_criterion(const EigenDecomposition& ed, Criterion c) {
  detail::check_preconditions(ed, c);
  detail::check_extremes(ed, c);
  return detail::gradient_from(ed, c);
}

inline Matrix grad_criterion(const SymMatrix& m, Criterion c) {
  return grad_criterion(sym_eigen(m), c);
}

// Element (i,j,k,l) at row i·p+j, column k·p+l.
inline Matrix hess_criterion(const EigenDecomposition& ed, Criterion c) {
  detail::check_preconditions(ed, c);
  detail::check_extremes(ed, c);
  return detail::hessian_from(ed, c);
}

inline Matrix hess_criterion(const SymMatrix& m, Criterion c) {
  return hess_criterion(sym_eigen(m), c);
}

// Contract full-space derivatives onto upper-triangular coordinates.
inline std::vector<double> contract_gradient(const Matrix& g) {
  const std::size_t p = g.rows();
  std::vector<double> out(tri_size(p));
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j)
      out[tri_index(i, j, p)] = i == j ? g(i, i) : g(i, j) + g(j, i);
  return out;
}

inline Matrix contract_hessian(const Matrix& h, std::size_t p) {
  const std::size_t n = tri_size(p);
  Matrix out(n, n);
  auto expand = [p](std::size_t a, std::size_t b) {
    std::vector<std::size_t> idx{a * p + b};
    if (a != b) idx.push_back(b * p + a);
    return idx;
  };
  for (std::size_t t = 0; t < n; ++t) {
    const auto [a, b] = tri_pair(t, p);
    const auto rows = expand(a, b);
    for (std::size_t u = 0; u < n; ++u) {
      const auto [c, d] = tri_pair(u, p);
      double s = 0.0;
      for (std::size_t r : rows)
        for (std::size_t col : expand(c, d)) s += h(r, col);
      out(t, u) = s;
    }
  }
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t u = t + 1; u < n; ++u) {
      const double avg = 0.5 * (out(t, u) + out(u, t));
      out(t, u) = avg;
      out(u, t) = avg;
    }
  return out;
}

inline GreyBoxEval greybox_evaluate(const SymMatrix& m, Criterion c) {
  const EigenDecomposition ed = sym_eigen(m);
  GreyBoxEval out;
  out.value = eval_criterion(ed, c);
  out.gradient = contract_gradient(grad_criterion(ed, c));
  out.hessian = contract_hessian(hess_criterion(ed, c), m.dim());
  return out;
}

}  // namespace oedkit
