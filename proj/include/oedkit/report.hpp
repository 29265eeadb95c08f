#pragma once

#include <string>
#include <vector>

#include "csv.hpp"
#include "design.hpp"
#include "estimate.hpp"
#include "verify.hpp"

namespace oedkit::report {

using csv::fmt;
using csv::Row;
using csv::Writer;

inline Writer outputs(const std::vector<std::string>& names, const Vector& y) {
  Writer w(names);
  Row r;
  for (double v : y) r.push_back(fmt(v));
  w.row(r);
  return w;
}

inline Writer named_values(const std::string& key, const std::vector<std::string>& names,
                           const Vector& values) {
  Writer w({key, "value"});
  for (std::size_t k = 0; k < names.size(); ++k) w.row({names[k], fmt(values[k])});
  return w;
}

inline Writer estimate_summary(const EstimationResult& e) {
  Writer w({"wsse", "converged", "iterations", "rank_deficient"});
  w.row({fmt(e.wsse), e.converged ? "true" : "false", std::to_string(e.iterations),
         e.rank_deficient ? "true" : "false"});
  return w;
}

inline Writer eigen_table(const EigenReport& r) {
  std::vector<std::string> header{"rank", "eigenvalue"};
  for (const auto& l : r.labels) header.push_back(l);
  header.push_back("dominant");
  Writer w(header);
  for (std::size_t s = 0; s < r.eigenvalues.size(); ++s) {
    Row row{std::to_string(s + 1), fmt(r.eigenvalues[s])};
    for (std::size_t k = 0; k < r.labels.size(); ++k) row.push_back(fmt(r.eigenvectors(k, s)));
    std::string dom;
    for (std::size_t k : r.dominant[s]) dom += (dom.empty() ? "" : ";") + r.labels[k];
    row.push_back(dom);
    w.row(row);
  }
  return w;
}

inline Writer ellipses(const SymMatrix& v, const std::vector<std::string>& labels,
                       double level = 0.95) {
  Writer w({"param_i", "param_j", "level", "center_i", "center_j", "semi_major", "semi_minor",
            "angle_rad"});
  for (std::size_t i = 0; i < v.dim(); ++i)
    for (std::size_t j = i + 1; j < v.dim(); ++j) {
      try {
        const Ellipse e = confidence_ellipse(v, i, j, level);
        w.row({labels[i], labels[j], fmt(e.level), fmt(e.center_i), fmt(e.center_j),
               fmt(e.semi_major), fmt(e.semi_minor), fmt(e.angle)});
      } catch (const Error&) {
        w.row({labels[i], labels[j], fmt(level), "nan", "nan", "nan", "nan", "nan"});
      }
    }
  return w;
}

inline Writer audit(const DesignResult& r, Criterion optimized) {
  Writer w({"criterion", "value", "log10_value", "optimized"});
  for (const AuditEntry& a : r.audit)
    w.row({to_string(a.criterion), fmt(a.value), fmt(a.log10_value),
           a.criterion == optimized ? "true" : "false"});
  return w;
}

inline Writer starts(const DesignResult& r, const std::vector<std::string>& inputs) {
  std::vector<std::string> header{"start"};
  for (const auto& n : inputs) header.push_back(n + "_0");
  for (const auto& n : inputs) header.push_back(n + "_opt");
  header.insert(header.end(), {"objective", "evaluations", "failed"});
  Writer w(header);
  for (std::size_t k = 0; k < r.starts.size(); ++k) {
    const StartLog& s = r.starts[k];
    Row row{std::to_string(k + 1)};
    for (double v : s.phi0) row.push_back(fmt(v));
    for (std::size_t j = 0; j < inputs.size(); ++j)
      row.push_back(s.failed ? "nan" : fmt(s.phi_star[j]));
    row.insert(row.end(), {s.failed ? "nan" : fmt(s.value), std::to_string(s.evaluations),
                           s.failed ? "true" : "false"});
    w.row(row);
  }
  return w;
}

inline Writer scan(const std::vector<ScanRow>& rows, const std::vector<Criterion>& criteria) {
  std::vector<std::string> header{"phi"};
  for (Criterion c : criteria) header.push_back(to_string(c));
  header.insert(header.end(), {"lambda_min", "lambda_max", "trace"});
  Writer w(header);
  for (const ScanRow& r : rows) {
    Row row{fmt(r.phi)};
    for (double v : r.values) row.push_back(fmt(v));
    row.insert(row.end(), {fmt(r.lambda_min), fmt(r.lambda_max), fmt(r.trace)});
    w.row(row);
  }
  return w;
}

inline Writer verification(const VerificationReport& rep) {
  Writer w({"criterion", "p", "order", "space", "scheme", "step", "samples", "redrawn",
            "mean_log10", "stderr_log10", "max_log10"});
  for (const VerificationRow& r : rep.rows)
    w.row({to_string(r.criterion), std::to_string(r.p), std::to_string(r.order), r.space,
           r.scheme == FdScheme::Central ? "central" : "forward", fmt(r.step),
           std::to_string(r.samples), std::to_string(r.redrawn), fmt(r.mean_log10),
           fmt(r.stderr_log10), fmt(r.max_log10)});
  return w;
}

// Per-element worst log10 error of second-order rows (p = 2: 16 elements).
inline Writer verification_elements(const VerificationReport& rep) {
  Writer w({"criterion", "p", "space", "element", "max_log10"});
  for (const VerificationRow& r : rep.rows) {
    if (r.order != 2) continue;
    for (std::size_t e = 0; e < r.element_max_log10.size(); ++e)
      w.row({to_string(r.criterion), std::to_string(r.p), r.space, std::to_string(e),
             fmt(r.element_max_log10[e])});
  }
  return w;
}

inline Writer cross_evaluation(const CrossEvaluation& x) {
  std::vector<std::string> header{"design"};
  for (Criterion c : all_criteria) header.push_back(std::string("log10_") + to_string(c));
  Writer w(header);
  for (std::size_t k = 0; k < x.designs.size(); ++k) {
    Row row{to_string(x.designs[k])};
    for (const AuditEntry& a : x.results[k].audit) row.push_back(fmt(a.log10_value));
    w.row(row);
  }
  return w;
}

}  // namespace oedkit::report
