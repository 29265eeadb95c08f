#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "design.hpp"
#include "estimate.hpp"
#include "models.hpp"
#include "report.hpp"
#include "verify.hpp"

namespace oedkit::cli {

namespace fs = std::filesystem;

// Allowed config keys; flags override the matching key.
inline const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys{
      "model", "criterion", "theta", "phi", "out", "data", "seed", "starts",
      "prior.covariance", "prior.fim", "prior.relative",
      "design.lower", "design.upper", "design.starts", "design.seed", "design.rel_step",
      "design.scale_parameters", "design.a_scale", "design.simplex_tol",
      "design.max_evaluations", "design.cap_weight",
      "estimate.data", "estimate.theta0", "estimate.lower", "estimate.upper", "estimate.starts",
      "estimate.seed", "estimate.rel_step",
      "scan.grid",
      "verify.sizes", "verify.samples", "verify.first_step", "verify.first_scheme",
      "verify.second_size", "verify.second_samples", "verify.second_step",
      "verify.greybox_sizes", "verify.greybox_samples", "verify.greybox_step", "verify.seed",
      "tclab.t_amb",
      "membrane.tear_tol", "membrane.elements",
      "report.ellipse_level"};
  return keys;
}

struct Files {
  std::vector<std::pair<std::string, std::string>> files;  // name, content
  std::string summary;

  void add(const std::string& name, const csv::Writer& w) { files.emplace_back(name, w.str()); }
};

class RunContext {
 public:
  RunContext(Config cfg, fs::path base_dir) : cfg_(std::move(cfg)), base_(std::move(base_dir)) {
    const auto unknown = cfg_.unknown_keys(config_keys());
    if (!unknown.empty()) throw Error(ErrorKind::InvalidArgument, "unknown config key '" + unknown.front() + "'");
  }

  const Config& config() const { return cfg_; }

  std::string model_id() const {
    if (!cfg_.has("model")) throw Error(ErrorKind::InvalidArgument, "--model is required");
    return cfg_.get("model");
  }

  fs::path path(const std::string& key) const {
    const fs::path p = cfg_.get(key);
    return p.is_absolute() ? p : base_ / p;
  }

  LabeledExperiment experiment() const {
    const std::string id = model_id();
    if (id == "bod") return bod_experiment();
    if (id == "tclab") {
      TclabSettings s;
      s.t_amb = cfg_.get_double("tclab.t_amb", s.t_amb);
      return tclab_experiment(tclab_table_beta(), s);
    }
    if (id == "membrane") {
      MembraneSettings s;
      s.tear_tol = cfg_.get_double("membrane.tear_tol", s.tear_tol);
      s.elements = static_cast<std::size_t>(cfg_.get_int("membrane.elements", 10));
      return membrane_experiment(membrane_truth(), s);
    }
    if (id == "external-table")
      throw Error(ErrorKind::InvalidArgument,
                  "model 'external-table' is not supported: sensitivities need a simulator, "
                  "not tabulated data");
    throw Error(ErrorKind::InvalidArgument, "unknown model '" + id + "' (bod, tclab, membrane)");
  }

  Vector theta(const LabeledExperiment& exp, bool required) const {
    if (!cfg_.has("theta")) {
      if (required) throw Error(ErrorKind::InvalidArgument, "--theta is required");
      return exp.nominal_parameters;
    }
    Vector t = cfg_.get_list("theta");
    if (t.size() != exp.num_parameters())
      throw Error(ErrorKind::InvalidArgument, "--theta needs " + std::to_string(exp.num_parameters()) +
                                                  " values for model " + exp.name);
    return t;
  }

  Vector phi(const LabeledExperiment& exp) const {
    if (!cfg_.has("phi")) throw Error(ErrorKind::InvalidArgument, "--phi is required");
    Vector p = cfg_.get_list("phi");
    if (p.size() != exp.num_inputs())
      throw Error(ErrorKind::InvalidArgument, "--phi needs " + std::to_string(exp.num_inputs()) +
                                                  " values for model " + exp.name);
    return p;
  }

  Bounds bounds(const std::string& prefix, const Bounds& fallback) const {
    if (!cfg_.has(prefix + ".lower") && !cfg_.has(prefix + ".upper")) return fallback;
    const Vector lo = cfg_.get_list(prefix + ".lower");
    const Vector hi = cfg_.get_list(prefix + ".upper");
    if (lo.size() != fallback.size() || hi.size() != fallback.size())
      throw Error(ErrorKind::InvalidArgument, prefix + ".lower/upper need " +
                                                  std::to_string(fallback.size()) + " values each");
    Bounds b;
    for (std::size_t k = 0; k < lo.size(); ++k) {
      if (!(lo[k] < hi[k])) throw Error(ErrorKind::InvalidArgument, prefix + ": lower >= upper");
      b.emplace_back(lo[k], hi[k]);
    }
    return b;
  }

  bool scale_parameters() const { return cfg_.get_bool("design.scale_parameters", true); }

  // Prior FIM in the design's coordinates. Files are natural unless prior.relative = true.
  PriorInformation prior(const Vector& theta) const {
    const std::size_t p = theta.size();
    const bool cov = cfg_.has("prior.covariance") && !cfg_.get("prior.covariance").empty();
    const bool is_fim = cfg_.has("prior.fim") && !cfg_.get("prior.fim").empty();
    if (cov && is_fim)
      throw Error(ErrorKind::InvalidArgument, "give either --prior-cov or --prior-fim, not both");
    if (!cov && !is_fim) return PriorInformation::none(p);
    const SymMatrix m = csv::read_sym_matrix(path(cov ? "prior.covariance" : "prior.fim").string());
    if (m.dim() != p)
      throw Error(ErrorKind::InvalidArgument, "prior matrix is " + std::to_string(m.dim()) +
                                                  "x" + std::to_string(m.dim()) + ", model has " +
                                                  std::to_string(p) + " parameters");
    const SymMatrix fim = cov ? fim_from_covariance(m).value : m;
    const bool relative = cfg_.get_bool("prior.relative", false);
    if (relative == scale_parameters()) return {fim};
    if (!relative) return {relative_fim(fim, theta)};
    Vector inv(p);
    for (std::size_t k = 0; k < p; ++k) inv[k] = 1.0 / theta[k];
    return {relative_fim(fim, inv)};
  }

  std::uint64_t seed(const std::string& section, std::uint64_t fallback) const {
    const long s = cfg_.get_int(section + ".seed", cfg_.get_int("seed", static_cast<long>(fallback)));
    if (s < 0) throw Error(ErrorKind::InvalidArgument, "seed must be >= 0");
    return static_cast<std::uint64_t>(s);
  }

  std::size_t starts(const std::string& section, std::size_t fallback) const {
    const long s = cfg_.get_int(section + ".starts", cfg_.get_int("starts", static_cast<long>(fallback)));
    if (s < 1) throw Error(ErrorKind::InvalidArgument, "starts must be >= 1");
    return static_cast<std::size_t>(s);
  }

  DesignProblem design_problem(std::optional<Criterion> criterion = std::nullopt) const {
    DesignProblem pb;
    pb.experiment = experiment();
    pb.theta = theta(pb.experiment, false);
    pb.criterion = criterion ? *criterion : parse_criterion(cfg_.get("criterion", "D"));
    pb.prior = prior(pb.theta);
    pb.bounds = bounds("design", pb.experiment.input_bounds);
    pb.scale_parameters = scale_parameters();
    pb.rel_step = cfg_.get_double("design.rel_step", 1e-3);
    pb.a_scale = cfg_.get_double("design.a_scale", 0.0);
    pb.starts = starts("design", 8);
    pb.seed = seed("design", 1);
    pb.simplex_tol = cfg_.get_double("design.simplex_tol", 1e-6);
    pb.max_evaluations = static_cast<std::size_t>(cfg_.get_int("design.max_evaluations", 0));
    if (pb.experiment.name == "tclab") {
      const double weight = cfg_.get_double("design.cap_weight", 1e3);
      TclabSettings s;
      s.t_amb = cfg_.get_double("tclab.t_amb", s.t_amb);
      const Vector beta = pb.theta;
      pb.penalty = [beta, s, weight](const Vector& u) { return tclab_cap_penalty(u, beta, s, weight); };
    }
    return pb;
  }

  double ellipse_level() const { return cfg_.get_double("report.ellipse_level", 0.95); }

 private:
  Config cfg_;
  fs::path base_;
};

inline Vector parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::string cell;
  std::istringstream is(spec);
  while (std::getline(is, cell, ':')) parts.push_back(csv::trim(cell));
  if (parts.size() != 3) throw Error(ErrorKind::InvalidArgument, "--grid expects lo:hi:step");
  return make_grid(csv::parse_double(parts[0], "grid lo"), csv::parse_double(parts[1], "grid hi"),
                   csv::parse_double(parts[2], "grid step"));
}

inline Dataset read_dataset(const LabeledExperiment& exp, const std::string& path) {
  const csv::Table t = csv::read_table(path);
  const std::size_t nd = exp.num_inputs(), nm = exp.num_outputs();
  if (t.header.size() != nd + nm)
    throw Error(ErrorKind::InvalidArgument, path + ": model " + exp.name + " needs " +
                                                std::to_string(nd) + " design and " +
                                                std::to_string(nm) + " measurement columns");
  if (t.rows.empty()) throw Error(ErrorKind::InvalidArgument, path + ": no data rows");
  Dataset d;
  for (const auto& row : t.rows)
    d.push_back({Vector(row.begin(), row.begin() + static_cast<long>(nd)),
                 Vector(row.begin() + static_cast<long>(nd), row.end())});
  return d;
}

inline Files cmd_simulate(const RunContext& ctx) {
  const LabeledExperiment exp = ctx.experiment();
  const Vector theta = ctx.theta(exp, true);
  const Vector phi = ctx.phi(exp);
  Files out;
  const csv::Writer w = report::outputs(exp.output_names, exp.run(phi, theta));
  out.add("simulate.csv", w);
  out.summary = w.str();
  return out;
}

inline Files cmd_estimate(const RunContext& ctx) {
  const LabeledExperiment exp = ctx.experiment();
  const Config& cfg = ctx.config();
  const std::string key = cfg.has("estimate.data") ? "estimate.data" : "data";
  if (!cfg.has(key)) throw Error(ErrorKind::InvalidArgument, "--data is required");
  const Dataset data = read_dataset(exp, ctx.path(key).string());

  Vector theta0 = cfg.has("estimate.theta0") ? cfg.get_list("estimate.theta0") : ctx.theta(exp, false);
  if (theta0.size() != exp.num_parameters())
    throw Error(ErrorKind::InvalidArgument, "estimate.theta0 length");
  Bounds fallback;
  for (double v : theta0) fallback.emplace_back(std::min(v / 100.0, v * 100.0), std::max(v / 100.0, v * 100.0));
  const Bounds b = ctx.bounds("estimate", fallback);
  EstimationOptions opt;
  opt.rel_step = cfg.get_double("estimate.rel_step", opt.rel_step);
  const MultistartEstimate ms = estimate_multistart(exp, data, theta0, b, ctx.starts("estimate", 1),
                                                    ctx.seed("estimate", 1), opt);
  const EstimationResult& e = ms.best;
  const auto& names = exp.parameter_names;

  Files out;
  out.add("theta_hat.csv", report::named_values("parameter", names, e.theta_hat));
  out.add("estimate_summary.csv", report::estimate_summary(e));
  out.add("covariance.csv", csv::matrix_writer(e.covariance, names));
  out.add("covariance_relative.csv",
          csv::matrix_writer(relative_covariance(e.covariance, e.theta_hat), names));
  out.add("fim.csv", csv::matrix_writer(e.fim, names));
  out.add("fim_relative.csv", csv::matrix_writer(relative_fim(e.fim, e.theta_hat), names));
  out.add("eigenanalysis.csv", report::eigen_table(eigenanalysis(e.covariance, names)));
  out.add("ellipses.csv", report::ellipses(e.covariance, names, ctx.ellipse_level()));
  std::ostringstream s;
  s << "theta_hat:";
  for (std::size_t k = 0; k < names.size(); ++k) s << ' ' << names[k] << '=' << csv::fmt(e.theta_hat[k]);
  s << "\nwsse: " << csv::fmt(e.wsse) << (e.converged ? "" : " (not converged)") << '\n';
  out.summary = s.str();
  return out;
}

inline Files write_design(const DesignProblem& pb, const DesignResult& r, double level,
                          const std::string& suffix = "") {
  Files out;
  const auto& names = pb.experiment.parameter_names;
  out.add("design" + suffix + ".csv", report::named_values("input", pb.experiment.input_names, r.phi_hat));
  out.add("audit" + suffix + ".csv", report::audit(r, pb.criterion));
  out.add("fim" + suffix + ".csv", csv::matrix_writer(r.fim_at_opt, names));
  out.add("starts" + suffix + ".csv", report::starts(r, pb.experiment.input_names));
  const SymMatrix post = covariance_from_fim(r.fim_at_opt).value;
  out.add("posterior_covariance" + suffix + ".csv", csv::matrix_writer(post, names));
  out.add("eigenanalysis" + suffix + ".csv", report::eigen_table(eigenanalysis(post, names)));
  out.add("ellipses" + suffix + ".csv", report::ellipses(post, names, level));
  return out;
}

inline Files cmd_design(const RunContext& ctx) {
  const std::string crit = ctx.config().get("criterion", "D");
  if (crit == "all") {
    DesignProblem pb = ctx.design_problem(Criterion::D);
    const std::vector<Criterion> designs{Criterion::A, Criterion::D, Criterion::E, Criterion::ME};
    const CrossEvaluation x = cross_evaluate(pb, designs);
    Files out;
    out.add("cross_evaluation.csv", report::cross_evaluation(x));
    for (std::size_t k = 0; k < designs.size(); ++k) {
      pb.criterion = designs[k];
      const Files f = write_design(pb, x.results[k], ctx.ellipse_level(),
                                   std::string("_") + to_string(designs[k]));
      out.files.insert(out.files.end(), f.files.begin(), f.files.end());
    }
    out.summary = report::cross_evaluation(x).str();
    return out;
  }
  const DesignProblem pb = ctx.design_problem();
  const DesignResult r = optimize_design(pb);
  Files out = write_design(pb, r, ctx.ellipse_level());
  std::ostringstream s;
  s << to_string(pb.criterion) << "-optimal design:";
  for (std::size_t k = 0; k < r.phi_hat.size(); ++k)
    s << ' ' << pb.experiment.input_names[k] << '=' << csv::fmt(r.phi_hat[k]);
  s << "\ncriterion value: " << csv::fmt(r.criterion_value) << '\n';
  if (r.penalized_evaluations)
    s << "warning: " << r.penalized_evaluations << " evaluations hit a singular FIM (penalty "
      << csv::fmt(singular_penalty) << ")\n";
  out.summary = s.str();
  return out;
}

inline Files cmd_scan(const RunContext& ctx) {
  const DesignProblem pb = ctx.design_problem();
  if (pb.experiment.num_inputs() != 1)
    throw Error(ErrorKind::InvalidArgument,
                "scan is restricted to models with one design input; " + pb.experiment.name +
                    " has " + std::to_string(pb.experiment.num_inputs()));
  Vector grid;
  if (ctx.config().has("scan.grid")) {
    grid = parse_grid(ctx.config().get("scan.grid"));
  } else {
    const auto [lo, hi] = pb.design_bounds().front();
    grid = make_grid(lo, hi, (hi - lo) / 100.0);
  }
  const std::vector<Criterion> cs(all_criteria.begin(), all_criteria.end());
  const auto rows = scan_design_1d(pb, cs, grid);
  Files out;
  out.add("scan.csv", report::scan(rows, cs));
  std::ostringstream s;
  s << "scan: " << rows.size() << " points\n";
  for (std::size_t c = 0; c < cs.size(); ++c) {
    try {
      s << to_string(cs[c]) << " optimum at " << csv::fmt(rows[scan_argopt(rows, c, cs[c])].phi) << '\n';
    } catch (const Error&) {
      s << to_string(cs[c]) << " undefined on the grid\n";
    }
  }
  out.summary = s.str();
  return out;
}

inline std::vector<std::size_t> size_list(const Config& cfg, const std::string& key,
                                          std::vector<std::size_t> fallback) {
  if (!cfg.has(key)) return fallback;
  std::vector<std::size_t> out;
  for (double v : cfg.get_list(key)) {
    if (v < 1 || v != static_cast<double>(static_cast<std::size_t>(v)))
      throw Error(ErrorKind::InvalidArgument, key + ": sizes must be positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

inline Files cmd_verify(const RunContext& ctx) {
  const Config& cfg = ctx.config();
  const std::vector<Criterion> cs(all_criteria.begin(), all_criteria.end());
  const std::uint64_t seed = ctx.seed("verify", 2024);
  const std::string scheme = cfg.get("verify.first_scheme", "forward");
  if (scheme != "forward" && scheme != "central")
    throw Error(ErrorKind::InvalidArgument, "verify.first_scheme: forward or central");
  VerificationReport rep = check_first_derivatives(
      cs, size_list(cfg, "verify.sizes", {2, 3, 4, 5, 6, 7, 8, 9, 10}),
      static_cast<std::size_t>(cfg.get_int("verify.samples", 100)),
      cfg.get_double("verify.first_step", 1e-4),
      scheme == "forward" ? FdScheme::Forward : FdScheme::Central, seed);
  const VerificationReport second = check_second_derivatives(
      cs, static_cast<std::size_t>(cfg.get_int("verify.second_size", 2)),
      static_cast<std::size_t>(cfg.get_int("verify.second_samples", 10)),
      cfg.get_double("verify.second_step", 1e-6), seed);
  const VerificationReport tri = check_greybox(
      cs, size_list(cfg, "verify.greybox_sizes", {2, 3, 4}),
      static_cast<std::size_t>(cfg.get_int("verify.greybox_samples", 20)), 1e-4,
      cfg.get_double("verify.greybox_step", 1e-5), seed);
  rep.rows.insert(rep.rows.end(), second.rows.begin(), second.rows.end());
  rep.rows.insert(rep.rows.end(), tri.rows.begin(), tri.rows.end());

  Files out;
  out.add("verify.csv", report::verification(rep));
  out.add("verify_elements.csv", report::verification_elements(rep));
  std::ostringstream s;
  for (const VerificationRow& r : rep.rows) {
    if (r.criterion == Criterion::PseudoA) continue;
    double limit = r.order == 2 ? -3.0 : (r.criterion == Criterion::D ? -5.0 : -4.5);
    const double measured = r.order == 2 ? r.max_log10 : r.mean_log10;
    s << (measured <= limit ? "ok   " : "over ") << r.space << " order " << r.order << ' '
      << to_string(r.criterion) << " p=" << r.p << ' ' << (r.order == 2 ? "max" : "mean")
      << " log10 error " << csv::fmt(measured) << " (limit " << limit << ")\n";
  }
  out.summary = s.str();
  return out;
}

// Exclusive lock on an output directory for the lifetime of the object.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".oedkit.lock") {
    fs::create_directories(dir);
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0)
      throw Error(ErrorKind::InvalidArgument,
                  "output directory " + dir.string() + " is locked by another run (" +
                      path_.string() + ")");
  }
  ~DirLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      std::error_code ec;
      fs::remove(path_, ec);
    }
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

inline void write_files(const fs::path& dir, const Files& f) {
  DirLock lock(dir);
  for (const auto& [name, content] : f.files) {
    std::ofstream o(dir / name, std::ios::binary);
    if (!o) throw Error(ErrorKind::InvalidArgument, "cannot write " + (dir / name).string());
    o << content;
  }
}

inline Files run_command(const std::string& cmd, const RunContext& ctx) {
  if (cmd == "simulate") return cmd_simulate(ctx);
  if (cmd == "estimate") return cmd_estimate(ctx);
  if (cmd == "design") return cmd_design(ctx);
  if (cmd == "scan") return cmd_scan(ctx);
  if (cmd == "verify") return cmd_verify(ctx);
  throw Error(ErrorKind::InvalidArgument, "unknown subcommand '" + cmd + "'");
}

}  // namespace oedkit::cli
