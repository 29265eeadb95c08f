#include <CLI11.hpp>

#include <iostream>

#include "oedkit/cli.hpp"

namespace {

struct Flags {
  std::string config, model, criterion, prior_cov, prior_fim, out, grid, phi, theta, data;
  long seed = -1;
  long starts = -1;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "config file");
  sub->add_option("--model", f.model, "bod | tclab | membrane");
  sub->add_option("--criterion", f.criterion, "A | D | E | ME | pseudoA (design: also 'all')");
  sub->add_option("--prior-cov", f.prior_cov, "prior covariance CSV");
  sub->add_option("--prior-fim", f.prior_fim, "prior FIM CSV");
  sub->add_option("--seed", f.seed, "random seed");
  sub->add_option("--starts", f.starts, "multistart count");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--grid", f.grid, "scan grid lo:hi:step");
  sub->add_option("--phi", f.phi, "design inputs, comma-separated");
  sub->add_option("--theta", f.theta, "parameters, comma-separated");
  sub->add_option("--data", f.data, "data CSV (phi_1..phi_Nd, y_1..y_Nmeas)");
}

int run(const std::string& cmd, const Flags& f) {
  namespace fs = std::filesystem;
  oedkit::Config cfg;
  fs::path base = fs::current_path();
  if (!f.config.empty()) {
    cfg = oedkit::Config::load(f.config);
    base = fs::absolute(f.config).parent_path();
  }
  // Paths given on the command line are relative to the working directory.
  auto set_path = [&](const std::string& key, const std::string& v) {
    if (!v.empty()) cfg.set(key, fs::absolute(v).string());
  };
  auto set = [&](const std::string& key, const std::string& v) {
    if (!v.empty()) cfg.set(key, v);
  };
  set("model", f.model);
  set("criterion", f.criterion);
  set("phi", f.phi);
  set("theta", f.theta);
  set("scan.grid", f.grid);
  set_path("out", f.out);
  set_path("data", f.data);
  if (!f.prior_cov.empty() || !f.prior_fim.empty()) {
    cfg.set("prior.covariance", "");
    cfg.set("prior.fim", "");
  }
  set_path("prior.covariance", f.prior_cov);
  set_path("prior.fim", f.prior_fim);
  if (!f.prior_cov.empty() && !f.prior_fim.empty())
    throw oedkit::Error(oedkit::ErrorKind::InvalidArgument, "--prior-cov and --prior-fim are exclusive");
  if (f.seed >= 0) {
    cfg.set("seed", std::to_string(f.seed));
    for (const char* k : {"design.seed", "estimate.seed", "verify.seed"})
      if (cfg.has(k)) cfg.set(k, std::to_string(f.seed));
  }
  if (f.starts >= 0) {
    cfg.set("starts", std::to_string(f.starts));
    for (const char* k : {"design.starts", "estimate.starts"})
      if (cfg.has(k)) cfg.set(k, std::to_string(f.starts));
  }

  const oedkit::cli::RunContext ctx(cfg, base);
  const oedkit::cli::Files files = oedkit::cli::run_command(cmd, ctx);
  if (cfg.has("out")) {
    oedkit::cli::write_files(ctx.path("out"), files);
  } else if (cmd != "simulate") {
    oedkit::cli::write_files(base / "oedkit_out", files);
  }
  std::cout << files.summary;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oedkit: model-based design of experiments"};
  app.require_subcommand(1);
  Flags flags;
  std::string cmd;
  for (const char* name : {"simulate", "estimate", "design", "scan", "verify"}) {
    CLI::App* sub = app.add_subcommand(name);
    add_common(sub, flags);
    sub->callback([&cmd, name] { cmd = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    return run(cmd, flags);
  } catch (const oedkit::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.numerical() ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
