// Command-line driver: potential tabulation/verification, analytic-estimate
// checks, and the coupled simulation with energy/entropy audits.
//
//   bmqt potential eval   --config cfg.json --out dir
//   bmqt potential verify --config cfg.json --out dir
//   bmqt analysis ftest1|concavity|laplace|case2 --config cfg.json --out dir
//   bmqt simulate         --config cfg.json --out dir [--seed N] [--singular-flux]
//
// Flags override the corresponding config fields. The BMQT_THREADS
// environment variable caps the worker count (results do not depend on it).

#include <CLI11.hpp>

#include <iostream>

#include "bmqt/config.hpp"
#include "bmqt/errors.hpp"
#include "bmqt/run.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool singular_flux = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "configuration file (JSON)");
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "override the configured seed")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  cmd->add_flag("--singular-flux", opts.singular_flux,
                "select the singular heat-flux law (requires model.A_minus2 > 0)");
}

bmqt::RunConfig build_config(const CommonOpts& opts, bmqt::RunMode mode) {
  bmqt::RunConfig cfg;
  // flag overrides apply before constraint validation, so a config carrying
  // model.A_minus2 > 0 can be switched into singular-flux mode on the line
  if (!opts.config_path.empty())
    cfg = bmqt::load_config_file(opts.config_path, /*validate=*/false);
  cfg.mode = mode;  // the subcommand is authoritative
  if (opts.seed_set) cfg.seed = opts.seed;
  if (!opts.out_dir.empty()) cfg.output_dir = opts.out_dir;
  if (opts.singular_flux) {
    cfg.singular_flux = true;
    if (!(cfg.model.A_minus2 > 0.0))
      throw bmqt::config_error(
          "--singular-flux: h12s requires model.A_minus2 > 0 in the configuration");
  }
  bmqt::validate_config(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ball-Majumdar Q-tensor toolkit"};
  app.require_subcommand(1);

  CommonOpts opts;

  CLI::App* potential = app.add_subcommand("potential", "singular potential operations");
  potential->require_subcommand(1);
  CLI::App* pot_eval = potential->add_subcommand("eval", "tabulate f, mu over a spectrum grid");
  CLI::App* pot_verify = potential->add_subcommand("verify", "run the potential oracle suite");
  add_common(pot_eval, opts);
  add_common(pot_verify, opts);

  CLI::App* analysis = app.add_subcommand("analysis", "numerical certification checks");
  analysis->require_subcommand(1);
  std::vector<CLI::App*> checks;
  for (const char* name : {"ftest1", "concavity", "laplace", "case2"}) {
    CLI::App* c = analysis->add_subcommand(name);
    add_common(c, opts);
    checks.push_back(c);
  }

  CLI::App* simulate = app.add_subcommand("simulate", "advance the coupled system");
  add_common(simulate, opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (pot_eval->parsed()) return bmqt::run(build_config(opts, bmqt::RunMode::PotentialEval));
    if (pot_verify->parsed()) return bmqt::run(build_config(opts, bmqt::RunMode::PotentialVerify));
    for (std::size_t i = 0; i < checks.size(); ++i) {
      if (checks[i]->parsed()) {
        static const char* names[] = {"ftest1", "concavity", "laplace", "case2"};
        return bmqt::run(build_config(opts, bmqt::RunMode::Analysis), names[i]);
      }
    }
    if (simulate->parsed()) return bmqt::run(build_config(opts, bmqt::RunMode::Simulate));
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
  return 2;
}
