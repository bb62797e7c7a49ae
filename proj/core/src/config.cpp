#include "bmqt/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bmqt/errors.hpp"

namespace bmqt {

using nlohmann::json;

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::PotentialEval: return "potential-eval";
    case RunMode::PotentialVerify: return "potential-verify";
    case RunMode::Analysis: return "analysis";
    case RunMode::Simulate: return "simulate";
  }
  return "?";
}

namespace {

RunMode mode_from_string(const std::string& s) {
  if (s == "potential-eval") return RunMode::PotentialEval;
  if (s == "potential-verify") return RunMode::PotentialVerify;
  if (s == "analysis") return RunMode::Analysis;
  if (s == "simulate") return RunMode::Simulate;
  throw config_error("unknown mode \"" + s +
                     "\" (expected potential-eval, potential-verify, analysis or simulate)");
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw config_error("unknown configuration key \"" + where + it.key() + "\"");
  }
}

template <typename T>
void get_to(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) obj.at(key).get_to(out);
}

QuadratureOrders parse_quad(const json& obj, const std::string& where, QuadratureOrders defaults) {
  reject_unknown(obj, {"polar", "azimuthal"}, where);
  QuadratureOrders q = defaults;
  get_to(obj, "polar", q.polar);
  get_to(obj, "azimuthal", q.azimuthal);
  return q;
}

}  // namespace

RunConfig parse_config(const std::string& text, bool validate) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw config_error(std::string("config parse error: ") + err.what());
  }
  if (!doc.is_object()) throw config_error("config document must be a JSON object");

  reject_unknown(doc,
                 {"mode", "seed", "singular_flux", "grid_size", "dt", "t_end",
                  "diagnostics_cadence", "checkpoint_cadence", "quadrature", "sim_quadrature",
                  "model", "init", "audit", "potential_eval", "potential_verify", "analysis",
                  "output"},
                 "");

  RunConfig cfg;
  if (doc.contains("mode")) cfg.mode = mode_from_string(doc.at("mode").get<std::string>());
  get_to(doc, "seed", cfg.seed);
  get_to(doc, "singular_flux", cfg.singular_flux);
  get_to(doc, "grid_size", cfg.grid_size);
  get_to(doc, "dt", cfg.dt);
  get_to(doc, "t_end", cfg.t_end);
  get_to(doc, "diagnostics_cadence", cfg.diagnostics_cadence);
  get_to(doc, "checkpoint_cadence", cfg.checkpoint_cadence);

  if (doc.contains("quadrature"))
    cfg.quadrature = parse_quad(doc.at("quadrature"), "quadrature.", cfg.quadrature);
  if (doc.contains("sim_quadrature"))
    cfg.sim_quadrature = parse_quad(doc.at("sim_quadrature"), "sim_quadrature.", cfg.sim_quadrature);

  if (doc.contains("model")) {
    const json& m = doc.at("model");
    reject_unknown(m,
                   {"xi", "lambda_bulk", "a", "m", "k", "A0", "Ak", "A_minus2", "Gamma0",
                    "Gamma1", "mu0", "mu1"},
                   "model.");
    get_to(m, "xi", cfg.model.xi);
    get_to(m, "lambda_bulk", cfg.model.lambda_bulk);
    get_to(m, "a", cfg.model.a);
    get_to(m, "m", cfg.model.m);
    get_to(m, "k", cfg.model.k);
    get_to(m, "A0", cfg.model.A0);
    get_to(m, "Ak", cfg.model.Ak);
    get_to(m, "A_minus2", cfg.model.A_minus2);
    get_to(m, "Gamma0", cfg.model.Gamma0);
    get_to(m, "Gamma1", cfg.model.Gamma1);
    get_to(m, "mu0", cfg.model.mu0);
    get_to(m, "mu1", cfg.model.mu1);
  }

  if (doc.contains("init")) {
    const json& m = doc.at("init");
    reject_unknown(
        m, {"u_amplitude", "q_max_eigenvalue", "theta_mean", "theta_amplitude", "k_max"},
        "init.");
    get_to(m, "u_amplitude", cfg.init.u_amplitude);
    get_to(m, "q_max_eigenvalue", cfg.init.q_max_eigenvalue);
    get_to(m, "theta_mean", cfg.init.theta_mean);
    get_to(m, "theta_amplitude", cfg.init.theta_amplitude);
    get_to(m, "k_max", cfg.init.k_max);
  }

  if (doc.contains("audit")) {
    const json& m = doc.at("audit");
    reject_unknown(m, {"entropy_tolerance", "bumps"}, "audit.");
    get_to(m, "entropy_tolerance", cfg.entropy_tolerance);
    get_to(m, "bumps", cfg.audit_bumps);
  }

  if (doc.contains("potential_eval")) {
    const json& m = doc.at("potential_eval");
    reject_unknown(m, {"grid", "margin"}, "potential_eval.");
    get_to(m, "grid", cfg.potential_eval.grid);
    get_to(m, "margin", cfg.potential_eval.margin);
  }

  if (doc.contains("potential_verify")) {
    const json& m = doc.at("potential_verify");
    reject_unknown(m, {"duality_samples", "gradient_samples", "hessian_samples", "margin"},
                   "potential_verify.");
    get_to(m, "duality_samples", cfg.potential_verify.duality_samples);
    get_to(m, "gradient_samples", cfg.potential_verify.gradient_samples);
    get_to(m, "hessian_samples", cfg.potential_verify.hessian_samples);
    get_to(m, "margin", cfg.potential_verify.margin);
  }

  if (doc.contains("analysis")) {
    const json& m = doc.at("analysis");
    reject_unknown(m,
                   {"samples", "margins", "epsilon", "quad", "iij_quad", "directions",
                    "rho_doublings", "quad_1d_order", "alpha_max"},
                   "analysis.");
    get_to(m, "samples", cfg.analysis.samples);
    get_to(m, "margins", cfg.analysis.margins);
    get_to(m, "epsilon", cfg.analysis.epsilon);
    if (m.contains("quad")) cfg.analysis.quad = parse_quad(m.at("quad"), "analysis.quad.", cfg.analysis.quad);
    if (m.contains("iij_quad"))
      cfg.analysis.iij_quad = parse_quad(m.at("iij_quad"), "analysis.iij_quad.", cfg.analysis.iij_quad);
    get_to(m, "directions", cfg.analysis.directions);
    get_to(m, "rho_doublings", cfg.analysis.rho_doublings);
    get_to(m, "quad_1d_order", cfg.analysis.quad_1d_order);
    get_to(m, "alpha_max", cfg.analysis.alpha_max);
  }

  if (doc.contains("output")) {
    const json& m = doc.at("output");
    reject_unknown(m, {"directory"}, "output.");
    get_to(m, "directory", cfg.output_dir);
  }

  if (validate) validate_config(cfg);
  return cfg;
}

RunConfig load_config_file(const std::string& path, bool validate) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot open config file " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str(), validate);
}

void validate_config(const RunConfig& cfg) {
  std::vector<std::string> bad = cfg.model.violations();
  if (cfg.singular_flux && !(cfg.model.A_minus2 > 0.0))
    bad.push_back("h12s violated: singular-flux mode requires A_minus2 > 0");
  if (!cfg.singular_flux && cfg.model.A_minus2 > 0.0)
    bad.push_back("config: model.A_minus2 > 0 requires singular_flux = true (h12s path)");
  if (cfg.grid_size < 8 || cfg.grid_size % 2 != 0)
    bad.push_back("config: grid_size must be even and >= 8");
  if (!(cfg.dt > 0.0)) bad.push_back("config: dt must be positive");
  if (!(cfg.t_end > 0.0)) bad.push_back("config: t_end must be positive");
  if (cfg.diagnostics_cadence < 1) bad.push_back("config: diagnostics_cadence must be >= 1");
  if (cfg.checkpoint_cadence < 0) bad.push_back("config: checkpoint_cadence must be >= 0");
  if (cfg.quadrature.polar < 8 || cfg.quadrature.azimuthal < 16)
    bad.push_back("config: quadrature orders below the (8, 16) minimum");
  if (cfg.sim_quadrature.polar < 8 || cfg.sim_quadrature.azimuthal < 16)
    bad.push_back("config: sim_quadrature orders below the (8, 16) minimum");
  if (!(cfg.init.theta_mean > 0.0))
    bad.push_back("m6c violated: initial theta_mean must be strictly positive");
  if (!(cfg.init.theta_amplitude >= 0.0 && cfg.init.theta_amplitude < 1.0))
    bad.push_back("m6c violated: theta_amplitude must lie in [0, 1) to keep theta positive");
  if (!(cfg.init.q_max_eigenvalue >= 0.0 && cfg.init.q_max_eigenvalue < 1.0 / 3.0))
    bad.push_back("m6b violated: q_max_eigenvalue must lie in [0, 1/3)");
  if (cfg.init.k_max < 1 || cfg.init.k_max > cfg.grid_size / 3)
    bad.push_back("config: init.k_max must lie in [1, grid_size/3]");
  if (!(cfg.init.u_amplitude >= 0.0)) bad.push_back("m6 violated: u_amplitude must be nonnegative");
  if (cfg.audit_bumps < 1) bad.push_back("config: audit.bumps must be >= 1");
  if (!(cfg.entropy_tolerance > 0.0)) bad.push_back("config: audit.entropy_tolerance must be positive");
  if (cfg.potential_eval.grid < 4) bad.push_back("config: potential_eval.grid must be >= 4");
  if (!(cfg.potential_eval.margin > 0.0 && cfg.potential_eval.margin < 0.1))
    bad.push_back("config: potential_eval.margin must lie in (0, 0.1)");
  for (double m : cfg.analysis.margins)
    if (!(m > 0.0 && m < 0.1)) bad.push_back("config: analysis margins must lie in (0, 0.1)");

  if (!bad.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& b : bad) msg += "\n  - " + b;
    throw config_error(msg);
  }
}

}  // namespace bmqt
