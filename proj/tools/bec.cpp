// bec: batch driver for the stationary, expansion, sweep and dynamics solvers.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "becmf/io.hpp"

namespace fs = std::filesystem;
using namespace becmf;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitModule = 3;

struct Args {
  std::string config;
  std::string out;
  std::optional<double> epsilon;
  std::vector<double> epsilons;
  std::optional<int> order;
  std::optional<double> tfinal;
  std::optional<double> dt;
  std::optional<double> m;
};

fs::path prepare_out(const Args& a, const RunConfig& c) {
  const fs::path out = a.out.empty() ? c.output : fs::path(a.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

void write_solution(const fs::path& out, const ScfSolution& s) {
  write_json(out / "solution.json", to_json(s));
  std::ostringstream csv;
  write_convergence_csv(csv, s.history);
  write_text(out / "convergence.csv", csv.str());
}

void cmd_stationary(const RunConfig& c, const fs::path& out) {
  const ScfSolution s = scf_solve(c.scf);
  write_solution(out, s);
  std::cout << "converged in " << s.iterations << " iterations: mu = " << format_double(s.mu)
            << ", xi = " << format_double(s.thermo.xi) << ", energy = " << format_double(s.energy) << "\n";
}

void cmd_full_eps(const RunConfig& c, const fs::path& out, std::optional<double> eps) {
  if (!eps) eps = c.scf.epsilon;
  if (!eps) throw ConfigError("epsilon", "full-eps needs --epsilon or an 'epsilon' entry in the config");
  if (!(*eps > 0.0)) throw ConfigError("epsilon", "epsilon must be positive");
  const ScfSolution s = full_epsilon_solve(c.scf, *eps);
  write_solution(out, s);
  std::cout << "eps = " << format_double(*eps) << ": mu = " << format_double(s.mu) << ", energy = " << format_double(s.energy)
            << "\n";
}

void cmd_expand(const RunConfig& c, const fs::path& out, int order) {
  if (order < 0 || order > 2) throw ConfigError("order", "order must be 0, 1 or 2");
  const ExpansionSolution e = expand(c.scf, order, c.expansion);
  write_json(out / "expansion.json", to_json(e));
  std::cout << "expansion to order " << order << ": mu0 = " << format_double(e.slice[0].mu);
  if (e.has_order2) std::cout << ", mu2 = " << format_double(e.slice[2].mu) << ", E2 = " << format_double(e.energy.total[2]);
  std::cout << "\n";
}

void cmd_sweep(RunConfig c, const fs::path& out, const std::vector<double>& eps) {
  if (!eps.empty()) c.sweep.epsilons = eps;
  for (double e : c.sweep.epsilons) {
    if (!(e > 0.0)) throw ConfigError("epsilons", "epsilon values must be positive");
  }
  if (c.sweep.epsilons.size() < 2) throw ConfigError("epsilons", "a sweep needs at least two epsilon values");
  const SweepResult r = run_sweep(c.scf, c.sweep);
  std::ostringstream csv;
  write_sweep_csv(csv, r);
  write_text(out / "sweep.csv", csv.str());
  write_json(out / "sweep.json", to_json(r));
  std::cout << "slope order0 = " << format_double(r.slope_order0) << ", energy remainder slope = "
            << format_double(r.slope_energy_remainder) << "\n";
}

void cmd_evolve(RunConfig c, const fs::path& out, std::optional<double> tfinal, std::optional<double> dt) {
  if (tfinal) c.dynamics.t_final = *tfinal;
  if (dt) c.dynamics.dt = *dt;
  if (!(c.dynamics.t_final >= 0.0)) throw ConfigError("tfinal", "t_final must be nonnegative");
  if (!(c.dynamics.dt > 0.0)) throw ConfigError("dt", "dt must be positive");
  const ScfSolution s = scf_solve(c.scf);
  const Propagator prop(s.phi.grid(), s.potential, s.coupling, s.N, c.dynamics.dt);
  const DynState d0 = initial_state(s);
  write_json(out / "initial_state.json", initial_state_json(s, d0));
  const Trajectory tr = evolve(prop, d0, c.dynamics);
  std::ostringstream csv;
  write_observables_csv(csv, tr.rows);
  write_text(out / "observables.csv", csv.str());
  write_json(out / "evolution.json", to_json(tr));
  std::cout << tr.steps << " steps: max density change = " << format_double(tr.max_density_change)
            << ", orthogonality drift = " << format_double(tr.orthogonality_drift) << "\n";
}

void cmd_verify(const RunConfig& c, const fs::path& out, std::optional<double> m) {
  const AsymptoticsSpec& a = c.asymptotics;
  const double order = m ? *m : a.m;
  if (!(order > 0.0)) throw ConfigError("m", "m must be positive");
  const Microstructure& micro = c.scf.micro;
  Json doc;
  doc["kind"] = "asymptotics";
  doc["m"] = order;
  doc["test_function"] = to_string(a.test_function);
  const double fourier = h_minus_one_norm_sq(micro);
  const double quad = h_minus_one_norm_sq_quadrature(micro);
  doc["h_minus_one"] = Json{{"fourier", fourier}, {"quadrature", quad}, {"difference", std::abs(fourier - quad)}};
  Json profiles = Json::array();
  bool all = true;
  for (const OscillatoryProfile& p :
       {profile_shifted(micro, 0.0), profile_shifted(micro, a.offset), profile_A_inv_laplacian_A(micro)}) {
    const DecayReport r = verify_oscillatory_decay(p, a.test_function, a.epsilons);
    Json j = to_json(r);
    j["name"] = p.name;
    j["mean"] = p.mean;
    j["passes"] = r.passes(order);
    all = all && r.passes(order);
    profiles.push_back(j);
  }
  doc["profiles"] = profiles;
  doc["passes"] = all;
  write_json(out / "asymptotics.json", doc);
  std::cout << "oscillatory decay beyond order " << format_double(order) << ": " << (all ? "yes" : "no") << "\n";
}

int report(const std::string& command, const std::exception& e, const fs::path& out, int code) {
  const Json doc = error_json(command, e);
  std::cerr << doc.dump() << "\n";
  if (!out.empty()) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (!ec) {
      try {
        write_json(out / "error.json", doc);
      } catch (const std::exception&) {
      }
    }
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-temperature condensate solvers with oscillatory coupling"};
  app.require_subcommand(1);
  Args a;

  auto common = [&a](CLI::App* sub) {
    sub->add_option("--config", a.config, "config JSON")->required();
    sub->add_option("--out", a.out, "output directory (default: config 'output')");
  };
  CLI::App* stationary = app.add_subcommand("stationary", "self-consistent stationary solve");
  common(stationary);
  CLI::App* full = app.add_subcommand("full-eps", "stationary solve with the oscillatory coupling at one eps");
  common(full);
  full->add_option("--epsilon", a.epsilon, "period of the microstructure");
  CLI::App* exp = app.add_subcommand("expand", "two-scale expansion in eps");
  common(exp);
  exp->add_option("--order", a.order, "highest order (0, 1 or 2)");
  CLI::App* sweep = app.add_subcommand("sweep", "full solves against the expansion over an eps list");
  common(sweep);
  sweep->add_option("--epsilons", a.epsilons, "comma-separated eps values")->delimiter(',');
  CLI::App* evolve_cmd = app.add_subcommand("evolve", "time evolution from the stationary state");
  common(evolve_cmd);
  evolve_cmd->add_option("--tfinal", a.tfinal, "final time");
  evolve_cmd->add_option("--dt", a.dt, "time step");
  CLI::App* verify = app.add_subcommand("verify-asymptotics", "oscillatory integral decay checks");
  common(verify);
  verify->add_option("--m", a.m, "decay order to beat");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  RunConfig config;
  fs::path out = a.out;
  try {
    config = load_run_config(a.config);
    out = prepare_out(a, config);
  } catch (const ConfigError& e) {
    return report(command, e, out, kExitConfig);
  } catch (const std::exception& e) {
    return report(command, e, out, kExitModule);
  }

  try {
    if (command == "stationary") cmd_stationary(config, out);
    else if (command == "full-eps") cmd_full_eps(config, out, a.epsilon);
    else if (command == "expand") cmd_expand(config, out, a.order.value_or(2));
    else if (command == "sweep") cmd_sweep(config, out, a.epsilons);
    else if (command == "evolve") cmd_evolve(config, out, a.tfinal, a.dt);
    else cmd_verify(config, out, a.m);
  } catch (const ConfigError& e) {
    return report(command, e, out, kExitConfig);
  } catch (const std::exception& e) {
    return report(command, e, out, kExitModule);
  }
  return 0;
}
