#include "becmf/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace becmf {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string type_name(const Json& j) { return j.type_name(); }

void check_keys(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path, "'" + path + "' must be an object, got " + type_name(j));
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!ok.count(k)) throw ConfigError(join(path, k), "unknown key '" + join(path, k) + "'");
  }
}

double as_number(const Json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key, "'" + key + "' must be a number, got " + type_name(v));
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(key, "'" + key + "' must be finite");
  return x;
}

int as_int(const Json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError(key, "'" + key + "' must be an integer, got " + type_name(v));
  return v.get<int>();
}

bool as_bool(const Json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError(key, "'" + key + "' must be a boolean, got " + type_name(v));
  return v.get<bool>();
}

std::string as_string(const Json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError(key, "'" + key + "' must be a string, got " + type_name(v));
  return v.get<std::string>();
}

std::vector<double> as_numbers(const Json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError(key, "'" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

template <typename F>
void opt(const Json& j, const std::string& path, const char* key, F&& f) {
  if (j.contains(key)) f(j.at(key), join(path, key));
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, "'" + key + "' " + what);
}

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? Json(x) : Json(nullptr));
  return a;
}

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json field(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json fields(const std::vector<RealField>& v) {
  Json a = Json::array();
  for (const auto& f : v) a.push_back(field(f.values()));
  return a;
}

Json grid_json(const Grid& g) {
  return Json{{"dim", g.dim()}, {"half_width", g.half_width()}, {"points", g.points_per_axis()}, {"spacing", g.spacing()}};
}

const char* mode_name(ScfMode m) { return m == ScfMode::Frozen ? "frozen" : "self_consistent"; }

}  // namespace

Microstructure parse_microstructure(const Json& doc, int dim, const std::string& where) {
  check_keys(doc, where, {"g0", "modes"});
  require(doc.contains("g0"), join(where, "g0"), "is required");
  const double g0 = as_number(doc.at("g0"), join(where, "g0"));
  std::vector<FourierMode> modes;
  if (doc.contains("modes")) {
    const Json& ms = doc.at("modes");
    const std::string mp = join(where, "modes");
    if (!ms.is_array()) throw ConfigError(mp, "'" + mp + "' must be an array");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const std::string p = mp + "[" + std::to_string(i) + "]";
      check_keys(ms[i], p, {"l", "re", "im"});
      require(ms[i].contains("l"), join(p, "l"), "is required");
      const Json& l = ms[i].at("l");
      if (!l.is_array() || l.empty() || static_cast<int>(l.size()) > dim) {
        throw ConfigError(join(p, "l"), "'" + join(p, "l") + "' must list 1 to " + std::to_string(dim) + " integers");
      }
      FourierMode m;
      for (std::size_t a = 0; a < l.size(); ++a) m.wave_vector[a] = as_int(l[a], join(p, "l") + "[" + std::to_string(a) + "]");
      double re = 0.0, im = 0.0;
      opt(ms[i], p, "re", [&](const Json& v, const std::string& k) { re = as_number(v, k); });
      opt(ms[i], p, "im", [&](const Json& v, const std::string& k) { im = as_number(v, k); });
      m.amplitude = Complex(re, im);
      modes.push_back(m);
    }
  }
  try {
    return Microstructure(g0, dim, std::move(modes));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(where, e.what());
  }
}

Json to_json(const Microstructure& m) {
  Json modes = Json::array();
  for (const auto& f : m.modes()) {
    Json l = Json::array();
    for (int a = 0; a < m.dim(); ++a) l.push_back(f.wave_vector[static_cast<std::size_t>(a)]);
    modes.push_back(Json{{"l", l}, {"re", f.amplitude.real()}, {"im", f.amplitude.imag()}});
  }
  return Json{{"g0", m.g0()}, {"modes", modes}};
}

RunConfig parse_run_config(const Json& doc, const std::filesystem::path& base_dir) {
  check_keys(doc, "", {"grid", "trap", "microstructure", "epsilon", "thermo", "mode", "frozen", "scf", "expansion", "sweep",
                       "dynamics", "asymptotics", "output"});
  RunConfig c;
  ScfConfig& s = c.scf;

  opt(doc, "", "grid", [&](const Json& g, const std::string& p) {
    check_keys(g, p, {"dim", "half_width", "points"});
    opt(g, p, "dim", [&](const Json& v, const std::string& k) {
      s.grid.dim = as_int(v, k);
      require(s.grid.dim >= 1 && s.grid.dim <= 3, k, "must be 1, 2 or 3");
    });
    opt(g, p, "half_width", [&](const Json& v, const std::string& k) {
      s.grid.half_width = as_number(v, k);
      require(s.grid.half_width > 0.0, k, "must be positive");
    });
    opt(g, p, "points", [&](const Json& v, const std::string& k) {
      s.grid.points = as_int(v, k);
      require(s.grid.points >= 8 && s.grid.points % 2 == 0, k, "must be an even integer >= 8");
    });
  });
  opt(doc, "", "trap", [&](const Json& t, const std::string& p) {
    check_keys(t, p, {"coefficients"});
    opt(t, p, "coefficients", [&](const Json& v, const std::string& k) {
      s.trap.coefficients = as_numbers(v, k);
      require(!s.trap.coefficients.empty() && static_cast<int>(s.trap.coefficients.size()) <= 3, k,
              "must list 1 to 3 coefficients");
      for (double x : s.trap.coefficients) require(x >= 0.0, k, "must be nonnegative");
    });
  });
  if (doc.contains("microstructure")) {
    const Json& m = doc.at("microstructure");
    if (m.is_string()) {
      const std::filesystem::path path = base_dir / m.get<std::string>();
      std::ifstream in(path);
      if (!in) throw ConfigError("microstructure", "cannot open microstructure file " + path.string());
      Json mdoc;
      try {
        mdoc = Json::parse(in);
      } catch (const Json::parse_error& e) {
        throw ConfigError("microstructure", "microstructure file " + path.string() + " is not valid JSON: " + e.what());
      }
      s.micro = parse_microstructure(mdoc, s.grid.dim);
    } else {
      s.micro = parse_microstructure(m, s.grid.dim);
    }
  } else {
    s.micro = Microstructure::cosine(0.1, 0.5, s.grid.dim);
  }
  opt(doc, "", "epsilon", [&](const Json& v, const std::string& k) {
    if (v.is_null()) return;
    s.epsilon = as_number(v, k);
    require(*s.epsilon > 0.0, k, "must be positive");
  });
  opt(doc, "", "thermo", [&](const Json& t, const std::string& p) {
    check_keys(t, p, {"beta", "N", "J"});
    opt(t, p, "beta", [&](const Json& v, const std::string& k) {
      s.thermo.beta = as_number(v, k);
      require(s.thermo.beta > 0.0, k, "must be positive");
    });
    opt(t, p, "N", [&](const Json& v, const std::string& k) {
      s.thermo.N = as_number(v, k);
      require(s.thermo.N >= 1.0, k, "must be at least 1");
    });
    opt(t, p, "J", [&](const Json& v, const std::string& k) {
      s.thermo.J = as_int(v, k);
      require(s.thermo.J >= 0, k, "must be nonnegative");
    });
  });
  opt(doc, "", "mode", [&](const Json& v, const std::string& k) {
    const std::string m = as_string(v, k);
    if (m == "self_consistent") s.mode = ScfMode::SelfConsistent;
    else if (m == "frozen") s.mode = ScfMode::Frozen;
    else throw ConfigError(k, "'" + k + "' must be \"self_consistent\" or \"frozen\"");
  });
  opt(doc, "", "frozen", [&](const Json& f, const std::string& p) {
    check_keys(f, p, {"xi", "occupations"});
    opt(f, p, "xi", [&](const Json& v, const std::string& k) {
      s.frozen_xi = as_number(v, k);
      require(s.frozen_xi > 0.0 && s.frozen_xi <= 1.0, k, "must lie in (0, 1]");
    });
    opt(f, p, "occupations", [&](const Json& v, const std::string& k) {
      s.frozen_occupations = as_numbers(v, k);
      for (double x : s.frozen_occupations) require(x >= 0.0, k, "must be nonnegative");
    });
  });
  if (s.mode == ScfMode::Frozen && static_cast<int>(s.frozen_occupations.size()) != s.thermo.J) {
    throw ConfigError("frozen.occupations", "'frozen.occupations' must have J = " + std::to_string(s.thermo.J) + " entries");
  }
  opt(doc, "", "scf", [&](const Json& t, const std::string& p) {
    check_keys(t, p, {"mixing", "tol_density", "tol_eigen", "max_outer"});
    opt(t, p, "mixing", [&](const Json& v, const std::string& k) {
      s.scf.mixing = as_number(v, k);
      require(s.scf.mixing > 0.0 && s.scf.mixing <= 1.0, k, "must lie in (0, 1]");
    });
    opt(t, p, "tol_density", [&](const Json& v, const std::string& k) {
      s.scf.tol_density = as_number(v, k);
      require(s.scf.tol_density > 0.0, k, "must be positive");
    });
    opt(t, p, "tol_eigen", [&](const Json& v, const std::string& k) {
      s.scf.tol_eigen = as_number(v, k);
      require(s.scf.tol_eigen > 0.0, k, "must be positive");
    });
    opt(t, p, "max_outer", [&](const Json& v, const std::string& k) {
      s.scf.max_outer = as_int(v, k);
      require(s.scf.max_outer >= 1, k, "must be at least 1");
    });
  });
  opt(doc, "", "expansion", [&](const Json& t, const std::string& p) {
    check_keys(t, p, {"damping", "tol", "max_sweeps", "degeneracy_gap"});
    opt(t, p, "damping", [&](const Json& v, const std::string& k) {
      c.expansion.damping = as_number(v, k);
      require(c.expansion.damping > 0.0 && c.expansion.damping <= 1.0, k, "must lie in (0, 1]");
    });
    opt(t, p, "tol", [&](const Json& v, const std::string& k) {
      c.expansion.tol = as_number(v, k);
      require(c.expansion.tol > 0.0, k, "must be positive");
    });
    opt(t, p, "max_sweeps", [&](const Json& v, const std::string& k) {
      c.expansion.max_sweeps = as_int(v, k);
      require(c.expansion.max_sweeps >= 1, k, "must be at least 1");
    });
    opt(t, p, "degeneracy_gap", [&](const Json& v, const std::string& k) {
      c.expansion.degeneracy_gap = as_number(v, k);
      require(c.expansion.degeneracy_gap >= 0.0, k, "must be nonnegative");
    });
  });
  c.sweep.epsilons = {0.125, 0.0625, 0.03125, 0.015625};
  opt(doc, "", "sweep", [&](const Json& t, const std::string& p) {
    check_keys(t, p, {"epsilons", "points_per_period", "extrapolate_energy", "parallel"});
    opt(t, p, "epsilons", [&](const Json& v, const std::string& k) {
      c.sweep.epsilons = as_numbers(v, k);
      require(c.sweep.epsilons.size() >= 2, k, "needs at least two values");
      for (double e : c.sweep.epsilons) require(e > 0.0, k, "values must be positive");
    });
    opt(t, p, "points_per_period", [&](const Json& v, const std::string& k) {
      c.sweep.points_per_period = as_int(v, k);
      require(c.sweep.points_per_period >= 16, k, "must be at least 16");
    });
    opt(t, p, "extrapolate_energy", [&](const Json& v, const std::string& k) { c.sweep.extrapolate_energy = as_bool(v, k); });
    opt(t, p, "parallel", [&](const Json& v, const std::string& k) { c.sweep.parallel = as_bool(v, k); });
  });
  opt(doc, "", "dynamics", [&](const Json& t, const std::string& p) {
    check_keys(t, p, {"t_final", "dt", "observe_every"});
    opt(t, p, "t_final", [&](const Json& v, const std::string& k) {
      c.dynamics.t_final = as_number(v, k);
      require(c.dynamics.t_final >= 0.0, k, "must be nonnegative");
    });
    opt(t, p, "dt", [&](const Json& v, const std::string& k) {
      c.dynamics.dt = as_number(v, k);
      require(c.dynamics.dt > 0.0, k, "must be positive");
    });
    opt(t, p, "observe_every", [&](const Json& v, const std::string& k) {
      c.dynamics.observe_every = as_int(v, k);
      require(c.dynamics.observe_every >= 1, k, "must be at least 1");
    });
  });
  opt(doc, "", "asymptotics", [&](const Json& t, const std::string& p) {
    check_keys(t, p, {"m", "test_function", "epsilons", "offset"});
    opt(t, p, "m", [&](const Json& v, const std::string& k) {
      c.asymptotics.m = as_number(v, k);
      require(c.asymptotics.m > 0.0, k, "must be positive");
    });
    opt(t, p, "test_function", [&](const Json& v, const std::string& k) {
      const std::string name = as_string(v, k);
      require(name == "gaussian" || name == "bump", k, "must be \"gaussian\" or \"bump\"");
      c.asymptotics.test_function = parse_test_function(name);
    });
    opt(t, p, "epsilons", [&](const Json& v, const std::string& k) {
      c.asymptotics.epsilons = as_numbers(v, k);
      require(c.asymptotics.epsilons.size() >= 4, k, "needs at least four values");
      for (std::size_t i = 0; i < c.asymptotics.epsilons.size(); ++i) {
        require(c.asymptotics.epsilons[i] > 0.0, k, "values must be positive");
        if (i) require(c.asymptotics.epsilons[i] < c.asymptotics.epsilons[i - 1], k, "must be strictly decreasing");
      }
    });
    opt(t, p, "offset", [&](const Json& v, const std::string& k) { c.asymptotics.offset = as_number(v, k); });
  });
  opt(doc, "", "output", [&](const Json& v, const std::string& k) {
    c.output = as_string(v, k);
    require(!c.output.empty(), k, "must not be empty");
  });

  try {
    s.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("", e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", "config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_run_config(doc, path.parent_path());
}

Json to_json(const RunConfig& c) {
  const ScfConfig& s = c.scf;
  Json doc;
  doc["grid"] = Json{{"dim", s.grid.dim}, {"half_width", s.grid.half_width}, {"points", s.grid.points}};
  doc["trap"] = Json{{"coefficients", s.trap.coefficients}};
  doc["microstructure"] = to_json(s.micro);
  if (s.epsilon) doc["epsilon"] = *s.epsilon;
  doc["thermo"] = Json{{"beta", s.thermo.beta}, {"N", s.thermo.N}, {"J", s.thermo.J}};
  doc["mode"] = mode_name(s.mode);
  if (s.mode == ScfMode::Frozen) doc["frozen"] = Json{{"xi", s.frozen_xi}, {"occupations", s.frozen_occupations}};
  doc["scf"] = Json{{"mixing", s.scf.mixing}, {"tol_density", s.scf.tol_density}, {"tol_eigen", s.scf.tol_eigen},
                    {"max_outer", s.scf.max_outer}};
  doc["expansion"] = Json{{"damping", c.expansion.damping}, {"tol", c.expansion.tol}, {"max_sweeps", c.expansion.max_sweeps},
                          {"degeneracy_gap", c.expansion.degeneracy_gap}};
  doc["sweep"] = Json{{"epsilons", c.sweep.epsilons}, {"points_per_period", c.sweep.points_per_period},
                      {"extrapolate_energy", c.sweep.extrapolate_energy}, {"parallel", c.sweep.parallel}};
  doc["dynamics"] = Json{{"t_final", c.dynamics.t_final}, {"dt", c.dynamics.dt}, {"observe_every", c.dynamics.observe_every}};
  doc["asymptotics"] = Json{{"m", c.asymptotics.m}, {"test_function", to_string(c.asymptotics.test_function)},
                            {"epsilons", c.asymptotics.epsilons}, {"offset", c.asymptotics.offset}};
  doc["output"] = c.output.string();
  return doc;
}

Json to_json(const ScfSolution& s) {
  Json doc;
  doc["kind"] = "stationary";
  doc["grid"] = grid_json(s.grid);
  doc["epsilon"] = s.epsilon ? Json(*s.epsilon) : Json(nullptr);
  doc["mode"] = mode_name(s.mode);
  doc["N"] = s.N;
  doc["mu"] = s.mu;
  doc["mu_j"] = numbers(s.mu_j);
  doc["b_j"] = numbers(s.b_j);
  doc["xi"] = s.thermo.xi;
  doc["log_z"] = number(s.thermo.log_z);
  doc["n_j"] = numbers(s.thermo.n);
  doc["zeta"] = s.zeta;
  doc["energy_condensate"] = s.energy_condensate;
  doc["energy_excited"] = numbers(s.energy_excited);
  doc["energy"] = s.energy;
  doc["delta_max"] = s.delta_max;
  doc["residuals"] = Json{{"condensate", s.residual_condensate},
                          {"excited", s.residual_excited},
                          {"b_consistency", s.b_consistency},
                          {"orthogonality", s.max_orthogonality},
                          {"constraint", s.thermo.constraint_residual(s.N)}};
  doc["iterations"] = s.iterations;
  doc["warnings"] = s.warnings;
  Json f;
  f["potential"] = field(s.potential.values());
  f["coupling"] = field(s.coupling.values());
  f["phi"] = field(s.phi.values());
  f["phi_j"] = fields(s.phi_j);
  f["rho_s"] = field(s.rho_s.values());
  f["rho_n"] = field(s.rho_n.values());
  doc["fields"] = f;
  return doc;
}

Json initial_state_json(const ScfSolution& s, const DynState& d) {
  Json doc = to_json(s);
  doc["kind"] = "initial_state";
  doc["t"] = d.t;
  doc["theta"] = d.theta;
  return doc;
}

Json to_json(const ExpansionSolution& e) {
  Json doc;
  doc["kind"] = "expansion";
  doc["grid"] = grid_json(e.slice[0].f.grid());
  doc["order"] = e.has_order2 ? 2 : (e.slice[1].f.size() ? 1 : 0);
  doc["microstructure"] = to_json(e.micro);
  doc["g0"] = e.g0;
  doc["N"] = e.N;
  doc["h_minus_one"] = e.h_minus_one;
  Json slices = Json::array();
  for (int k = 0; k <= 2; ++k) {
    const auto& s = e.slice[static_cast<std::size_t>(k)];
    if (s.f.size() == 0) continue;
    Json j;
    j["order"] = k;
    j["mu"] = s.mu;
    j["mu_j"] = numbers(s.mu_j);
    j["xi"] = s.xi;
    j["z"] = number(s.z);
    j["z_ratio"] = number(s.z_ratio);
    j["n_j"] = numbers(s.n_j);
    j["b_j"] = numbers(s.b_j);
    j["f"] = field(s.f.values());
    j["f_j"] = fields(s.f_j);
    j["rho_s"] = field(s.rho_s.values());
    j["rho_n"] = field(s.rho_n.values());
    slices.push_back(j);
  }
  doc["slices"] = slices;
  if (e.has_order2) {
    doc["rho_bar_s2"] = field(e.rho_bar_s2.values());
    doc["rho_bar_n2"] = field(e.rho_bar_n2.values());
    doc["order1"] = Json{{"residual_condensate", e.order1.residual_condensate},
                         {"residual_excited", e.order1.residual_excited},
                         {"xi", e.order1.xi},
                         {"z_ratio", e.order1.z_ratio},
                         {"b_max", e.order1.b_max}};
    doc["order2"] = Json{{"sweeps", e.order2.sweeps},
                         {"final_change", e.order2.final_change},
                         {"residual_condensate", e.order2.residual_condensate},
                         {"residual_excited", e.order2.residual_excited},
                         {"b_crosscheck", e.order2.b_crosscheck},
                         {"orthogonality", e.order2.orthogonality}};
    Json ej = Json::array();
    for (const auto& a : e.energy.E_j) ej.push_back(Json{a[0], a[1], a[2]});
    doc["energy"] = Json{{"zeta", e.energy.zeta}, {"E", e.energy.E}, {"E_j", ej}, {"total", e.energy.total}};
  }
  return doc;
}

Json to_json(const SweepResult& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    rows.push_back(Json{{"epsilon", row.epsilon},
                        {"points", row.points},
                        {"err_order0", row.err_order0},
                        {"err_order2", row.err_order2},
                        {"err_order3", row.err_order3},
                        {"energy_eps", row.energy_eps},
                        {"energy_expansion", row.energy_expansion},
                        {"remainder", row.remainder},
                        {"remainder_fine", number(row.remainder_fine)},
                        {"remainder_extrapolated", number(row.remainder_extrapolated)}});
  }
  return Json{{"kind", "sweep"},
              {"rows", rows},
              {"slopes",
               Json{{"order0", r.slope_order0},
                    {"order2", r.slope_order2},
                    {"order3", r.slope_order3},
                    {"energy_remainder", number(r.slope_energy_remainder)},
                    {"energy_remainder_raw", number(r.slope_energy_remainder_raw)}}}};
}

Json to_json(const DecayReport& r) {
  return Json{{"epsilons", numbers(r.epsilons)},
              {"integrals", numbers(r.integrals)},
              {"deviations", numbers(r.deviations)},
              {"phi_integral", r.phi_integral},
              {"slope", number(r.slope)},
              {"resolved_points", r.resolved_points},
              {"beyond_resolution", r.beyond_resolution}};
}

Json to_json(const Trajectory& t) {
  const DynState& s = t.final_state;
  return Json{{"kind", "evolution"},
              {"steps", t.steps},
              {"t_final", s.t},
              {"theta", s.theta},
              {"zeta", s.zeta},
              {"max_density_change", t.max_density_change},
              {"norm_drift", t.norm_drift},
              {"norm_drift_excited", t.norm_drift_excited},
              {"orthogonality_drift", t.orthogonality_drift},
              {"rows", static_cast<int>(t.rows.size())}};
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRecord>& history) {
  os << "iteration,density_change,xi,mu,residual_condensate,residual_excited,b_consistency\n";
  for (const auto& r : history) {
    os << r.iteration << ',' << format_double(r.density_change) << ',' << format_double(r.xi) << ','
       << format_double(r.mu) << ',' << format_double(r.residual_condensate) << ','
       << format_double(r.residual_excited) << ',' << format_double(r.b_consistency) << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "epsilon,points,err_order0,err_order2,err_order3,energy_eps,energy_expansion,remainder,remainder_fine,"
        "remainder_extrapolated\n";
  for (const auto& row : r.rows) {
    os << format_double(row.epsilon) << ',' << row.points << ',' << format_double(row.err_order0) << ','
       << format_double(row.err_order2) << ',' << format_double(row.err_order3) << ','
       << format_double(row.energy_eps) << ',' << format_double(row.energy_expansion) << ','
       << format_double(row.remainder) << ',' << format_double(row.remainder_fine) << ','
       << format_double(row.remainder_extrapolated) << '\n';
  }
  // slope of |remainder| sits under "remainder", the extrapolated one under
  // "remainder_extrapolated".
  os << "slope,," << format_double(r.slope_order0) << ',' << format_double(r.slope_order2) << ','
     << format_double(r.slope_order3) << ",,," << format_double(r.slope_energy_remainder_raw) << ",,"
     << format_double(r.slope_energy_remainder) << '\n';
}

void write_observables_csv(std::ostream& os, const std::vector<Observables>& rows) {
  const std::size_t J = rows.empty() ? 0 : rows.front().norms_j.size();
  os << "t,norm_sq,max_orthogonality,zeta,theta";
  for (std::size_t j = 0; j < J; ++j) os << ",norm_" << (j + 1);
  os << '\n';
  for (const auto& o : rows) {
    os << format_double(o.t) << ',' << format_double(o.norm_sq) << ',' << format_double(o.max_orthogonality) << ','
       << format_double(o.zeta) << ',' << format_double(o.theta);
    for (double v : o.norms_j) os << ',' << format_double(v);
    os << '\n';
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const Json& doc) { write_text(path, doc.dump(2) + "\n"); }

Json error_json(const std::string& command, const std::exception& e) {
  Json doc;
  doc["command"] = command;
  if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) {
    doc["kind"] = to_string(ce->kind());
    doc["key"] = ce->key();
  } else if (const auto* be = dynamic_cast<const Error*>(&e)) {
    doc["kind"] = to_string(be->kind());
  } else {
    doc["kind"] = "internal";
  }
  doc["message"] = e.what();
  return Json{{"error", doc}};
}

}  // namespace becmf
