#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "becmf/dynamics.hpp"
#include "becmf/homogenization.hpp"

namespace becmf {

using Json = nlohmann::ordered_json;

struct AsymptoticsSpec {
  /// Decay order the zero-mean integrals must beat.
  double m = 3.0;
  TestFunction test_function = TestFunction::Gaussian;
  std::vector<double> epsilons{0.5, 0.25, 0.125, 0.0625, 1.0 / 32.0};
  /// Mean added to A for the nonzero-mean check.
  double offset = 1.0;
};

/// Everything a `bec` run reads from its config file.
struct RunConfig {
  ScfConfig scf;
  Order2Options expansion;
  SweepOptions sweep;
  EvolveOptions dynamics;
  AsymptoticsSpec asymptotics;
  std::filesystem::path output = "out";
};

/// Parses a config document; every unknown key or type mismatch throws
/// ConfigError naming the dotted key path. A string "microstructure" entry
/// is read as a file path relative to `base_dir`.
RunConfig parse_run_config(const Json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// {"g0": .., "modes": [{"l": [..], "re": .., "im": ..}]}
Microstructure parse_microstructure(const Json& doc, int dim, const std::string& where = "microstructure");
Json to_json(const Microstructure& m);

Json to_json(const RunConfig& c);
Json to_json(const ScfSolution& s);
Json to_json(const ExpansionSolution& e);
Json to_json(const SweepResult& r);
Json to_json(const DecayReport& r);
Json to_json(const Trajectory& t);

/// Solution document plus the time and global phase of a dynamic state.
Json initial_state_json(const ScfSolution& s, const DynState& d);

/// 17 significant digits; "nan" / "inf" spelled out.
std::string format_double(double v);

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRecord>& history);
/// Rows sorted by descending epsilon, then a footer row whose first field is
/// "slope".
void write_sweep_csv(std::ostream& os, const SweepResult& r);
void write_observables_csv(std::ostream& os, const std::vector<Observables>& rows);

/// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& doc);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Machine-readable description of a failure.
Json error_json(const std::string& command, const std::exception& e);

}  // namespace becmf
