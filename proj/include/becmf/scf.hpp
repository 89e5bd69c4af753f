#pragma once

#include <optional>
#include <string>
#include <vector>

#include "becmf/grid.hpp"
#include "becmf/microstructure.hpp"
#include "becmf/operators.hpp"
#include "becmf/thermo.hpp"

namespace becmf {

struct GridSpec {
  int dim = 1;
  double half_width = 8.0;
  int points = 256;

  Grid build() const { return build_grid(dim, half_width, points); }
};

/// Harmonic trap V(x) = sum_a c_a x_a^2. A single coefficient applies to
/// every axis.
struct TrapSpec {
  std::vector<double> coefficients{1.0};

  double coefficient(int axis) const;
};

RealField sample_trap(const Grid& grid, const TrapSpec& trap);

enum class ScfMode { SelfConsistent, Frozen };

struct ScfOptions {
  double mixing = 0.5;
  double tol_density = 1e-8;
  double tol_eigen = 1e-9;
  int max_outer = 500;
};

struct ScfConfig {
  GridSpec grid;
  TrapSpec trap;
  Microstructure micro = Microstructure::cosine(0.1, 0.5);
  /// Absent: constant coupling g0.
  std::optional<double> epsilon;
  ThermoParams thermo{1.0, 100.0, 8};
  ScfMode mode = ScfMode::SelfConsistent;
  /// Frozen mode only.
  double frozen_xi = 1.0;
  std::vector<double> frozen_occupations;
  ScfOptions scf;

  void validate() const;
};

/// Discretised single-particle data shared by every solve on one grid:
/// -Delta_h + V as a sparse matrix, the trap and the coupling field.
struct StationaryProblem {
  Grid grid;
  RealField potential;
  RealField coupling;
  SparseMatrix base;

  /// base + diag(extra)
  LinearOperator hamiltonian(const Vec& extra) const;
};

StationaryProblem make_problem(const Grid& grid, const TrapSpec& trap, RealField coupling);

struct CondensateOptions {
  /// Target for ||H[Phi] Phi - mu Phi|| (grid norm).
  double tol = 1e-9;
  double initial_step = 1e-2;
  int max_flow_steps = 20000;
  int max_newton_steps = 40;
  /// Flow hands over to Newton once the relative residual drops below this.
  double newton_switch = 1e-4;
};

struct CondensateResult {
  RealField phi;
  double mu = 0.0;
  double residual = 0.0;
  double energy = 0.0;
  int flow_steps = 0;
  int newton_steps = 0;
};

/// Energy <Phi,(-Delta+V+2g rho_n)Phi> + (xi/2) int g Phi^4 whose
/// constrained critical points solve the condensate equation.
double condensate_energy(const StationaryProblem& p, const Vec& phi, const Vec& rho_n, double xi);

/// Ground state of (-Delta + V + g(xi Phi^2 + 2 rho_n)) Phi = mu Phi with
/// ||Phi||^2 = N: normalised gradient flow, then a Newton polish.
CondensateResult solve_condensate(const StationaryProblem& p, const RealField& rho_n, double xi, double N,
                                  const CondensateOptions& options = {}, const RealField* initial = nullptr);

struct ExcitedResult {
  std::vector<RealField> phi_j;
  std::vector<double> mu_j;
  std::vector<double> b_j;
  /// max_j ||H_phi phi_j - b_j Phi - mu_j phi_j||
  double residual = 0.0;
  /// max_j |N b_j - <Phi, H_phi phi_j>|
  double b_consistency = 0.0;
  std::vector<std::pair<int, int>> degenerate_pairs;

  bool degenerate() const noexcept { return !degenerate_pairs.empty(); }
};

/// Lowest J states of -Delta + V + 2g(rho_s + rho_n) orthogonal to Phi,
/// with b_j = N^{-1} xi int g Phi^3 phi_j.
ExcitedResult solve_excited(const StationaryProblem& p, const RealField& phi, const RealField& rho_s,
                            const RealField& rho_n, double xi, double N, int J, double tol_eigen,
                            const std::vector<Vec>& initial = {});

struct ConvergenceRecord {
  int iteration = 0;
  double density_change = 0.0;
  double xi = 0.0;
  double mu = 0.0;
  double residual_condensate = 0.0;
  double residual_excited = 0.0;
  double b_consistency = 0.0;
};

struct ScfSolution {
  Grid grid;
  RealField potential;
  RealField coupling;
  RealField phi;
  std::vector<RealField> phi_j;
  double mu = 0.0;
  std::vector<double> mu_j;
  std::vector<double> b_j;
  RealField rho_s;
  RealField rho_n;
  ThermoState thermo;
  double N = 0.0;
  ScfMode mode = ScfMode::SelfConsistent;
  std::optional<double> epsilon;

  double zeta = 0.0;
  /// E = mu - xi^2 zeta / 2 and E_j = mu_j - xi^2 zeta / 2.
  double energy_condensate = 0.0;
  std::vector<double> energy_excited;
  double energy = 0.0;
  double delta_max = 0.0;

  double residual_condensate = 0.0;
  double residual_excited = 0.0;
  double b_consistency = 0.0;
  double max_orthogonality = 0.0;
  int iterations = 0;
  std::vector<ConvergenceRecord> history;
  std::vector<std::string> warnings;
};

/// zeta = N^{-1} int g Phi^4.
double compute_zeta(const RealField& g, const RealField& phi, double N);

/// E_total = N xi E + sum n_j E_j - 2 xi int g Phi^2 rho_n - int g rho_n^2.
double total_energy(const ScfSolution& s);

/// Self-consistent stationary solve; uses the oscillatory coupling when
/// `config.epsilon` is set.
ScfSolution scf_solve(const ScfConfig& config);

/// scf_solve with g = g0 [1 + A(x/eps)]; rejects grids with h > eps/16.
ScfSolution full_epsilon_solve(const ScfConfig& config, double epsilon);

/// max_x sqrt(rho a^3) with a = g / (8 pi).
double diluteness(const RealField& g, const RealField& rho_s, const RealField& rho_n);

}  // namespace becmf
