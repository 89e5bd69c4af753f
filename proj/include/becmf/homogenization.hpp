#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "becmf/scf.hpp"

namespace becmf {

/// Sum of slow(x) * fast(x/eps) products plus a purely slow part.
struct TwoScaleTerm {
  RealField slow;
  std::function<double(const Point&)> fast;
};

struct TwoScaleField {
  std::vector<TwoScaleTerm> terms;
  RealField mean;

  /// Value at grid node `node` with cell variable y.
  double eval(std::size_t node, const Point& y) const;
  /// Samples the field at every node with y = x / eps.
  RealField at_scale(double epsilon) const;
  /// Fast part only (mean excluded) at scale eps.
  RealField fast_at_scale(double epsilon) const;
};

/// Order-k slow data. Slices for k = 1 are the zero branch.
struct ExpansionSlice {
  RealField f;
  std::vector<RealField> f_j;
  double mu = 0.0;
  std::vector<double> mu_j;
  double xi = 0.0;
  /// z^(k) and z^(k)/z^(0).
  double z = 0.0;
  double z_ratio = 0.0;
  std::vector<double> n_j;
  std::vector<double> b_j;
  RealField rho_s;
  RealField rho_n;
};

struct EnergyCoefficients {
  std::array<double, 3> zeta{0.0, 0.0, 0.0};
  std::array<double, 3> E{0.0, 0.0, 0.0};
  std::vector<std::array<double, 3>> E_j;
  std::array<double, 3> total{0.0, 0.0, 0.0};
};

struct Order1Report {
  double residual_condensate = 0.0;
  double residual_excited = 0.0;
  double xi = 0.0;
  double z_ratio = 0.0;
  double b_max = 0.0;
};

struct Order2Report {
  int sweeps = 0;
  double final_change = 0.0;
  double residual_condensate = 0.0;
  double residual_excited = 0.0;
  /// max_j |b_j^(2) from the closed form - b_j^(2) from the orthogonality multiplier|
  double b_crosscheck = 0.0;
  /// max_j |<f0, f_j2> + <f2, f_j0>|
  double orthogonality = 0.0;
};

struct ExpansionSolution {
  ThermoParams params;
  Microstructure micro = Microstructure::uniform(1.0);
  double g0 = 0.0;
  double N = 0.0;
  double h_minus_one = 0.0;
  /// Solution of the constant-g0 problem the slices expand around.
  ScfSolution base;

  std::array<ExpansionSlice, 3> slice;
  bool has_order2 = false;
  RealField rho_bar_s2;
  RealField rho_bar_n2;

  Order1Report order1;
  Order2Report order2;
  EnergyCoefficients energy;
};

struct Order2Options {
  double damping = 0.5;
  double tol = 1e-10;
  int max_sweeps = 200;
  double degeneracy_gap = 1e-9;
};

/// Order-0 slice: the constant-g0 self-consistent solve.
ExpansionSolution order0_solve(const ScfConfig& config);

/// Fills the first-order slice with the zero branch and records the
/// substituted residuals.
void order1_solve(ExpansionSolution& e);

/// Second-order slow fields and scalars by a damped fixed point over the
/// bordered order-2 systems.
void order2_solve(ExpansionSolution& e, const Order2Options& options = {});

/// Fast correctors. `state` -1 selects Phi, otherwise phi_j.
TwoScaleField corrector2(const ExpansionSolution& e, int state = -1);
TwoScaleField corrector3(const ExpansionSolution& e, int state = -1);

/// Two-scale approximation at scale eps, order in {0, 2, 3}.
RealField reconstruct(const ExpansionSolution& e, double epsilon, int order, int state = -1);

/// zeta, E, E_j and total energy coefficients up to order 2.
EnergyCoefficients energy_expansion(const ExpansionSolution& e);

/// Independently assembled residuals of both order-2 equations.
std::pair<double, double> order2_residuals(const ExpansionSolution& e);

/// Full pipeline: orders 0, 1, 2 and energy coefficients.
ExpansionSolution expand(const ScfConfig& config, int order = 2, const Order2Options& options = {});

struct SweepOptions {
  std::vector<double> epsilons;
  /// Grid points per period of the fast scale.
  int points_per_period = 16;
  /// Also solve every member on a grid twice as fine and extrapolate the
  /// energy remainder to h -> 0. The remainder on a single grid carries a
  /// fast-scale discretisation error of order eps^2 / points_per_period^2.
  bool extrapolate_energy = true;
  bool parallel = false;
};

struct SweepRow {
  double epsilon = 0.0;
  int points = 0;
  double err_order0 = 0.0;
  double err_order2 = 0.0;
  double err_order3 = 0.0;
  double energy_eps = 0.0;
  double energy_expansion = 0.0;
  /// energy_eps - energy_expansion on this grid.
  double remainder = 0.0;
  /// Same on the doubled grid and the Richardson combination; NaN when
  /// extrapolation is off.
  double remainder_fine = 0.0;
  double remainder_extrapolated = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double slope_order0 = 0.0;
  double slope_order2 = 0.0;
  double slope_order3 = 0.0;
  /// Uses the extrapolated remainder when available.
  double slope_energy_remainder = 0.0;
  double slope_energy_remainder_raw = 0.0;
};

/// Grid used for one sweep member: the base config's box with at least
/// `points_per_period` nodes per fast period.
GridSpec sweep_grid(const GridSpec& base, double epsilon, int points_per_period);

SweepRow sweep_member(const ScfConfig& config, double epsilon, int points_per_period);

SweepResult run_sweep(const ScfConfig& config, const SweepOptions& options);

/// Least-squares slope of log y against log x.
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace becmf
