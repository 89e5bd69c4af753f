#pragma once

#include <memory>
#include <vector>

#include "becmf/scf.hpp"

namespace becmf {

/// Condensate and excitation wave functions at time t with the fixed
/// occupations they evolve under.
struct DynState {
  double t = 0.0;
  ComplexField phi;
  std::vector<ComplexField> phi_j;
  double theta = 0.0;
  double xi = 1.0;
  std::vector<double> n;
  /// Cached at the last step: N^{-1} int g |Phi|^4 and the coupling coefficients.
  double zeta = 0.0;
  std::vector<Complex> b_j;
};

struct Observables {
  double t = 0.0;
  double norm_sq = 0.0;
  double max_orthogonality = 0.0;
  double zeta = 0.0;
  double theta = 0.0;
  std::vector<double> norms_j;
};

/// Stepper for the coupled condensate / excitation equations on a fixed grid.
/// Occupations and xi stay frozen during the evolution.
class Propagator {
 public:
  Propagator(const Grid& grid, RealField potential, RealField coupling, double N, double dt);
  ~Propagator();
  Propagator(Propagator&&) noexcept;
  Propagator& operator=(Propagator&&) noexcept;

  double dt() const noexcept { return dt_; }
  const Grid& grid() const noexcept { return grid_; }

  /// Strang step: half potential phase, half rank-one term, Crank-Nicolson
  /// kinetic step, half rank-one, half potential. Throws Divergence if any
  /// squared norm moves by more than `drift_limit` (relative) in one step.
  void step(DynState& s, double drift_limit = 1e-6) const;

  /// Refreshes the cached zeta and b_j of `s`.
  void refresh(DynState& s) const;

  /// Right-hand side of the global phase equation at the current fields.
  double theta_rate(const DynState& s) const;

  Observables observe(const DynState& s) const;

 private:
  void potential_phase(DynState& s, double tau) const;
  void rank_one(DynState& s, double tau) const;

  Grid grid_;
  RealField potential_;
  RealField coupling_;
  double N_ = 0.0;
  double dt_ = 0.0;
  struct Kinetic;
  std::unique_ptr<Kinetic> kinetic_;
};

/// Fields at t = 0 from a converged stationary solution; stationary phase
/// factors are 1 there.
DynState initial_state(const ScfSolution& s);

struct EvolveOptions {
  double t_final = 1.0;
  double dt = 1e-3;
  int observe_every = 1;
  double drift_limit = 1e-6;
};

struct Trajectory {
  std::vector<Observables> rows;
  DynState final_state;
  int steps = 0;
  /// Largest sup-norm change of rho_s and rho_n relative to t = 0.
  double max_density_change = 0.0;
  /// max over rows of |norm_sq - norm_sq(0)| / norm_sq(0) and
  /// max_j |norms_j^2 - norms_j(0)^2|.
  double norm_drift = 0.0;
  double norm_drift_excited = 0.0;
  /// Largest |<Phi, phi_j>| / sqrt(N) seen.
  double orthogonality_drift = 0.0;
};

/// Steps `round(t_final / dt)` times, recording observables at t = 0, every
/// `observe_every` steps and at the end.
Trajectory evolve(const Propagator& prop, DynState state, const EvolveOptions& options);

/// Convenience: propagator and initial state built from a stationary solution.
Trajectory evolve(const ScfSolution& s, const EvolveOptions& options);

}  // namespace becmf
