#include "becmf/scf.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace becmf {

double TrapSpec::coefficient(int axis) const {
  if (coefficients.empty()) return 0.0;
  if (coefficients.size() == 1) return coefficients[0];
  return coefficients.at(static_cast<std::size_t>(axis));
}

RealField sample_trap(const Grid& grid, const TrapSpec& trap) {
  if (trap.coefficients.size() > 1 && static_cast<int>(trap.coefficients.size()) != grid.dim()) {
    throw Error(ErrorKind::InvalidArgument, "trap needs one coefficient or one per axis");
  }
  for (double c : trap.coefficients) {
    if (!(c >= 0.0)) throw Error(ErrorKind::InvalidArgument, "trap coefficients must be nonnegative");
  }
  return sample(grid, [&](const Point& x) {
    double v = 0.0;
    for (int a = 0; a < grid.dim(); ++a) v += trap.coefficient(a) * x[a] * x[a];
    return v;
  });
}

void ScfConfig::validate() const {
  thermo.validate();
  if (!(scf.mixing > 0.0 && scf.mixing <= 1.0)) throw Error(ErrorKind::InvalidArgument, "mixing must lie in (0, 1]");
  if (!(scf.tol_density > 0.0) || !(scf.tol_eigen > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "tolerances must be positive");
  }
  if (scf.max_outer < 1) throw Error(ErrorKind::InvalidArgument, "max_outer must be at least 1");
  if (micro.dim() != grid.dim) throw Error(ErrorKind::InvalidArgument, "microstructure and grid dimensions differ");
  if (epsilon && !(*epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  if (mode == ScfMode::Frozen) {
    if (!(frozen_xi > 0.0 && frozen_xi <= 1.0)) throw Error(ErrorKind::InvalidArgument, "frozen xi must lie in (0, 1]");
    if (static_cast<int>(frozen_occupations.size()) != thermo.J) {
      throw Error(ErrorKind::InvalidArgument, "frozen occupation list must have J entries");
    }
    for (double n : frozen_occupations) {
      if (!(n >= 0.0)) throw Error(ErrorKind::InvalidArgument, "frozen occupations must be nonnegative");
    }
  }
}

LinearOperator StationaryProblem::hamiltonian(const Vec& extra) const {
  SparseMatrix m = base;
  for (Eigen::Index i = 0; i < extra.size(); ++i) m.coeffRef(i, i) += extra[i];
  return LinearOperator(grid, std::move(m));
}

StationaryProblem make_problem(const Grid& grid, const TrapSpec& trap, RealField coupling) {
  require_same_grid(grid, coupling.grid());
  StationaryProblem p;
  p.grid = grid;
  p.potential = sample_trap(grid, trap);
  p.coupling = std::move(coupling);
  p.base = negative_laplacian(grid);
  for (Eigen::Index i = 0; i < p.base.rows(); ++i) p.base.coeffRef(i, i) += p.potential.values()[i];
  return p;
}

namespace {

double grid_norm(const Grid& grid, const Vec& v) { return std::sqrt(grid.cell_volume()) * v.norm(); }

void normalize_to(const Grid& grid, Vec& v, double N) { v *= std::sqrt(N / dot(grid, v, v)); }

// Flips v so that its sum is positive (ground states are nodeless).
void make_positive(Vec& v) {
  if (v.sum() < 0.0) v = -v;
}

struct CondensateEval {
  double mu = 0.0;
  Vec residual;
};

CondensateEval eval_condensate(const StationaryProblem& p, const Vec& phi, const Vec& rho_n, double xi, double N) {
  const Vec& g = p.coupling.values();
  Vec hphi = p.base * phi;
  hphi.array() += (g.array() * (xi * phi.array().square() + 2.0 * rho_n.array())) * phi.array();
  CondensateEval e;
  e.mu = dot(p.grid, phi, hphi) / N;
  e.residual = hphi - e.mu * phi;
  return e;
}

}  // namespace

double condensate_energy(const StationaryProblem& p, const Vec& phi, const Vec& rho_n, double xi) {
  const Vec& g = p.coupling.values();
  const Vec& v = p.potential.values();
  const double kin = kinetic_energy(p.grid, phi);
  const Vec sq = phi.array().square();
  const double pot = dot(p.grid, (v.array() + 2.0 * g.array() * rho_n.array()).matrix(), sq);
  const double quartic = 0.5 * xi * dot(p.grid, g, sq.array().square().matrix());
  return kin + pot + quartic;
}

CondensateResult solve_condensate(const StationaryProblem& p, const RealField& rho_n_field, double xi, double N,
                                  const CondensateOptions& opt, const RealField* initial) {
  require_same_grid(p.grid, rho_n_field.grid());
  if (!(xi > 0.0 && xi <= 1.0)) throw Error(ErrorKind::InvalidArgument, "condensate fraction xi must lie in (0, 1]");
  if (!(N > 0.0)) throw Error(ErrorKind::InvalidArgument, "particle number must be positive");
  if (p.coupling.values().minCoeff() < 0.0) throw Error(ErrorKind::InvalidArgument, "coupling must be nonnegative");
  const Vec& rho_n = rho_n_field.values();
  if (rho_n.minCoeff() < 0.0) throw Error(ErrorKind::InvalidArgument, "normal density must be nonnegative");
  const Grid& grid = p.grid;
  const Vec& g = p.coupling.values();
  const Eigen::Index n = static_cast<Eigen::Index>(grid.size());

  Vec phi;
  if (initial) {
    require_same_grid(grid, initial->grid());
    phi = initial->values();
  } else {
    const Vec lin = 2.0 * g.array() * rho_n.array();
    EigenOptions eo;
    eo.rel_tol = 1e-6;
    phi = eigensolve_lowest(p.hamiltonian(lin), 1, eo).vectors.front().values();
  }
  make_positive(phi);
  normalize_to(grid, phi, N);

  CondensateResult out;
  double energy = condensate_energy(p, phi, rho_n, xi);
  double tau = opt.initial_step;
  int failures = 0;
  SparseMatrix identity(n, n);
  identity.setIdentity();
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;

  for (int step = 0; step < opt.max_flow_steps; ++step) {
    const auto ev = eval_condensate(p, phi, rho_n, xi, N);
    if (grid_norm(grid, ev.residual) / std::sqrt(N) < opt.newton_switch) break;
    if (grid_norm(grid, ev.residual) <= opt.tol) break;
    // Backward Euler on the linearised flow: (I + tau H[phi_k]) phi = phi_k
    SparseMatrix m = p.base;
    for (Eigen::Index i = 0; i < n; ++i) m.coeffRef(i, i) += g[i] * (xi * phi[i] * phi[i] + 2.0 * rho_n[i]);
    m = identity + tau * m;
    ldlt.compute(m);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::Divergence, "gradient-flow factorisation failed");
    Vec next = ldlt.solve(phi);
    normalize_to(grid, next, N);
    const double e_next = condensate_energy(p, next, rho_n, xi);
    ++out.flow_steps;
    if (e_next <= energy + 1e-13 * std::abs(energy)) {
      phi = std::move(next);
      energy = e_next;
      tau = std::min(tau * 1.5, 1e4);
      failures = 0;
    } else {
      tau *= 0.5;
      if (++failures >= 5) {
        throw Error(ErrorKind::Divergence, "gradient flow increased the energy in 5 consecutive steps");
      }
    }
  }

  // Newton polish on (H[phi] - mu) phi = 0, h |phi|^2 = N.
  double prev = std::numeric_limits<double>::infinity();
  int stalls = 0;
  for (int it = 0;; ++it) {
    const auto ev = eval_condensate(p, phi, rho_n, xi, N);
    const double res = grid_norm(grid, ev.residual);
    out.mu = ev.mu;
    out.residual = res;
    if (res <= opt.tol) break;
    if (res > 0.5 * prev) ++stalls;
    if (stalls >= 3 || it >= opt.max_newton_steps) {
      std::ostringstream msg;
      msg << "condensate solve stalled; residual attained " << res << " against target " << opt.tol;
      throw Error(ErrorKind::Convergence, msg.str());
    }
    prev = std::min(prev, res);
    SparseMatrix jac = p.base;
    for (Eigen::Index i = 0; i < n; ++i) {
      jac.coeffRef(i, i) += g[i] * (3.0 * xi * phi[i] * phi[i] + 2.0 * rho_n[i]) - ev.mu;
    }
    const Eigen::MatrixXd border = -phi;
    BorderedSolver kkt(jac, border);
    Vec c(1);
    c[0] = -(N - dot(grid, phi, phi)) / (2.0 * grid.cell_volume());
    const auto [dphi, dmu] = kkt.solve(-ev.residual, c);
    phi += dphi;
    normalize_to(grid, phi, N);
    ++out.newton_steps;
  }
  make_positive(phi);
  out.energy = condensate_energy(p, phi, rho_n, xi);
  out.phi = RealField(grid, std::move(phi));
  return out;
}

ExcitedResult solve_excited(const StationaryProblem& p, const RealField& phi, const RealField& rho_s,
                            const RealField& rho_n, double xi, double N, int J, double tol_eigen,
                            const std::vector<Vec>& initial) {
  require_same_grid(p.grid, phi.grid());
  require_same_grid(p.grid, rho_s.grid());
  require_same_grid(p.grid, rho_n.grid());
  const Grid& grid = p.grid;
  const Vec& g = p.coupling.values();
  const Vec extra = 2.0 * g.array() * (rho_s.values().array() + rho_n.values().array());
  const LinearOperator op = p.hamiltonian(extra);

  EigenOptions eo;
  eo.abs_tol = 0.1 * tol_eigen;
  EigenResult er = deflated_eigensolve(op, phi, J, eo, initial);

  ExcitedResult out;
  out.degenerate_pairs = er.degenerate_pairs;
  out.mu_j = er.values;
  const Vec cube = xi * g.array() * phi.values().array().cube();
  for (int j = 0; j < J; ++j) {
    const Vec& v = er.vectors[static_cast<std::size_t>(j)].values();
    const double b = dot(grid, cube, v) / N;
    const Vec hv = op.apply(v);
    const Vec r = hv - b * phi.values() - out.mu_j[static_cast<std::size_t>(j)] * v;
    out.b_j.push_back(b);
    out.residual = std::max(out.residual, grid_norm(grid, r));
    out.b_consistency = std::max(out.b_consistency, std::abs(N * b - dot(grid, phi.values(), hv)));
  }
  out.phi_j = std::move(er.vectors);
  return out;
}

double compute_zeta(const RealField& g, const RealField& phi, double N) {
  require_same_grid(g.grid(), phi.grid());
  return dot(g.grid(), g.values(), phi.values().array().pow(4).matrix()) / N;
}

double diluteness(const RealField& g, const RealField& rho_s, const RealField& rho_n) {
  const Eigen::ArrayXd a = g.values().array() / (8.0 * std::numbers::pi);
  const Eigen::ArrayXd rho = rho_s.values().array() + rho_n.values().array();
  return (rho.max(0.0) * a.cube()).sqrt().maxCoeff();
}

double total_energy(const ScfSolution& s) {
  const Grid& grid = s.grid;
  const double xi = s.thermo.xi;
  const Vec& g = s.coupling.values();
  const double E = s.mu - 0.5 * xi * xi * s.zeta;
  double total = s.N * xi * E;
  for (std::size_t j = 0; j < s.mu_j.size(); ++j) total += s.thermo.n[j] * (s.mu_j[j] - 0.5 * xi * xi * s.zeta);
  const Vec phi2 = s.phi.values().array().square();
  const Vec& rn = s.rho_n.values();
  total -= 2.0 * xi * dot(grid, (g.array() * phi2.array()).matrix(), rn);
  total -= dot(grid, g, rn.array().square().matrix());
  return total;
}

namespace {

constexpr double kOccupationCut = 1e-8;

Vec normal_density(const std::vector<RealField>& phi_j, const std::vector<double>& n, std::size_t size, int& dropped) {
  Vec rho = Vec::Zero(static_cast<Eigen::Index>(size));
  dropped = 0;
  for (std::size_t j = 0; j < phi_j.size(); ++j) {
    if (n[j] < kOccupationCut) {
      ++dropped;
      continue;
    }
    rho.array() += n[j] * phi_j[j].values().array().square();
  }
  return rho;
}

std::string history_tail(const std::vector<ConvergenceRecord>& h) {
  std::ostringstream s;
  s << "density change history (last " << std::min<std::size_t>(h.size(), 8) << "):";
  for (std::size_t i = h.size() > 8 ? h.size() - 8 : 0; i < h.size(); ++i) s << ' ' << h[i].density_change;
  return s.str();
}

}  // namespace

ScfSolution scf_solve(const ScfConfig& config) {
  config.validate();
  const Grid grid = config.grid.build();
  if (config.epsilon && !config.micro.is_zero() && grid.spacing() > *config.epsilon / 16.0 * (1.0 + 1e-12)) {
    throw Error(ErrorKind::UnderResolution, "grid spacing exceeds eps/16; the fast scale is not resolved");
  }
  const StationaryProblem p = make_problem(grid, config.trap, sample_coupling(grid, config.micro, config.epsilon));
  const double N = config.thermo.N;
  const int J = config.thermo.J;
  const double tol = config.scf.tol_eigen;
  const double alpha = config.scf.mixing;
  const bool frozen = config.mode == ScfMode::Frozen;
  const Vec& g = p.coupling.values();

  ScfSolution sol;
  sol.grid = grid;
  sol.potential = p.potential;
  sol.coupling = p.coupling;
  sol.N = N;
  sol.mode = config.mode;
  sol.epsilon = config.epsilon;

  double xi = frozen ? config.frozen_xi : 1.0;
  RealField rho_n(grid);
  std::optional<RealField> phi_prev;
  std::vector<Vec> excited_prev;
  CondensateOptions copt;
  copt.tol = 0.01 * tol * std::sqrt(N);
  int last_dropped = -1;
  bool warned_degenerate = false;

  for (int it = 1; it <= config.scf.max_outer; ++it) {
    const auto cond = solve_condensate(p, rho_n, xi, N, copt, phi_prev ? &*phi_prev : nullptr);
    const RealField rho_s_used(grid, xi * cond.phi.values().array().square().matrix());
    auto exc = solve_excited(p, cond.phi, rho_s_used, rho_n, xi, N, J, tol, excited_prev);
    if (exc.degenerate() && !warned_degenerate) {
      sol.warnings.push_back("near-degenerate excited eigenvalues detected");
      warned_degenerate = true;
    }

    ThermoState state;
    if (frozen) {
      state.xi = config.frozen_xi;
      state.log_z = std::numeric_limits<double>::quiet_NaN();
      state.n = config.frozen_occupations;
      state.mu = cond.mu;
      state.mu_j = exc.mu_j;
    } else {
      state = solve_xi_z_order0(config.thermo, cond.mu, exc.mu_j);
    }

    int dropped = 0;
    const Vec rn_new = normal_density(exc.phi_j, state.n, grid.size(), dropped);
    if (dropped != last_dropped && dropped > 0) {
      sol.warnings.push_back(std::to_string(dropped) + " occupations below 1e-8 dropped from the normal density");
    }
    last_dropped = dropped;
    const Vec rs_new = state.xi * cond.phi.values().array().square();
    const double change = std::max((rn_new - rho_n.values()).cwiseAbs().maxCoeff(),
                                   (rs_new - rho_s_used.values()).cwiseAbs().maxCoeff());

    // Invariants evaluated with the updated densities.
    const RealField rs_field(grid, rs_new), rn_field(grid, rn_new);
    Vec hphi = p.base * cond.phi.values();
    hphi.array() += g.array() * (rs_new.array() + 2.0 * rn_new.array()) * cond.phi.values().array();
    const double res_c = grid_norm(grid, hphi - cond.mu * cond.phi.values());
    const Vec extra = 2.0 * g.array() * (rs_new.array() + rn_new.array());
    const LinearOperator hop = p.hamiltonian(extra);
    const Vec cube = state.xi * g.array() * cond.phi.values().array().cube();
    std::vector<double> b(static_cast<std::size_t>(J));
    double res_e = 0.0, b_cons = 0.0;
    for (int j = 0; j < J; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      const Vec& v = exc.phi_j[ju].values();
      b[ju] = dot(grid, cube, v) / N;
      const Vec hv = hop.apply(v);
      res_e = std::max(res_e, grid_norm(grid, hv - b[ju] * cond.phi.values() - exc.mu_j[ju] * v));
      b_cons = std::max(b_cons, std::abs(N * b[ju] - dot(grid, cond.phi.values(), hv)));
    }

    ConvergenceRecord rec;
    rec.iteration = it;
    rec.density_change = change;
    rec.xi = state.xi;
    rec.mu = cond.mu;
    rec.residual_condensate = res_c;
    rec.residual_excited = res_e;
    rec.b_consistency = b_cons;
    sol.history.push_back(rec);

    const bool converged = change < config.scf.tol_density && res_c <= tol * std::sqrt(N) && res_e <= tol &&
                           b_cons <= 10.0 * tol;
    if (converged) {
      sol.phi = cond.phi;
      sol.mu = cond.mu;
      sol.phi_j = std::move(exc.phi_j);
      sol.mu_j = exc.mu_j;
      sol.b_j = std::move(b);
      sol.rho_s = rs_field;
      sol.rho_n = rn_field;
      sol.thermo = std::move(state);
      sol.residual_condensate = res_c;
      sol.residual_excited = res_e;
      sol.b_consistency = b_cons;
      sol.iterations = it;
      break;
    }

    rho_n.values() = alpha * rn_new + (1.0 - alpha) * rho_n.values();
    if (!frozen) xi = alpha * state.xi + (1.0 - alpha) * xi;
    phi_prev = cond.phi;
    excited_prev.clear();
    for (const auto& f : exc.phi_j) excited_prev.push_back(f.values());
  }
  if (sol.iterations == 0) {
    throw Error(ErrorKind::Divergence,
                "self-consistent iteration did not converge in " + std::to_string(config.scf.max_outer) +
                    " outer iterations; " + history_tail(sol.history));
  }

  sol.zeta = compute_zeta(sol.coupling, sol.phi, N);
  const double shift = 0.5 * sol.thermo.xi * sol.thermo.xi * sol.zeta;
  sol.energy_condensate = sol.mu - shift;
  for (double m : sol.mu_j) sol.energy_excited.push_back(m - shift);
  sol.energy = total_energy(sol);
  sol.delta_max = diluteness(sol.coupling, sol.rho_s, sol.rho_n);
  if (sol.delta_max > 0.1) {
    sol.warnings.push_back("diluteness parameter max sqrt(rho a^3) exceeds 0.1");
  }
  for (std::size_t j = 0; j < sol.phi_j.size(); ++j) {
    sol.max_orthogonality = std::max(sol.max_orthogonality, std::abs(inner(sol.phi, sol.phi_j[j])) / std::sqrt(N));
    for (std::size_t k = 0; k < j; ++k) {
      sol.max_orthogonality = std::max(sol.max_orthogonality, std::abs(inner(sol.phi_j[j], sol.phi_j[k])));
    }
  }
  if (frozen) {
    double s = N * sol.thermo.xi;
    for (double n : sol.thermo.n) s += n;
    if (std::abs(s - N) > 1e-10 * N) sol.warnings.push_back("frozen occupations do not sum to N");
  }
  return sol;
}

ScfSolution full_epsilon_solve(const ScfConfig& config, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  ScfConfig c = config;
  c.epsilon = epsilon;
  const double h = 2.0 * c.grid.half_width / c.grid.points;
  if (h > epsilon / 16.0 * (1.0 + 1e-12)) {
    throw Error(ErrorKind::UnderResolution, "grid spacing exceeds eps/16; the fast scale is not resolved");
  }
  return scf_solve(c);
}

}  // namespace becmf
