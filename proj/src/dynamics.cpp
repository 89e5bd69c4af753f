#include "becmf/dynamics.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <string>

namespace becmf {

namespace {

using CSparse = Eigen::SparseMatrix<Complex>;

Vec condensate_density(const DynState& s) { return s.xi * s.phi.values().cwiseAbs2(); }

Vec normal_density(const DynState& s, Eigen::Index n) {
  Vec r = Vec::Zero(n);
  for (std::size_t j = 0; j < s.phi_j.size(); ++j) r += s.n[j] * s.phi_j[j].values().cwiseAbs2();
  return r;
}

}  // namespace

struct Propagator::Kinetic {
  CSparse plus;   // I + i dt/2 (-Delta_h)
  CSparse minus;  // I - i dt/2 (-Delta_h)
  Eigen::SparseLU<CSparse> lu;
};

Propagator::Propagator(const Grid& grid, RealField potential, RealField coupling, double N, double dt)
    : grid_(grid), potential_(std::move(potential)), coupling_(std::move(coupling)), N_(N), dt_(dt),
      kinetic_(std::make_unique<Kinetic>()) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidArgument, "time step must be positive");
  if (!(N > 0.0)) throw Error(ErrorKind::InvalidArgument, "particle number must be positive");
  require_same_grid(grid_, potential_.grid());
  require_same_grid(grid_, coupling_.grid());
  const CSparse lap = negative_laplacian(grid_).cast<Complex>();
  CSparse id(lap.rows(), lap.cols());
  id.setIdentity();
  const Complex half(0.0, 0.5 * dt);
  kinetic_->plus = id + half * lap;
  kinetic_->minus = id - half * lap;
  kinetic_->plus.makeCompressed();
  kinetic_->lu.compute(kinetic_->plus);
  if (kinetic_->lu.info() != Eigen::Success) throw Error(ErrorKind::Degeneracy, "Crank-Nicolson factorisation failed");
}

Propagator::~Propagator() = default;
Propagator::Propagator(Propagator&&) noexcept = default;
Propagator& Propagator::operator=(Propagator&&) noexcept = default;

void Propagator::refresh(DynState& s) const {
  const Vec& g = coupling_.values();
  const CVec& phi = s.phi.values();
  const Vec a2 = phi.cwiseAbs2();
  s.zeta = grid_.cell_volume() * g.dot(a2.cwiseAbs2()) / N_;
  const CVec w = (s.xi * g.cwiseProduct(a2)).cast<Complex>().cwiseProduct(phi);
  s.b_j.resize(s.phi_j.size());
  for (std::size_t j = 0; j < s.phi_j.size(); ++j) s.b_j[j] = dot(grid_, w, s.phi_j[j].values()) / N_;
}

double Propagator::theta_rate(const DynState& s) const {
  const Vec& g = coupling_.values();
  const Vec rn = normal_density(s, static_cast<Eigen::Index>(grid_.size()));
  const Vec a2 = s.phi.values().cwiseAbs2();
  return -2.0 * s.xi * dot(grid_, g, a2.cwiseProduct(rn)) - dot(grid_, g, rn.cwiseAbs2());
}

// |Phi| and |phi_j| are invariant under the pointwise phase, so the densities
// evaluated at entry hold for the whole substep.
void Propagator::potential_phase(DynState& s, double tau) const {
  const Eigen::Index n = static_cast<Eigen::Index>(grid_.size());
  const Vec& g = coupling_.values();
  const Vec& V = potential_.values();
  const Vec rs = condensate_density(s);
  const Vec rn = normal_density(s, n);
  const double zeta = grid_.cell_volume() * g.dot(s.phi.values().cwiseAbs2().cwiseAbs2()) / N_;
  const double shift = 0.5 * s.xi * s.xi * zeta;
  auto rotate = [&](CVec& u, const Vec& pot) {
    for (Eigen::Index i = 0; i < n; ++i) u[i] *= std::polar(1.0, -tau * (pot[i] - shift));
  };
  rotate(s.phi.values(), V.array() + g.array() * (rs.array() + 2.0 * rn.array()));
  const Vec pj = V.array() + 2.0 * g.array() * (rs.array() + rn.array());
  for (auto& f : s.phi_j) rotate(f.values(), pj);
}

// i d/dt phi_j = -b_j(phi_j) Phi with Phi fixed: explicit midpoint, b_j taken
// at the half step.
void Propagator::rank_one(DynState& s, double tau) const {
  if (s.phi_j.empty()) return;
  const Vec& g = coupling_.values();
  const CVec& phi = s.phi.values();
  const CVec w = (s.xi * g.cwiseProduct(phi.cwiseAbs2())).cast<Complex>().cwiseProduct(phi);
  const Complex i1(0.0, 1.0);
  for (auto& f : s.phi_j) {
    CVec& u = f.values();
    const Complex b0 = dot(grid_, w, u) / N_;
    const CVec mid = u + (0.5 * tau) * i1 * b0 * phi;
    const Complex bh = dot(grid_, w, mid) / N_;
    u += tau * i1 * bh * phi;
  }
}

void Propagator::step(DynState& s, double drift_limit) const {
  const double n0 = norm_sq(s.phi);
  std::vector<double> nj0;
  for (const auto& f : s.phi_j) nj0.push_back(norm_sq(f));
  const double rate0 = theta_rate(s);

  const double h = 0.5 * dt_;
  potential_phase(s, h);
  rank_one(s, h);
  s.phi.values() = kinetic_->lu.solve(kinetic_->minus * s.phi.values());
  for (auto& f : s.phi_j) f.values() = kinetic_->lu.solve(kinetic_->minus * f.values());
  rank_one(s, h);
  potential_phase(s, h);

  s.theta += 0.5 * dt_ * (rate0 + theta_rate(s));
  s.t += dt_;
  refresh(s);

  const double n1 = norm_sq(s.phi);
  double drift = std::abs(n1 - n0) / n0;
  for (std::size_t j = 0; j < s.phi_j.size(); ++j) {
    drift = std::max(drift, std::abs(norm_sq(s.phi_j[j]) - nj0[j]) / std::max(nj0[j], 1e-300));
  }
  if (!(drift <= drift_limit)) {
    throw Error(ErrorKind::Divergence, "norm drift " + std::to_string(drift) + " in one step at t = " +
                                           std::to_string(s.t) + " exceeds " + std::to_string(drift_limit) +
                                           "; reduce dt");
  }
}

Observables Propagator::observe(const DynState& s) const {
  Observables o;
  o.t = s.t;
  o.norm_sq = norm_sq(s.phi);
  for (const auto& f : s.phi_j) {
    o.max_orthogonality = std::max(o.max_orthogonality, std::abs(inner(s.phi, f)));
    o.norms_j.push_back(std::sqrt(norm_sq(f)));
  }
  o.zeta = s.zeta;
  o.theta = s.theta;
  return o;
}

DynState initial_state(const ScfSolution& s) {
  DynState d;
  const Grid& grid = s.phi.grid();
  d.phi = ComplexField(grid, s.phi.values().cast<Complex>());
  for (const auto& f : s.phi_j) d.phi_j.emplace_back(grid, f.values().cast<Complex>());
  d.xi = s.thermo.xi;
  d.n = s.thermo.n;
  if (d.n.size() != d.phi_j.size()) d.n.assign(d.phi_j.size(), 0.0);
  return d;
}

Trajectory evolve(const Propagator& prop, DynState state, const EvolveOptions& opt) {
  if (!(opt.t_final >= 0.0) || !std::isfinite(opt.t_final)) throw Error(ErrorKind::InvalidArgument, "t_final must be nonnegative");
  if (std::abs(opt.dt - prop.dt()) > 1e-15 * prop.dt()) throw Error(ErrorKind::InvalidArgument, "propagator built for a different dt");
  if (opt.observe_every < 1) throw Error(ErrorKind::InvalidArgument, "observe_every must be at least 1");
  const double ratio = opt.t_final / opt.dt;
  const long steps = std::lround(ratio);
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio)) {
    throw Error(ErrorKind::InvalidArgument, "t_final must be an integer multiple of dt");
  }
  if (state.n.size() != state.phi_j.size()) throw Error(ErrorKind::InvalidArgument, "one occupation per excitation required");

  const Eigen::Index n = static_cast<Eigen::Index>(prop.grid().size());
  const double N = norm_sq(state.phi);
  const Vec rs0 = condensate_density(state);
  const Vec rn0 = normal_density(state, n);
  prop.refresh(state);

  Trajectory tr;
  const Observables first = prop.observe(state);
  tr.rows.push_back(first);
  auto track = [&](const DynState& s, const Observables& o) {
    const double drs = (condensate_density(s) - rs0).cwiseAbs().maxCoeff();
    const double drn = n ? (normal_density(s, n) - rn0).cwiseAbs().maxCoeff() : 0.0;
    tr.max_density_change = std::max({tr.max_density_change, drs, drn});
    tr.norm_drift = std::max(tr.norm_drift, std::abs(o.norm_sq - first.norm_sq) / first.norm_sq);
    for (std::size_t j = 0; j < o.norms_j.size(); ++j) {
      const double d = std::abs(o.norms_j[j] * o.norms_j[j] - first.norms_j[j] * first.norms_j[j]);
      tr.norm_drift_excited = std::max(tr.norm_drift_excited, d);
    }
    tr.orthogonality_drift = std::max(tr.orthogonality_drift, o.max_orthogonality / std::sqrt(N));
  };
  track(state, first);
  const double t0 = state.t;
  for (long k = 1; k <= steps; ++k) {
    prop.step(state, opt.drift_limit);
    state.t = t0 + static_cast<double>(k) * opt.dt;
    const Observables o = prop.observe(state);
    track(state, o);
    if (k % opt.observe_every == 0 || k == steps) tr.rows.push_back(o);
  }
  tr.steps = static_cast<int>(steps);
  tr.final_state = std::move(state);
  return tr;
}

Trajectory evolve(const ScfSolution& s, const EvolveOptions& options) {
  const Propagator prop(s.phi.grid(), s.potential, s.coupling, s.N, options.dt);
  return evolve(prop, initial_state(s), options);
}

}  // namespace becmf
