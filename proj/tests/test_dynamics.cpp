#include <doctest.h>

#include <cmath>

#include "becmf/dynamics.hpp"
#include "oracles.hpp"

using namespace becmf;

namespace {

struct Harmonic {
  Grid grid = build_grid(1, 8.0, 256);
  RealField V = sample(grid, [](const Point& p) { return p[0] * p[0]; });
  RealField zero = RealField(grid);
  EigenResult modes = eigensolve_lowest(build_hamiltonian(grid, V), 2);
};

DynState ground(const Harmonic& h, double N) {
  DynState s;
  s.phi = ComplexField(h.grid, (std::sqrt(N) * h.modes.vectors[0].values()).cast<Complex>());
  s.phi_j.emplace_back(h.grid, h.modes.vectors[1].values().cast<Complex>());
  s.n = {0.0};
  return s;
}

// Phase of <u0, Phi(t)> / N after one unit of time, minus the exact -mu t.
double phase_error(const Harmonic& h, double dt) {
  const double N = 4.0;
  const Propagator prop(h.grid, h.V, h.zero, N, dt);
  EvolveOptions o;
  o.t_final = 1.0;
  o.dt = dt;
  o.observe_every = 1000000;
  const Trajectory tr = evolve(prop, ground(h, N), o);
  const Complex c = inner(ComplexField(h.grid, (std::sqrt(N) * h.modes.vectors[0].values()).cast<Complex>()),
                          tr.final_state.phi) / N;
  return std::abs(std::arg(c) + h.modes.values[0]);
}

}  // namespace

TEST_CASE("linear ground state only rotates") {
  const Harmonic h;
  const double e1 = phase_error(h, 0.02);
  const double e2 = phase_error(h, 0.01);
  const double e3 = phase_error(h, 0.005);
  CHECK(e3 < 1e-4);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.3 / 4.0));
  CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.3 / 4.0));

  const Propagator prop(h.grid, h.V, h.zero, 4.0, 0.01);
  EvolveOptions o;
  o.t_final = 0.5;
  o.dt = 0.01;
  o.observe_every = 5;
  const Trajectory tr = evolve(prop, ground(h, 4.0), o);
  CHECK(tr.rows.size() == 11);
  for (const auto& r : tr.rows) {
    CHECK(std::abs(r.norm_sq - 4.0) < 1e-10);
    CHECK(std::abs(r.norms_j[0] - 1.0) < 1e-10);
    CHECK(r.theta == 0.0);
  }
  // the split propagator leaves the discrete ground state stationary only up to O(dt^2)
  CHECK(tr.max_density_change < 4.0 * 0.01 * 0.01);
}

TEST_CASE("zero steps return the initial observables") {
  const Harmonic h;
  const Propagator prop(h.grid, h.V, h.zero, 4.0, 0.01);
  EvolveOptions o;
  o.t_final = 0.0;
  o.dt = 0.01;
  const Trajectory tr = evolve(prop, ground(h, 4.0), o);
  CHECK(tr.steps == 0);
  REQUIRE(tr.rows.size() == 1);
  CHECK(tr.rows[0].t == 0.0);
  CHECK(tr.rows[0].norm_sq == doctest::Approx(4.0).epsilon(1e-14));

  o.t_final = 0.015;
  CHECK_THROWS_AS(evolve(prop, ground(h, 4.0), o), Error);
  o.t_final = 0.02;
  o.dt = 0.02;
  CHECK_THROWS_AS(evolve(prop, ground(h, 4.0), o), Error);
  CHECK_THROWS_AS(Propagator(h.grid, h.V, h.zero, 4.0, 0.0), Error);
}

TEST_CASE("stationary state with a thermal cloud") {
  ScfConfig c;
  c.micro = Microstructure::cosine(0.1, 0.5);
  c.thermo = {1.0, 100.0, 8};
  const ScfSolution s = scf_solve(c);
  EvolveOptions o;
  o.t_final = 0.2;
  o.dt = 1e-3;
  o.observe_every = 50;
  const Trajectory tr = evolve(s, o);
  CHECK(tr.max_density_change / s.N < 1e-6);
  CHECK(tr.norm_drift < 1e-10);
  CHECK(tr.orthogonality_drift < 1e-6);

  // static densities: theta grows linearly at the stationary rate
  const Propagator prop(s.phi.grid(), s.potential, s.coupling, s.N, o.dt);
  const double rate = prop.theta_rate(initial_state(s));
  CHECK(rate < 0.0);
  CHECK(tr.rows.back().theta == doctest::Approx(rate * 0.2).epsilon(1e-6));
  CHECK(tr.rows.back().t == 0.2);
  CHECK(tr.rows.back().zeta == doctest::Approx(s.zeta).epsilon(1e-6));
}

TEST_CASE("empty cloud keeps theta fixed") {
  ScfConfig c;
  c.micro = Microstructure::cosine(0.1, 0.5);
  c.thermo = {1e3, 100.0, 2};
  const ScfSolution s = scf_solve(c);
  EvolveOptions o;
  o.t_final = 0.05;
  o.dt = 1e-3;
  DynState d = initial_state(s);
  d.theta = 0.75;
  const Propagator prop(s.phi.grid(), s.potential, s.coupling, s.N, o.dt);
  const Trajectory tr = evolve(prop, d, o);
  for (const auto& r : tr.rows) CHECK(r.theta == 0.75);
}

TEST_CASE("self-convergence away from equilibrium") {
  ScfConfig c;
  c.micro = Microstructure::cosine(0.1, 0.5);
  c.thermo = {1.0, 100.0, 4};
  const ScfSolution s = scf_solve(c);
  // kick: evolve in a tighter trap than the one the state was solved in
  const RealField tight(s.phi.grid(), 1.2 * s.potential.values());
  auto run = [&](double dt) {
    const Propagator prop(s.phi.grid(), tight, s.coupling, s.N, dt);
    EvolveOptions o;
    o.t_final = 0.2;
    o.dt = dt;
    o.observe_every = 1000;
    return evolve(prop, initial_state(s), o);
  };
  const Trajectory a = run(0.01), b = run(0.005), d = run(0.0025);
  const double e1 = (a.final_state.phi.values() - b.final_state.phi.values()).cwiseAbs().maxCoeff();
  const double e2 = (b.final_state.phi.values() - d.final_state.phi.values()).cwiseAbs().maxCoeff();
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.3 / 4.0));
  const double t1 = std::abs(a.rows.back().theta - b.rows.back().theta);
  const double t2 = std::abs(b.rows.back().theta - d.rows.back().theta);
  CHECK(t1 / t2 == doctest::Approx(4.0).epsilon(0.3 / 4.0));
  CHECK(d.max_density_change > 1e-3);
}
