#include <doctest.h>

#include <cmath>
#include <numbers>

#include "becmf/homogenization.hpp"

using namespace becmf;

namespace {

ScfConfig desk(double amplitude = 0.5) {
  ScfConfig c;
  c.micro = amplitude == 0.0 ? Microstructure::uniform(0.1) : Microstructure::cosine(0.1, amplitude);
  c.thermo = {1.0, 100.0, 8};
  return c;
}

// Computed once; every case below only reads it.
const ExpansionSolution& desk_expansion() {
  static const ExpansionSolution e = expand(desk(), 2);
  return e;
}

double sup(const RealField& f) { return f.values().cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("order 0 is the constant-coupling solve") {
  const ScfConfig c = desk();
  const ExpansionSolution& e = desk_expansion();
  const ScfSolution s = scf_solve(c);
  CHECK((e.slice[0].f.values() - s.phi.values()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(e.slice[0].mu == s.mu);
  CHECK(norm_sq(e.slice[0].f) == doctest::Approx(100.0).epsilon(1e-12));
  const Vec f0 = e.slice[0].f.values();
  for (std::size_t j = 0; j < e.slice[0].f_j.size(); ++j) {
    const Vec& fj = e.slice[0].f_j[j].values();
    const double b = e.slice[0].xi * 0.1 * dot(e.base.grid, f0.array().cube().matrix(), fj) / 100.0;
    CHECK(std::abs(b - e.slice[0].b_j[j]) < 1e-12);
    if (j % 2 == 0) CHECK(std::abs(e.slice[0].b_j[j]) < 1e-12);
    CHECK(std::abs(inner(e.slice[0].f, e.slice[0].f_j[j])) < 1e-10);
  }
}

TEST_CASE("first order is the zero branch") {
  const ExpansionSolution& e = desk_expansion();
  CHECK(e.order1.residual_condensate < 1e-10);
  CHECK(e.order1.residual_excited < 1e-10);
  CHECK(e.order1.xi == 0.0);
  CHECK(e.order1.z_ratio == 0.0);
  CHECK(e.order1.b_max == 0.0);
  CHECK(sup(e.slice[1].f) == 0.0);
  CHECK(e.slice[1].mu == 0.0);
}

TEST_CASE("second order") {
  const ExpansionSolution& e = desk_expansion();
  REQUIRE(e.has_order2);
  CHECK(e.h_minus_one == doctest::Approx(0.25 / (8 * std::numbers::pi * std::numbers::pi)).epsilon(1e-14));
  CHECK(e.order2.final_change < 1e-10);
  CHECK(e.order2.b_crosscheck < 1e-9);
  CHECK(e.order2.orthogonality < 1e-9);

  const auto [rc, rx] = order2_residuals(e);
  CHECK(rc < 1e-9);
  CHECK(rx < 1e-9);

  // with f1 = 0: <f0, f2> = 0, and the same for each excitation
  CHECK(std::abs(inner(e.slice[0].f, e.slice[2].f)) < 1e-9);
  for (std::size_t j = 0; j < e.slice[2].f_j.size(); ++j) {
    CHECK(std::abs(inner(e.slice[0].f_j[j], e.slice[2].f_j[j])) < 1e-9);
  }

  double sum = e.N * e.slice[2].xi;
  for (double n : e.slice[2].n_j) sum += n;
  CHECK(std::abs(sum) < 1e-10);

  const Vec& rs = e.slice[0].rho_s.values();
  const Vec& rn = e.slice[0].rho_n.values();
  const Vec bs = 2.0 * rs.cwiseProduct(rs + 2.0 * rn);
  const Vec bn = 4.0 * (rs + rn).cwiseProduct(rn);
  CHECK((e.rho_bar_s2.values() - bs).cwiseAbs().maxCoeff() < 1e-12 * bs.cwiseAbs().maxCoeff());
  CHECK((e.rho_bar_n2.values() - bn).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, bn.cwiseAbs().maxCoeff()));

  // the modulation lowers the chemical potential; compare with a direct solve
  CHECK(e.slice[2].mu < 0.0);
  ScfConfig fine = desk();
  fine.grid.points = 2048;
  const double eps = 0.125;
  const ScfSolution full = full_epsilon_solve(fine, eps);
  const ExpansionSolution ref = expand(fine, 2);
  CHECK((full.mu - ref.slice[0].mu) / (eps * eps) == doctest::Approx(ref.slice[2].mu).epsilon(0.03));
}

TEST_CASE("no microstructure, no second order") {
  const ExpansionSolution e = expand(desk(0.0), 2);
  CHECK(e.h_minus_one == 0.0);
  CHECK(sup(e.slice[2].f) == 0.0);
  CHECK(e.slice[2].mu == 0.0);
  CHECK(e.slice[2].xi == 0.0);
  for (double m : e.slice[2].mu_j) CHECK(m == 0.0);
  const TwoScaleField c2 = corrector2(e);
  CHECK(sup(c2.fast_at_scale(0.125)) == 0.0);
  CHECK(sup(corrector3(e).fast_at_scale(0.125)) == 0.0);

  ScfConfig free = desk();
  free.micro = Microstructure(0.0, 1, {{{1, 0, 0}, {0.25, 0.0}}});
  const ExpansionSolution z = expand(free, 2);
  CHECK(sup(z.slice[2].f) == 0.0);
  CHECK(z.slice[2].mu == 0.0);
}

TEST_CASE("correctors") {
  const ExpansionSolution& e = desk_expansion();
  const TwoScaleField c2 = corrector2(e);
  const double pi = std::numbers::pi;
  // single mode: fast factor of Phi2 is -g0 (rho_s + 2 rho_n) f0 cos(2 pi y) 0.5 / (4 pi^2)
  const Vec& f0 = e.slice[0].f.values();
  const Vec w = e.g0 * (e.slice[0].rho_s.values() + 2.0 * e.slice[0].rho_n.values()).cwiseProduct(f0);
  for (std::size_t node : {64u, 128u, 170u}) {
    for (double y : {0.0, 0.2, 0.6}) {
      const double fast = c2.eval(node, {y, 0, 0}) - c2.mean[node];
      const double want = -w[static_cast<Eigen::Index>(node)] * 0.5 * std::cos(2 * pi * y) / (4 * pi * pi);
      CHECK(fast == doctest::Approx(want).epsilon(1e-12));
    }
    double avg = 0.0;
    for (int k = 0; k < 64; ++k) avg += c2.eval(node, {(k + 0.5) / 64, 0, 0}) / 64;
    CHECK(std::abs(avg - e.slice[2].f[node]) < 1e-12);
  }
  CHECK((c2.mean.values() - e.slice[2].f.values()).cwiseAbs().maxCoeff() == 0.0);

  // third order, single mode: -2 g0 d/dx(w) times grad(Delta^-2 A)
  const TwoScaleField c3 = corrector3(e);
  const Vec dw = gradient(e.base.grid, w, 0);
  for (std::size_t node : {64u, 100u}) {
    const double y = 0.15;
    const double want = -2.0 * dw[static_cast<Eigen::Index>(node)] *
                        (-0.5 * std::sin(2 * pi * y) * 2 * pi / (16 * std::pow(pi, 4)));
    CHECK(c3.eval(node, {y, 0, 0}) - c3.mean[node] == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("reconstruction") {
  const ExpansionSolution& e = desk_expansion();
  const double eps = 0.125;
  const RealField r0 = reconstruct(e, eps, 0);
  const RealField r2 = reconstruct(e, eps, 2);
  CHECK((r0.values() - e.slice[0].f.values()).cwiseAbs().maxCoeff() == 0.0);
  const RealField p2 = corrector2(e).at_scale(eps);
  CHECK((r2.values() - r0.values() - eps * eps * p2.values()).cwiseAbs().maxCoeff() < 1e-14);
  const RealField tiny = reconstruct(e, 1e-6, 3);
  CHECK((tiny.values() - r0.values()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_THROWS_AS(reconstruct(e, eps, 1), Error);

  const ExpansionSolution low = expand(desk(), 0);
  CHECK_THROWS_AS(reconstruct(low, eps, 2), Error);
}

TEST_CASE("energy coefficients") {
  const ExpansionSolution& e = desk_expansion();
  const EnergyCoefficients& k = e.energy;
  CHECK(k.zeta[1] == 0.0);
  CHECK(k.total[1] == 0.0);
  CHECK(k.total[0] == doctest::Approx(e.base.energy).epsilon(1e-12));
  CHECK(k.zeta[0] == doctest::Approx(e.base.zeta).epsilon(1e-12));

  ScfConfig cold = desk();
  cold.thermo.beta = 1e3;
  const ExpansionSolution c = expand(cold, 2);
  CHECK(c.energy.total[0] == doctest::Approx(c.N * c.slice[0].xi * c.energy.E[0]).epsilon(1e-12));
}

TEST_CASE("a single sweep member improves with the corrector") {
  const SweepRow r = sweep_member(desk(), 0.125, 16);
  CHECK(r.points >= 2048);
  CHECK(r.err_order2 < r.err_order0);
  CHECK(r.err_order0 < 1e-2);
  CHECK(std::isfinite(r.energy_eps));

  CHECK(fit_loglog_slope({1.0, 2.0, 4.0}, {3.0, 12.0, 48.0}) == doctest::Approx(2.0));
  CHECK(sweep_grid(GridSpec{1, 8.0, 256}, 1.0 / 64, 16).points == 16384);
}
