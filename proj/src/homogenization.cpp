#include "becmf/homogenization.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <string>

namespace becmf {

double TwoScaleField::eval(std::size_t node, const Point& y) const {
  double v = mean.size() ? mean[node] : 0.0;
  for (const auto& t : terms) v += t.slow[node] * t.fast(y);
  return v;
}

namespace {

Point cell_point(const Grid& grid, std::size_t node, double epsilon) {
  Point x = grid.node(node);
  for (int a = 0; a < grid.dim(); ++a) x[a] /= epsilon;
  return x;
}

}  // namespace

RealField TwoScaleField::fast_at_scale(double epsilon) const {
  if (terms.empty()) return RealField(mean.grid());
  const Grid& grid = terms.front().slow.grid();
  RealField out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point y = cell_point(grid, i, epsilon);
    double v = 0.0;
    for (const auto& t : terms) v += t.slow[i] * t.fast(y);
    out[i] = v;
  }
  return out;
}

RealField TwoScaleField::at_scale(double epsilon) const {
  RealField out = fast_at_scale(epsilon);
  if (mean.size()) out.values() += mean.values();
  return out;
}

namespace {

constexpr double kOccupationCut = 1e-8;

double grid_norm(const Grid& grid, const Vec& v) { return std::sqrt(grid.cell_volume()) * v.norm(); }

// Cell problems are only solvable for zero-mean data.
void check_cell_mean(const Microstructure& m) {
  const double a = cell_average(m.dim(), [&](const Point& y) { return m.eval_A(y); });
  const double c = cell_average(m.dim(), [&](const Point& y) { return m.eval_inv_laplacian_A(y); });
  if (std::abs(a) > 1e-12 || std::abs(c) > 1e-12) {
    throw Error(ErrorKind::InvalidArgument, "cell source has nonzero mean; the cell problem is not solvable");
  }
}

struct SlowData {
  Vec f0;
  std::vector<Vec> fj0;
  Vec rs0, rn0, P, Q, rbs, rbn;
  std::vector<double> n0;
  std::vector<bool> active;
};

SlowData slow_data(const ExpansionSolution& e) {
  SlowData d;
  const auto& s0 = e.slice[0];
  d.f0 = s0.f.values();
  for (const auto& f : s0.f_j) d.fj0.push_back(f.values());
  d.rs0 = s0.rho_s.values();
  d.rn0 = s0.rho_n.values();
  d.P = d.rs0 + 2.0 * d.rn0;
  d.Q = d.rs0 + d.rn0;
  d.rbs = 2.0 * d.rs0.array() * d.P.array();
  d.rbn = 4.0 * d.Q.array() * d.rn0.array();
  d.n0 = s0.n_j;
  for (double n : d.n0) d.active.push_back(n >= kOccupationCut);
  return d;
}

SparseMatrix shifted(const SparseMatrix& base, const Vec& diag, double shift) {
  SparseMatrix m = base;
  for (Eigen::Index i = 0; i < diag.size(); ++i) m.coeffRef(i, i) += diag[i] - shift;
  return m;
}

}  // namespace

ExpansionSolution order0_solve(const ScfConfig& config) {
  ScfConfig c = config;
  c.epsilon.reset();
  ExpansionSolution e;
  e.params = config.thermo;
  e.micro = config.micro;
  e.g0 = config.micro.g0();
  e.N = config.thermo.N;
  e.h_minus_one = h_minus_one_norm_sq(config.micro);
  e.base = scf_solve(c);

  auto& s = e.slice[0];
  const auto& b = e.base;
  s.f = b.phi;
  s.f_j = b.phi_j;
  s.mu = b.mu;
  s.mu_j = b.mu_j;
  s.xi = b.thermo.xi;
  s.z = b.thermo.z();
  s.z_ratio = 1.0;
  s.n_j = b.thermo.n;
  s.rho_s = b.rho_s;
  s.rho_n = b.rho_n;
  const Vec cube = s.f.values().array().cube();
  for (const auto& f : s.f_j) s.b_j.push_back(s.xi * e.g0 * dot(b.grid, cube, f.values()) / e.N);
  return e;
}

void order1_solve(ExpansionSolution& e) {
  const auto& s0 = e.slice[0];
  const Grid& grid = s0.f.grid();
  const int J = static_cast<int>(s0.f_j.size());
  auto& s1 = e.slice[1];
  s1 = ExpansionSlice{};
  s1.f = RealField(grid);
  s1.rho_s = RealField(grid);
  s1.rho_n = RealField(grid);
  for (int j = 0; j < J; ++j) s1.f_j.emplace_back(grid);
  s1.mu_j.assign(static_cast<std::size_t>(J), 0.0);

  if (e.base.mode == ScfMode::SelfConsistent) {
    const ThermoOrder o1 = solve_xi_z_order1(e.params, e.base.thermo, s1.mu, s1.mu_j);
    s1.xi = o1.xi;
    s1.z_ratio = o1.z_ratio;
    s1.z = o1.z;
    s1.n_j = o1.n;
  } else {
    s1.n_j.assign(static_cast<std::size_t>(J), 0.0);
  }

  // Substitute the branch into both first-order equations.
  const SlowData d = slow_data(e);
  const SparseMatrix base = shifted(negative_laplacian(grid), e.base.potential.values(), 0.0);
  const Vec rs1 = s1.xi * d.f0.array().square() + 2.0 * s0.xi * d.f0.array() * s1.f.values().array();
  Vec rn1 = Vec::Zero(d.f0.size());
  for (int j = 0; j < J; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    if (!d.active[ju]) continue;
    rn1.array() += s1.n_j[ju] * d.fj0[ju].array().square() + 2.0 * d.n0[ju] * d.fj0[ju].array() * s1.f_j[ju].values().array();
  }
  s1.rho_s = RealField(grid, rs1);
  s1.rho_n = RealField(grid, rn1);
  const Vec lhs = shifted(base, e.g0 * d.P, s0.mu) * s1.f.values();
  const Vec rhs = (s1.mu - e.g0 * (rs1.array() + 2.0 * rn1.array())).matrix().cwiseProduct(d.f0);
  e.order1.residual_condensate = grid_norm(grid, lhs - rhs);

  const Vec cube = d.f0.array().cube();
  double worst = 0.0, bmax = 0.0;
  for (int j = 0; j < J; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    const Vec& fj1 = s1.f_j[ju].values();
    // b_j^(1) from the expanded coupling formula.
    const double b1 = e.g0 / e.N *
                      (s0.xi * (dot(grid, cube, fj1) +
                                3.0 * dot(grid, (d.f0.array().square() * d.fj0[ju].array()).matrix(), s1.f.values())) +
                       s1.xi * dot(grid, cube, d.fj0[ju]));
    s1.b_j.push_back(b1);
    bmax = std::max(bmax, std::abs(b1));
    const Vec lj = shifted(base, 2.0 * e.g0 * d.Q, s0.mu_j[ju]) * fj1 - s0.b_j[ju] * s1.f.values() - b1 * d.f0;
    const Vec rj = (s1.mu_j[ju] - 2.0 * e.g0 * (rs1.array() + rn1.array())).matrix().cwiseProduct(d.fj0[ju]);
    worst = std::max(worst, grid_norm(grid, lj - rj));
  }
  e.order1.residual_excited = worst;
  e.order1.xi = s1.xi;
  e.order1.z_ratio = s1.z_ratio;
  e.order1.b_max = bmax;
  if (e.order1.residual_condensate > 1e-10 || e.order1.residual_excited > 1e-10 || std::abs(s1.xi) > 1e-10 ||
      bmax > 1e-10) {
    throw Error(ErrorKind::Convergence, "first-order zero branch failed residual substitution");
  }
}

void order2_solve(ExpansionSolution& e, const Order2Options& opt) {
  const auto& s0 = e.slice[0];
  const Grid& grid = s0.f.grid();
  const int J = static_cast<int>(s0.f_j.size());
  const auto Ju = static_cast<std::size_t>(J);
  for (int j = 0; j + 1 < J; ++j) {
    if (std::abs(s0.mu_j[static_cast<std::size_t>(j) + 1] - s0.mu_j[static_cast<std::size_t>(j)]) < opt.degeneracy_gap) {
      throw Error(ErrorKind::Degeneracy, "excited eigenvalues " + std::to_string(j) + " and " + std::to_string(j + 1) +
                                             " are degenerate; second-order expansion refused");
    }
  }
  if (e.slice[1].f.size() == 0) order1_solve(e);
  const double g0 = e.g0;
  const double A2 = e.h_minus_one;
  const double N = e.N;
  const SlowData d = slow_data(e);
  const Eigen::Index n = static_cast<Eigen::Index>(grid.size());
  const SparseMatrix base = shifted(negative_laplacian(grid), e.base.potential.values(), 0.0);
  const bool closure = e.base.mode == ScfMode::SelfConsistent;

  // Self-coupling terms are kept implicit; cross couplings are lagged.
  const Vec selfPhi = g0 * d.P + 2.0 * g0 * s0.xi * d.f0.cwiseAbs2();
  const BorderedSolver kPhi(shifted(base, selfPhi, s0.mu), Eigen::MatrixXd(-d.f0));
  std::vector<BorderedSolver> kj;
  kj.reserve(Ju);
  for (std::size_t j = 0; j < Ju; ++j) {
    const double nself = d.active[j] ? d.n0[j] : 0.0;
    const Vec diag = 2.0 * g0 * d.Q + 4.0 * g0 * nself * d.fj0[j].cwiseAbs2();
    Eigen::MatrixXd border(n, 2);
    border.col(0) = -d.f0;
    border.col(1) = -d.fj0[j];
    kj.emplace_back(shifted(base, diag, s0.mu_j[j]), border);
  }

  const Vec forcePhi = g0 * g0 * A2 * (d.P.array().square() + d.rbs.array() + 2.0 * d.rbn.array());
  const Vec forceJ = 4.0 * g0 * g0 * A2 * d.Q.array().square() + 2.0 * g0 * g0 * A2 * (d.rbs.array() + d.rbn.array());

  struct State {
    Vec f2;
    std::vector<Vec> fj2;
    double mu2 = 0.0;
    std::vector<double> muj2, bj2, nj2;
    double xi2 = 0.0, r2 = 0.0;
  };
  State cur;
  cur.f2 = Vec::Zero(n);
  cur.fj2.assign(Ju, Vec::Zero(n));
  cur.muj2.assign(Ju, 0.0);
  cur.bj2.assign(Ju, 0.0);
  cur.nj2.assign(Ju, 0.0);

  ThermoOrder o1;
  o1.mu_j.assign(Ju, 0.0);

  auto normal2 = [&](const State& s, int skip_self) {
    Vec r = Vec::Zero(n);
    for (std::size_t k = 0; k < Ju; ++k) {
      if (!d.active[k]) continue;
      r.array() += s.nj2[k] * d.fj0[k].array().square();
      if (static_cast<int>(k) != skip_self) r.array() += 2.0 * d.n0[k] * s.fj2[k].array() * d.fj0[k].array();
    }
    return r;
  };

  auto sweep = [&](const State& s) {
    State next = s;
    const Vec rhsPhi = (forcePhi.array() - g0 * s.xi2 * d.f0.array().square() - 2.0 * g0 * normal2(s, -2).array()) *
                       d.f0.array();
    Vec c1 = Vec::Zero(1);
    auto [f2, m2] = kPhi.solve(rhsPhi, c1);
    next.f2 = f2;
    next.mu2 = m2[0];
    const Vec rs2 = s.xi2 * d.f0.array().square() + 2.0 * s0.xi * d.f0.array() * next.f2.array();
    for (std::size_t j = 0; j < Ju; ++j) {
      const Vec rn2 = normal2(s, d.active[j] ? static_cast<int>(j) : -2);
      const Vec rhs = ((forceJ.array() - 2.0 * g0 * (rs2.array() + rn2.array())) * d.fj0[j].array()).matrix() +
                      s0.b_j[j] * next.f2;
      Vec c(2);
      c[0] = next.f2.dot(d.fj0[j]);
      c[1] = 0.0;
      auto [x, y] = kj[j].solve(rhs, c);
      next.fj2[j] = x;
      next.bj2[j] = y[0];
      next.muj2[j] = y[1];
    }
    if (closure) {
      const ThermoOrder o2 = solve_xi_z_order2(e.params, e.base.thermo, o1, next.mu2, next.muj2);
      next.xi2 = o2.xi;
      next.r2 = o2.z_ratio;
      next.nj2 = o2.n;
    }
    return next;
  };

  auto change = [&](const State& a, const State& b) {
    double c = (a.f2 - b.f2).cwiseAbs().maxCoeff();
    c = std::max(c, std::abs(a.mu2 - b.mu2));
    c = std::max(c, std::abs(a.xi2 - b.xi2));
    for (std::size_t j = 0; j < Ju; ++j) {
      c = std::max(c, (a.fj2[j] - b.fj2[j]).cwiseAbs().maxCoeff());
      c = std::max({c, std::abs(a.muj2[j] - b.muj2[j]), std::abs(a.bj2[j] - b.bj2[j]), std::abs(a.nj2[j] - b.nj2[j])});
    }
    return c;
  };

  const double w = opt.damping;
  bool converged = false;
  int it = 0;
  double delta = std::numeric_limits<double>::infinity();
  while (it < opt.max_sweeps) {
    ++it;
    State next = sweep(cur);
    delta = change(next, cur);
    if (delta < opt.tol) {
      cur = std::move(next);
      converged = true;
      break;
    }
    cur.f2 += w * (next.f2 - cur.f2);
    cur.mu2 += w * (next.mu2 - cur.mu2);
    cur.xi2 += w * (next.xi2 - cur.xi2);
    cur.r2 += w * (next.r2 - cur.r2);
    for (std::size_t j = 0; j < Ju; ++j) {
      cur.fj2[j] += w * (next.fj2[j] - cur.fj2[j]);
      cur.muj2[j] += w * (next.muj2[j] - cur.muj2[j]);
      cur.bj2[j] += w * (next.bj2[j] - cur.bj2[j]);
      cur.nj2[j] += w * (next.nj2[j] - cur.nj2[j]);
    }
  }
  if (!converged) {
    throw Error(ErrorKind::Divergence, "second-order fixed point did not converge in " + std::to_string(opt.max_sweeps) +
                                           " sweeps; last change " + std::to_string(delta));
  }

  auto& s2 = e.slice[2];
  s2 = ExpansionSlice{};
  s2.f = RealField(grid, cur.f2);
  for (std::size_t j = 0; j < Ju; ++j) s2.f_j.emplace_back(grid, cur.fj2[j]);
  s2.mu = cur.mu2;
  s2.mu_j = cur.muj2;
  s2.xi = cur.xi2;
  s2.z_ratio = cur.r2;
  s2.z = cur.r2 * s0.z;
  s2.n_j = closure ? cur.nj2 : std::vector<double>(Ju, 0.0);
  s2.rho_s = RealField(grid, s2.xi * d.f0.array().square() + 2.0 * s0.xi * d.f0.array() * cur.f2.array());
  Vec rn2 = Vec::Zero(n);
  for (std::size_t k = 0; k < Ju; ++k) {
    if (!d.active[k]) continue;
    rn2.array() += s2.n_j[k] * d.fj0[k].array().square() + 2.0 * d.n0[k] * cur.fj2[k].array() * d.fj0[k].array();
  }
  s2.rho_n = RealField(grid, rn2);
  e.rho_bar_s2 = RealField(grid, d.rbs);
  e.rho_bar_n2 = RealField(grid, d.rbn);

  // Closed-form b_j^(2) from expanding the coupling integral.
  const Vec cube = d.f0.array().cube();
  const Vec weight58 = (5.0 * d.rs0.array() + 8.0 * d.rn0.array()) * cube.array();
  e.order2 = Order2Report{};
  e.order2.sweeps = it;
  e.order2.final_change = delta;
  for (std::size_t j = 0; j < Ju; ++j) {
    const double b = g0 / N *
                     (s0.xi * (dot(grid, cube, cur.fj2[j]) +
                               3.0 * dot(grid, (d.f0.array().square() * d.fj0[j].array()).matrix(), cur.f2) -
                               g0 * A2 * dot(grid, d.fj0[j], weight58)) +
                      s2.xi * dot(grid, cube, d.fj0[j]));
    s2.b_j.push_back(b);
    e.order2.b_crosscheck = std::max(e.order2.b_crosscheck, std::abs(b - cur.bj2[j]));
    e.order2.orthogonality =
        std::max(e.order2.orthogonality, std::abs(dot(grid, d.f0, cur.fj2[j]) + dot(grid, cur.f2, d.fj0[j])));
  }
  e.has_order2 = true;
  const auto [rc, re] = order2_residuals(e);
  e.order2.residual_condensate = rc;
  e.order2.residual_excited = re;
}

std::pair<double, double> order2_residuals(const ExpansionSolution& e) {
  if (!e.has_order2) throw Error(ErrorKind::InvalidArgument, "second-order slice missing");
  const auto& s0 = e.slice[0];
  const auto& s2 = e.slice[2];
  const Grid& grid = s0.f.grid();
  const double g0 = e.g0, A2 = e.h_minus_one;
  const Vec& f0 = s0.f.values();
  const Vec& rs0 = s0.rho_s.values();
  const Vec& rn0 = s0.rho_n.values();
  const Vec P = rs0 + 2.0 * rn0;
  const Vec Q = rs0 + rn0;
  const Vec rbs = 2.0 * rs0.array() * P.array();
  const Vec rbn = 4.0 * Q.array() * rn0.array();
  const Vec& rs2 = s2.rho_s.values();
  const Vec& rn2 = s2.rho_n.values();
  const SparseMatrix lap = negative_laplacian(grid);
  const Vec& V = e.base.potential.values();

  Vec lhs = lap * s2.f.values();
  lhs.array() += (V.array() + g0 * P.array() - s0.mu) * s2.f.values().array();
  const Vec rhs = (g0 * g0 * A2 * (P.array().square() + rbs.array() + 2.0 * rbn.array()) -
                   g0 * (rs2.array() + 2.0 * rn2.array()) + s2.mu) *
                  f0.array();
  const double rc = grid_norm(grid, lhs - rhs);

  double re = 0.0;
  for (std::size_t j = 0; j < s0.f_j.size(); ++j) {
    const Vec& fj0 = s0.f_j[j].values();
    const Vec& fj2 = s2.f_j[j].values();
    Vec l = lap * fj2;
    l.array() += (V.array() + 2.0 * g0 * Q.array() - s0.mu_j[j]) * fj2.array();
    l -= s0.b_j[j] * s2.f.values() + s2.b_j[j] * f0;
    const Vec r = (4.0 * g0 * g0 * A2 * Q.array().square() + 2.0 * g0 * g0 * A2 * (rbs.array() + rbn.array()) -
                   2.0 * g0 * (rs2.array() + rn2.array()) + s2.mu_j[j]) *
                  fj0.array();
    re = std::max(re, grid_norm(grid, l - r));
  }
  return {rc, re};
}

TwoScaleField corrector2(const ExpansionSolution& e, int state) {
  check_cell_mean(e.micro);
  const auto& s0 = e.slice[0];
  const Grid& grid = s0.f.grid();
  const Vec& rs0 = s0.rho_s.values();
  const Vec& rn0 = s0.rho_n.values();
  TwoScaleField out;
  Vec slow;
  if (state < 0) {
    slow = -e.g0 * (rs0.array() + 2.0 * rn0.array()) * s0.f.values().array();
    out.mean = e.has_order2 ? e.slice[2].f : RealField(grid);
  } else {
    const auto j = static_cast<std::size_t>(state);
    slow = -2.0 * e.g0 * (rs0.array() + rn0.array()) * s0.f_j.at(j).values().array();
    out.mean = e.has_order2 ? e.slice[2].f_j.at(j) : RealField(grid);
  }
  if (!e.micro.is_zero()) {
    const Microstructure m = e.micro;
    out.terms.push_back({RealField(grid, slow), [m](const Point& y) { return m.eval_inv_laplacian_A(y); }});
  }
  return out;
}

TwoScaleField corrector3(const ExpansionSolution& e, int state) {
  check_cell_mean(e.micro);
  const auto& s0 = e.slice[0];
  const Grid& grid = s0.f.grid();
  const Vec& rs0 = s0.rho_s.values();
  const Vec& rn0 = s0.rho_n.values();
  Vec inner_field;
  double coeff;
  if (state < 0) {
    inner_field = (rs0.array() + 2.0 * rn0.array()) * s0.f.values().array();
    coeff = -2.0 * e.g0;
  } else {
    inner_field = (rs0.array() + rn0.array()) * s0.f_j.at(static_cast<std::size_t>(state)).values().array();
    coeff = -4.0 * e.g0;
  }
  TwoScaleField out;
  out.mean = RealField(grid);  // f3 := 0
  if (e.micro.is_zero()) return out;
  const Microstructure m = e.micro;
  for (int a = 0; a < grid.dim(); ++a) {
    out.terms.push_back({RealField(grid, coeff * gradient(grid, inner_field, a)),
                         [m, a](const Point& y) { return m.eval_grad_inv_laplacian_sq_A(y)[a]; }});
  }
  return out;
}

RealField reconstruct(const ExpansionSolution& e, double epsilon, int order, int state) {
  if (order != 0 && order != 2 && order != 3) throw Error(ErrorKind::InvalidArgument, "reconstruction order must be 0, 2 or 3");
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  const auto& s0 = e.slice[0];
  RealField out = state < 0 ? s0.f : s0.f_j.at(static_cast<std::size_t>(state));
  if (order == 0) return out;
  if (!e.has_order2) throw Error(ErrorKind::InvalidArgument, "second-order slice missing");
  out.values() += epsilon * epsilon * corrector2(e, state).at_scale(epsilon).values();
  if (order == 3) out.values() += epsilon * epsilon * epsilon * corrector3(e, state).fast_at_scale(epsilon).values();
  return out;
}

EnergyCoefficients energy_expansion(const ExpansionSolution& e) {
  const auto& s0 = e.slice[0];
  const Grid& grid = s0.f.grid();
  const double g0 = e.g0, N = e.N, A2 = e.h_minus_one;
  const Vec& f0 = s0.f.values();
  const Vec& rs0 = s0.rho_s.values();
  const Vec& rn0 = s0.rho_n.values();
  const Vec f0sq = f0.cwiseAbs2();
  EnergyCoefficients c;
  c.zeta[0] = g0 * dot(grid, f0sq, f0sq) / N;
  c.E[0] = s0.mu - 0.5 * s0.xi * s0.xi * c.zeta[0];
  const std::size_t J = s0.f_j.size();
  c.E_j.resize(J);
  for (std::size_t j = 0; j < J; ++j) c.E_j[j] = {s0.mu_j[j] - 0.5 * s0.xi * s0.xi * c.zeta[0], 0.0, 0.0};

  double total0 = N * s0.xi * c.E[0] - 2.0 * g0 * dot(grid, rs0, rn0) - g0 * dot(grid, rn0, rn0);
  for (std::size_t j = 0; j < J; ++j) total0 += s0.n_j[j] * c.E_j[j][0];
  c.total[0] = total0;
  if (!e.has_order2) return c;

  const auto& s2 = e.slice[2];
  const Vec P = rs0 + 2.0 * rn0;
  c.zeta[2] = g0 / N *
              (4.0 * dot(grid, s2.f.values(), (f0.array().cube()).matrix()) -
               4.0 * g0 * A2 * dot(grid, P, f0sq.cwiseAbs2()));
  const double shift2 = 0.5 * (s0.xi * s0.xi * c.zeta[2] + 2.0 * s0.xi * s2.xi * c.zeta[0]);
  c.E[2] = s2.mu - shift2;
  for (std::size_t j = 0; j < J; ++j) c.E_j[j][2] = s2.mu_j[j] - shift2;

  const Vec& rs2 = s2.rho_s.values();
  const Vec& rn2 = s2.rho_n.values();
  const Vec& rbs = e.rho_bar_s2.values();
  const Vec& rbn = e.rho_bar_n2.values();
  double total2 = N * (s0.xi * c.E[2] + s2.xi * c.E[0]);
  for (std::size_t j = 0; j < J; ++j) total2 += s0.n_j[j] * c.E_j[j][2] + s2.n_j[j] * c.E_j[j][0];
  total2 -= 2.0 * g0 *
            (dot(grid, rn0, rs2) + dot(grid, rs0, rn2) + dot(grid, rn2, rn0) -
             g0 * A2 * (dot(grid, rn0, rbs) + dot(grid, rs0, rbn) + dot(grid, rn0, rbn)));
  c.total[2] = total2;
  return c;
}

ExpansionSolution expand(const ScfConfig& config, int order, const Order2Options& options) {
  if (order < 0 || order > 2) throw Error(ErrorKind::InvalidArgument, "expansion order must be 0, 1 or 2");
  ExpansionSolution e = order0_solve(config);
  if (order >= 1) order1_solve(e);
  if (order >= 2) order2_solve(e, options);
  e.energy = energy_expansion(e);
  return e;
}

GridSpec sweep_grid(const GridSpec& base, double epsilon, int points_per_period) {
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  if (points_per_period < 16) throw Error(ErrorKind::InvalidArgument, "points_per_period must be at least 16");
  GridSpec g = base;
  const double need = 2.0 * base.half_width * points_per_period / epsilon;
  int n = static_cast<int>(std::ceil(need - 1e-9));
  if (n % 2) ++n;
  g.points = std::max(base.points, n);
  return g;
}

SweepRow sweep_member(const ScfConfig& config, double epsilon, int points_per_period) {
  ScfConfig c = config;
  c.grid = sweep_grid(config.grid, epsilon, points_per_period);
  c.epsilon.reset();
  const ScfSolution full = full_epsilon_solve(c, epsilon);
  const ExpansionSolution e = expand(c, 2);
  SweepRow row;
  row.epsilon = epsilon;
  row.points = c.grid.points;
  const Vec& phi = full.phi.values();
  row.err_order0 = (phi - reconstruct(e, epsilon, 0).values()).cwiseAbs().maxCoeff();
  row.err_order2 = (phi - reconstruct(e, epsilon, 2).values()).cwiseAbs().maxCoeff();
  row.err_order3 = (phi - reconstruct(e, epsilon, 3).values()).cwiseAbs().maxCoeff();
  row.energy_eps = full.energy;
  row.energy_expansion = e.energy.total[0] + epsilon * epsilon * e.energy.total[2];
  row.remainder = row.energy_eps - row.energy_expansion;
  row.remainder_fine = std::numeric_limits<double>::quiet_NaN();
  row.remainder_extrapolated = std::numeric_limits<double>::quiet_NaN();
  return row;
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::InvalidArgument, "slope fit needs two points or more");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

SweepResult run_sweep(const ScfConfig& config, const SweepOptions& options) {
  if (options.epsilons.size() < 2) throw Error(ErrorKind::InvalidArgument, "a sweep needs at least two epsilon values");
  for (double eps : options.epsilons) {
    if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon values must be positive");
  }
  SweepResult r;
  auto member = [&config, &options](double eps) {
    SweepRow row = sweep_member(config, eps, options.points_per_period);
    if (options.extrapolate_energy) {
      const SweepRow fine = sweep_member(config, eps, 2 * options.points_per_period);
      row.remainder_fine = fine.remainder;
      row.remainder_extrapolated = (4.0 * fine.remainder - row.remainder) / 3.0;
    }
    return row;
  };
  if (options.parallel) {
    std::vector<std::future<SweepRow>> jobs;
    for (double eps : options.epsilons) jobs.push_back(std::async(std::launch::async, member, eps));
    for (auto& j : jobs) r.rows.push_back(j.get());
  } else {
    for (double eps : options.epsilons) r.rows.push_back(member(eps));
  }
  std::sort(r.rows.begin(), r.rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.epsilon > b.epsilon; });
  std::vector<double> x, e0, e2, e3, er, ex;
  for (const auto& row : r.rows) {
    x.push_back(row.epsilon);
    e0.push_back(row.err_order0);
    e2.push_back(row.err_order2);
    e3.push_back(row.err_order3);
    er.push_back(std::abs(row.remainder));
    ex.push_back(std::abs(row.remainder_extrapolated));
  }
  r.slope_order0 = fit_loglog_slope(x, e0);
  r.slope_order2 = fit_loglog_slope(x, e2);
  r.slope_order3 = fit_loglog_slope(x, e3);
  r.slope_energy_remainder_raw = fit_loglog_slope(x, er);
  r.slope_energy_remainder = options.extrapolate_energy ? fit_loglog_slope(x, ex) : r.slope_energy_remainder_raw;
  return r;
}

}  // namespace becmf
