#include "becmf/thermo.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <limits>
#include <string>

#include "becmf/error.hpp"

namespace becmf {

void ThermoParams::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw Error(ErrorKind::InvalidArgument, "beta must be positive");
  if (!(N >= 1.0) || !std::isfinite(N)) throw Error(ErrorKind::InvalidArgument, "particle number N must be >= 1");
  if (J < 0) throw Error(ErrorKind::InvalidArgument, "J must be nonnegative");
}

double ThermoState::z() const { return std::exp(log_z); }

double ThermoState::constraint_residual(double N) const {
  double s = N * xi - N;
  for (double nj : n) s += nj;
  return s;
}

namespace {

// 1/(x - 1) with x = e^{t}, t = beta mu_j - log z, accurate for small t.
double occupation_from_exponent(double t) {
  if (!(t > 0.0)) {
    throw Error(ErrorKind::OccupancyDivergence,
                "Bose-Einstein occupation diverges: z^{-1} e^{beta mu_j} <= 1");
  }
  if (t > 745.0) return 0.0;
  return 1.0 / std::expm1(t);
}

// Excited occupation at condensate count m = N xi and gap d = mu_j - mu:
// x = (1 + 1/m) e^{beta d}, n = 1/(x - 1), with x - 1 = e^{beta d}/m + expm1(beta d).
double occupation_at(double m, double beta, double gap) {
  const double t = beta * gap;
  if (t > 700.0) return 0.0;
  return 1.0 / (std::exp(t) / m + std::expm1(t));
}

void check_sizes(const ThermoParams& p, const std::vector<double>& v, const char* what) {
  if (static_cast<int>(v.size()) != p.J) {
    throw Error(ErrorKind::InvalidArgument,
                std::string(what) + " has " + std::to_string(v.size()) + " entries, expected J = " + std::to_string(p.J));
  }
}

}  // namespace

double occupation(double z, double beta, double mu_j) {
  if (!(z > 0.0)) throw Error(ErrorKind::InvalidArgument, "z must be positive");
  return occupation_from_exponent(beta * mu_j - std::log(z));
}

double occupation_log(double log_z, double beta, double mu_j) {
  return occupation_from_exponent(beta * mu_j - log_z);
}

ThermoState solve_xi_z_order0(const ThermoParams& params, double mu, const std::vector<double>& mu_j) {
  params.validate();
  check_sizes(params, mu_j, "excited eigenvalue list");
  for (double m : mu_j) {
    if (!(m > mu)) {
      throw Error(ErrorKind::TemperatureRange, "excited eigenvalue below the condensate eigenvalue; no closure root");
    }
  }
  const double N = params.N;
  auto residual = [&](double xi) {
    double s = N * xi - N;
    for (double m : mu_j) s += occupation_at(N * xi, params.beta, m - mu);
    return s;
  };

  constexpr double lo_bound = 1e-8;
  double xi = 1.0;
  if (params.J > 0 && residual(1.0) != 0.0) {
    // Coarse bracketing scan on a log-spaced grid, then bisection.
    constexpr int scan = 64;
    double lo = lo_bound, hi = 1.0;
    if (residual(lo) > 0.0) {
      throw Error(ErrorKind::TemperatureRange,
                  "temperature above condensation range for truncation J = " + std::to_string(params.J));
    }
    double prev = lo;
    for (int k = 1; k <= scan; ++k) {
      const double x = lo_bound * std::pow(1.0 / lo_bound, static_cast<double>(k) / scan);
      if (residual(x) >= 0.0) {
        lo = prev;
        hi = x;
        break;
      }
      prev = x;
    }
    auto tol = [](double a, double b) { return std::abs(b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(b); };
    const auto bracket = boost::math::tools::bisect(residual, lo, hi, tol);
    const double a = bracket.first, b = bracket.second;
    xi = std::abs(residual(a)) <= std::abs(residual(b)) ? a : b;
  }

  ThermoState s;
  s.xi = xi;
  s.mu = mu;
  s.mu_j = mu_j;
  // z = e^{beta mu} / (1 + 1/(N xi))
  s.log_z = params.beta * mu - std::log1p(1.0 / (N * xi));
  s.n.reserve(mu_j.size());
  for (double m : mu_j) s.n.push_back(occupation_at(N * xi, params.beta, m - mu));
  return s;
}

namespace {

// Derivative weight x/(x-1)^2 = n(1+n).
double weight(double n) { return n * (1.0 + n); }

}  // namespace

std::vector<double> occupation_coeffs(int order, const ThermoExpansion& e) {
  const auto& s0 = e.order0;
  const double beta = e.params.beta;
  std::vector<double> out(s0.n.size(), 0.0);
  if (order == 0) return s0.n;
  if (order != 1 && order != 2) throw Error(ErrorKind::InvalidArgument, "occupation order must be 0, 1 or 2");
  const double r1 = e.order1.z_ratio;
  const auto& m1 = e.order1.mu_j;
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double n = s0.n[j];
    const double mj1 = m1.empty() ? 0.0 : m1[j];
    const double d1 = r1 - beta * mj1;
    if (order == 1) {
      out[j] = weight(n) * d1;
    } else {
      const double r2 = e.order2.z_ratio;
      const double mj2 = e.order2.mu_j.empty() ? 0.0 : e.order2.mu_j[j];
      out[j] = weight(n) * (-(r1 * r1 - r2 - beta * mj1 * r1 + beta * mj2 + 0.5 * beta * beta * mj1 * mj1) +
                            (1.0 + n) * d1 * d1);
    }
  }
  return out;
}

ThermoOrder solve_xi_z_order1(const ThermoParams& params, const ThermoState& s0, double mu1,
                              const std::vector<double>& mu_j1) {
  check_sizes(params, mu_j1, "first-order eigenvalue list");
  const double beta = params.beta;
  const double m0 = params.N * s0.xi;
  const double w0 = weight(m0);
  double sw = 0.0, swd = 0.0;
  for (std::size_t j = 0; j < s0.n.size(); ++j) {
    const double w = weight(s0.n[j]);
    sw += w;
    swd += w * beta * (mu1 - mu_j1[j]);
  }
  ThermoOrder o;
  o.mu = mu1;
  o.mu_j = mu_j1;
  const double nxi1 = -swd / (1.0 + sw / w0);
  o.xi = nxi1 / params.N;
  o.z_ratio = beta * mu1 + nxi1 / w0;
  o.z = o.z_ratio * s0.z();
  o.n.resize(s0.n.size());
  for (std::size_t j = 0; j < s0.n.size(); ++j) o.n[j] = weight(s0.n[j]) * (o.z_ratio - beta * mu_j1[j]);
  return o;
}

ThermoOrder solve_xi_z_order2(const ThermoParams& params, const ThermoState& s0, const ThermoOrder& o1, double mu2,
                              const std::vector<double>& mu_j2) {
  check_sizes(params, mu_j2, "second-order eigenvalue list");
  const double beta = params.beta;
  const double r1 = o1.z_ratio;
  const double m0 = params.N * s0.xi;
  // Each occupation (condensate included) is w (r2 + c) at second order.
  auto c_term = [&](double n, double m1, double m2) {
    const double d1 = r1 - beta * m1;
    return -(r1 * r1 - beta * m1 * r1 + beta * m2 + 0.5 * beta * beta * m1 * m1) + (1.0 + n) * d1 * d1;
  };
  const double w0 = weight(m0);
  const double c0 = c_term(m0, o1.mu, mu2);
  double sw = 0.0, swc = 0.0;
  std::vector<double> c(s0.n.size());
  for (std::size_t j = 0; j < s0.n.size(); ++j) {
    const double mj1 = o1.mu_j.empty() ? 0.0 : o1.mu_j[j];
    c[j] = c_term(s0.n[j], mj1, mu_j2[j]);
    sw += weight(s0.n[j]);
    swc += weight(s0.n[j]) * c[j];
  }
  // N xi2 - w0 r2 = w0 c0 ;  N xi2 + sw r2 = -swc
  const double det = sw + w0;
  if (!(det > 0.0) || !std::isfinite(det)) {
    throw Error(ErrorKind::Degeneracy, "singular second-order closure system");
  }
  const double r2 = (-swc - w0 * c0) / det;
  const double nxi2 = w0 * (r2 + c0);

  ThermoOrder o;
  o.mu = mu2;
  o.mu_j = mu_j2;
  o.xi = nxi2 / params.N;
  o.z_ratio = r2;
  o.z = r2 * s0.z();
  o.n.resize(s0.n.size());
  for (std::size_t j = 0; j < s0.n.size(); ++j) o.n[j] = weight(s0.n[j]) * (r2 + c[j]);
  return o;
}

}  // namespace becmf
