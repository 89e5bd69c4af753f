#pragma once

#include <vector>

namespace becmf {

struct ThermoParams {
  double beta = 1.0;
  /// Total particle number.
  double N = 1.0;
  /// Number of retained excited states.
  int J = 0;

  void validate() const;
};

/// Order-0 closure state. The multiplier z is kept as log z because
/// e^{beta mu} overflows at low temperature.
struct ThermoState {
  double xi = 1.0;
  double log_z = 0.0;
  std::vector<double> n;
  double mu = 0.0;
  std::vector<double> mu_j;

  double z() const;
  /// N xi + sum n_j - N.
  double constraint_residual(double N) const;
};

/// Order-k (k = 1, 2) coefficients. `z_ratio` is z^(k)/z^(0); `z` is
/// z^(k) itself (may overflow to inf together with z^(0)).
struct ThermoOrder {
  double xi = 0.0;
  double z_ratio = 0.0;
  double z = 0.0;
  std::vector<double> n;
  double mu = 0.0;
  std::vector<double> mu_j;
};

struct ThermoExpansion {
  ThermoParams params;
  ThermoState order0;
  ThermoOrder order1;
  ThermoOrder order2;
};

/// Bose-Einstein occupation (z^{-1} e^{beta mu_j} - 1)^{-1}.
double occupation(double z, double beta, double mu_j);
double occupation_log(double log_z, double beta, double mu_j);

/// Solves the order-0 constraints for (xi, z). Requires mu_j > mu for all j.
ThermoState solve_xi_z_order0(const ThermoParams& params, double mu, const std::vector<double>& mu_j);

/// n_j^(k) from the expanded closure, k in {0, 1, 2}. Orders above 0 read
/// z ratios and eigenvalue coefficients from the matching slice.
std::vector<double> occupation_coeffs(int order, const ThermoExpansion& e);

ThermoOrder solve_xi_z_order1(const ThermoParams& params, const ThermoState& s0, double mu1,
                              const std::vector<double>& mu_j1);

ThermoOrder solve_xi_z_order2(const ThermoParams& params, const ThermoState& s0, const ThermoOrder& o1, double mu2,
                              const std::vector<double>& mu_j2);

}  // namespace becmf
