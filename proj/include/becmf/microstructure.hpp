#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "becmf/grid.hpp"

namespace becmf {

/// One Fourier mode A_l e^{i 2 pi l.y}; the conjugate mode at -l is implied.
struct FourierMode {
  std::array<int, 3> wave_vector{0, 0, 0};
  Complex amplitude{0.0, 0.0};
};

/// Zero-mean 1-periodic modulation A of the coupling g = g0 [1 + A(x/eps)],
/// stored as a finite Fourier series over lexicographically positive wave
/// vectors. Cell inverse Laplacians act mode by mode.
class Microstructure {
 public:
  Microstructure(double g0, int dim, std::vector<FourierMode> modes);

  /// A(y) = amplitude * cos(2 pi y^1).
  static Microstructure cosine(double g0, double amplitude, int dim = 1);
  /// A identically zero.
  static Microstructure uniform(double g0, int dim = 1);

  double g0() const noexcept { return g0_; }
  int dim() const noexcept { return dim_; }
  const std::vector<FourierMode>& modes() const noexcept { return modes_; }
  bool is_zero() const noexcept { return modes_.empty(); }

  double eval_A(const Point& y) const;
  /// (-Delta)^{-1} A at y.
  double eval_inv_laplacian_A(const Point& y) const;
  /// grad (Delta^{-2} A) at y.
  Point eval_grad_inv_laplacian_sq_A(const Point& y) const;

  /// Imaginary part of the unsymmetrised Fourier sum; zero up to rounding.
  double eval_A_imag(const Point& y) const;

  /// Sufficient bound sum 2|A_l| on max |A|.
  double amplitude_bound() const noexcept;
  /// max |A| over a uniform cell sampling.
  double sampled_max_abs(int per_axis = 64) const;
  /// True when 1 + A > 0 over the cell.
  bool coupling_positive() const;

  /// g0 [1 + A(x / eps)].
  double coupling_at(const Point& x, double epsilon) const;

 private:
  double g0_;
  int dim_;
  std::vector<FourierMode> modes_;
};

/// ||A||_{-1}^2 = sum_{l != 0} |A_l|^2 / (4 pi^2 |l|^2).
double h_minus_one_norm_sq(const Microstructure& m);

/// Same quantity from midpoint quadrature of <(-Delta)^{-1} A, A> over one
/// cell; agrees with the Fourier sum for trigonometric polynomials.
double h_minus_one_norm_sq_quadrature(const Microstructure& m, int per_axis = 64);

/// Mean of `fn` over the unit cell by midpoint quadrature.
double cell_average(int dim, const std::function<double(const Point&)>& fn, int per_axis = 64);

/// Coupling g(x) = g0 [1 + A(x/eps)] at the grid nodes; constant g0 when
/// `epsilon` is empty. With `require_positive`, g0 > 0 demands g > 0
/// everywhere; g0 = 0 gives the noninteracting problem.
RealField sample_coupling(const Grid& grid, const Microstructure& m, std::optional<double> epsilon,
                          bool require_positive = true);

/// Periodic profile P with known cell mean, used by the oscillatory
/// integral checks.
struct OscillatoryProfile {
  std::string name;
  int dim = 1;
  double mean = 0.0;
  std::function<double(const Point&)> eval;
};

/// P = offset + A.
OscillatoryProfile profile_shifted(const Microstructure& m, double offset = 0.0);
/// P = A (-Delta)^{-1} A with mean ||A||_{-1}^2.
OscillatoryProfile profile_A_inv_laplacian_A(const Microstructure& m);

enum class TestFunction { Gaussian, Bump };

TestFunction parse_test_function(const std::string& name);
const char* to_string(TestFunction f) noexcept;

struct DecayReport {
  std::vector<double> epsilons;
  /// Quadrature of P(x/eps) phi(x).
  std::vector<double> integrals;
  /// Quadrature of (P - <P>)(x/eps) phi(x), i.e. integral - <P> int phi.
  std::vector<double> deviations;
  double phi_integral = 0.0;
  /// Least-squares slope of log|deviation| vs log eps over resolved points;
  /// NaN when fewer than two points are resolved.
  double slope = 0.0;
  int resolved_points = 0;
  /// Every deviation sits below the floating-point resolution floor.
  bool beyond_resolution = false;

  bool passes(double order) const;
};

/// Resolution floor below which a deviation is treated as zero.
inline constexpr double kResolutionFloor = 1e-14;

/// Checks int P(x/eps) phi(x) dx = <P> int phi + O(eps^m) over decreasing
/// `epsilons` (at least four) with tensor-product midpoint quadrature using
/// at least 16 nodes per period of the smallest eps.
DecayReport verify_oscillatory_decay(const OscillatoryProfile& profile, TestFunction phi,
                                     const std::vector<double>& epsilons);

}  // namespace becmf
