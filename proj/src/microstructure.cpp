#include "becmf/microstructure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

namespace becmf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool lexicographically_positive(const std::array<int, 3>& l, int dim) {
  for (int a = 0; a < dim; ++a) {
    if (l[a] > 0) return true;
    if (l[a] < 0) return false;
  }
  return false;
}

double phase(const FourierMode& m, const Point& y, int dim) {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) s += m.wave_vector[a] * y[a];
  return kTwoPi * s;
}

double wave_norm_sq(const FourierMode& m, int dim) {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) s += static_cast<double>(m.wave_vector[a]) * m.wave_vector[a];
  return s;
}

// sum over modes of 2 Re(c_l A_l e^{i theta}) / (4 pi^2 |l|^2)^power
double mode_sum(const std::vector<FourierMode>& modes, const Point& y, int dim, int power) {
  double s = 0.0;
  for (const auto& m : modes) {
    const double th = phase(m, y, dim);
    const double re = m.amplitude.real() * std::cos(th) - m.amplitude.imag() * std::sin(th);
    s += 2.0 * re / std::pow(kTwoPi * kTwoPi * wave_norm_sq(m, dim), power);
  }
  return s;
}

}  // namespace

Microstructure::Microstructure(double g0, int dim, std::vector<FourierMode> modes)
    : g0_(g0), dim_(dim), modes_(std::move(modes)) {
  if (!(g0 >= 0.0) || !std::isfinite(g0)) throw Error(ErrorKind::InvalidArgument, "base coupling g0 must be nonnegative");
  if (dim < 1 || dim > 3) throw Error(ErrorKind::InvalidArgument, "microstructure dimension must be 1, 2 or 3");
  std::set<std::array<int, 3>> seen;
  for (auto& m : modes_) {
    for (int a = dim; a < 3; ++a) {
      if (m.wave_vector[a] != 0) throw Error(ErrorKind::InvalidArgument, "wave vector has more components than dim");
    }
    if (!lexicographically_positive(m.wave_vector, dim)) {
      throw Error(ErrorKind::InvalidArgument, "wave vectors must be nonzero and lexicographically positive");
    }
    if (!seen.insert(m.wave_vector).second) throw Error(ErrorKind::InvalidArgument, "duplicate wave vector");
    if (!std::isfinite(m.amplitude.real()) || !std::isfinite(m.amplitude.imag())) {
      throw Error(ErrorKind::InvalidArgument, "non-finite Fourier amplitude");
    }
  }
  // Zero amplitudes carry no information.
  std::erase_if(modes_, [](const FourierMode& m) { return m.amplitude == Complex{0.0, 0.0}; });
}

Microstructure Microstructure::cosine(double g0, double amplitude, int dim) {
  if (amplitude == 0.0) return uniform(g0, dim);
  return Microstructure(g0, dim, {FourierMode{{1, 0, 0}, Complex{0.5 * amplitude, 0.0}}});
}

Microstructure Microstructure::uniform(double g0, int dim) { return Microstructure(g0, dim, {}); }

double Microstructure::eval_A(const Point& y) const { return mode_sum(modes_, y, dim_, 0); }

double Microstructure::eval_A_imag(const Point& y) const {
  // Explicit sum over +l and -l modes, imaginary part.
  double s = 0.0;
  for (const auto& m : modes_) {
    const double th = phase(m, y, dim_);
    const Complex plus = m.amplitude * std::polar(1.0, th);
    const Complex minus = std::conj(m.amplitude) * std::polar(1.0, -th);
    s += (plus + minus).imag();
  }
  return s;
}

double Microstructure::eval_inv_laplacian_A(const Point& y) const { return mode_sum(modes_, y, dim_, 1); }

Point Microstructure::eval_grad_inv_laplacian_sq_A(const Point& y) const {
  Point g{0.0, 0.0, 0.0};
  for (const auto& m : modes_) {
    const double th = phase(m, y, dim_);
    const double k2 = kTwoPi * kTwoPi * wave_norm_sq(m, dim_);
    // d/dy 2 Re(A e^{i theta}) = 2 Re(i 2 pi l A e^{i theta})
    const double d = -2.0 * (m.amplitude.real() * std::sin(th) + m.amplitude.imag() * std::cos(th)) / (k2 * k2);
    for (int a = 0; a < dim_; ++a) g[a] += kTwoPi * m.wave_vector[a] * d;
  }
  return g;
}

double Microstructure::amplitude_bound() const noexcept {
  double s = 0.0;
  for (const auto& m : modes_) s += 2.0 * std::abs(m.amplitude);
  return s;
}

double Microstructure::sampled_max_abs(int per_axis) const {
  double worst = 0.0;
  const int total = static_cast<int>(std::pow(per_axis, dim_));
  for (int flat = 0; flat < total; ++flat) {
    Point y{0.0, 0.0, 0.0};
    int rest = flat;
    for (int a = dim_ - 1; a >= 0; --a) {
      y[a] = (rest % per_axis + 0.5) / per_axis;
      rest /= per_axis;
    }
    worst = std::max(worst, std::abs(eval_A(y)));
  }
  return worst;
}

bool Microstructure::coupling_positive() const {
  if (amplitude_bound() < 1.0) return true;
  return sampled_max_abs(dim_ == 3 ? 48 : 256) < 1.0;
}

double Microstructure::coupling_at(const Point& x, double epsilon) const {
  Point y{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) y[a] = x[a] / epsilon;
  return g0_ * (1.0 + eval_A(y));
}

double h_minus_one_norm_sq(const Microstructure& m) {
  // Each listed mode stands for the pair +l, -l.
  double s = 0.0;
  for (const auto& mode : m.modes()) {
    s += 2.0 * std::norm(mode.amplitude) / (kTwoPi * kTwoPi * wave_norm_sq(mode, m.dim()));
  }
  return s;
}

double cell_average(int dim, const std::function<double(const Point&)>& fn, int per_axis) {
  const int total = static_cast<int>(std::pow(per_axis, dim));
  double s = 0.0;
  for (int flat = 0; flat < total; ++flat) {
    Point y{0.0, 0.0, 0.0};
    int rest = flat;
    for (int a = dim - 1; a >= 0; --a) {
      y[a] = (rest % per_axis + 0.5) / per_axis;
      rest /= per_axis;
    }
    s += fn(y);
  }
  return s / total;
}

double h_minus_one_norm_sq_quadrature(const Microstructure& m, int per_axis) {
  return cell_average(
      m.dim(), [&](const Point& y) { return m.eval_inv_laplacian_A(y) * m.eval_A(y); }, per_axis);
}

RealField sample_coupling(const Grid& grid, const Microstructure& m, std::optional<double> epsilon,
                          bool require_positive) {
  if (!epsilon) return RealField(grid, Vec::Constant(static_cast<Eigen::Index>(grid.size()), m.g0()));
  if (!(*epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  if (m.dim() != grid.dim()) throw Error(ErrorKind::InvalidArgument, "microstructure and grid dimensions differ");
  RealField g = sample(grid, [&](const Point& x) { return m.coupling_at(x, *epsilon); });
  // g0 = 0 switches the interaction off; otherwise 1 + A must stay positive
  if (require_positive && (m.g0() > 0.0 ? g.values().minCoeff() <= 0.0 : g.values().minCoeff() < 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "coupling g(x) is not strictly positive; reduce the amplitude of A");
  }
  return g;
}

OscillatoryProfile profile_shifted(const Microstructure& m, double offset) {
  return OscillatoryProfile{offset == 0.0 ? "A" : "const+A", m.dim(), offset,
                            [m, offset](const Point& y) { return offset + m.eval_A(y); }};
}

OscillatoryProfile profile_A_inv_laplacian_A(const Microstructure& m) {
  return OscillatoryProfile{"A*invlap(A)", m.dim(), h_minus_one_norm_sq(m),
                            [m](const Point& y) { return m.eval_A(y) * m.eval_inv_laplacian_A(y); }};
}

TestFunction parse_test_function(const std::string& name) {
  if (name == "gaussian") return TestFunction::Gaussian;
  if (name == "bump") return TestFunction::Bump;
  throw Error(ErrorKind::InvalidArgument, "unknown test function '" + name + "' (expected gaussian or bump)");
}

const char* to_string(TestFunction f) noexcept { return f == TestFunction::Gaussian ? "gaussian" : "bump"; }

bool DecayReport::passes(double order) const {
  if (beyond_resolution) return true;
  return slope >= order;
}

namespace {

double test_function_1d(TestFunction f, double x) {
  if (f == TestFunction::Gaussian) return std::exp(-x * x);
  if (std::abs(x) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - x * x));
}

double support_half_width(TestFunction f) { return f == TestFunction::Gaussian ? 7.0 : 1.0; }

}  // namespace

DecayReport verify_oscillatory_decay(const OscillatoryProfile& profile, TestFunction phi,
                                     const std::vector<double>& epsilons) {
  if (epsilons.size() < 4) throw Error(ErrorKind::InvalidArgument, "at least four epsilon values are required");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon values must be positive");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "epsilon values must be strictly decreasing");
    }
  }
  const int dim = profile.dim;
  const double half = support_half_width(phi);
  const double eps_min = epsilons.back();
  const double h_target = std::min(eps_min / 16.0, 1.0 / 64.0);
  const int nodes = static_cast<int>(std::ceil(2.0 * half / h_target));
  const double h = 2.0 * half / nodes;
  if (std::pow(static_cast<double>(nodes), dim) > 5e7) {
    throw Error(ErrorKind::InvalidArgument, "quadrature too large; use larger epsilon values or lower dimension");
  }

  std::vector<double> axis(static_cast<std::size_t>(nodes));
  std::vector<double> weight1d(static_cast<std::size_t>(nodes));
  for (int i = 0; i < nodes; ++i) {
    axis[static_cast<std::size_t>(i)] = -half + (i + 0.5) * h;
    weight1d[static_cast<std::size_t>(i)] = h * test_function_1d(phi, axis[static_cast<std::size_t>(i)]);
  }

  DecayReport report;
  report.epsilons = epsilons;
  double phi1d = 0.0;
  for (double w : weight1d) phi1d += w;
  report.phi_integral = std::pow(phi1d, dim);

  const long total = static_cast<long>(std::pow(nodes, dim));
  for (double eps : epsilons) {
    double integral = 0.0;
    double deviation = 0.0;
    for (long flat = 0; flat < total; ++flat) {
      Point y{0.0, 0.0, 0.0};
      double w = 1.0;
      long rest = flat;
      for (int a = dim - 1; a >= 0; --a) {
        const auto k = static_cast<std::size_t>(rest % nodes);
        rest /= nodes;
        y[a] = axis[k] / eps;
        w *= weight1d[k];
      }
      if (w == 0.0) continue;
      const double p = profile.eval(y);
      integral += w * p;
      deviation += w * (p - profile.mean);
    }
    report.integrals.push_back(integral);
    report.deviations.push_back(deviation);
  }

  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (std::abs(report.deviations[i]) >= kResolutionFloor) {
      lx.push_back(std::log(epsilons[i]));
      ly.push_back(std::log(std::abs(report.deviations[i])));
    }
  }
  report.resolved_points = static_cast<int>(lx.size());
  report.beyond_resolution = lx.empty();
  if (lx.size() >= 2) {
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    report.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  } else {
    report.slope = std::numeric_limits<double>::quiet_NaN();
    // A single resolved point followed by underflow still shows decay beyond
    // any fixed order.
    report.beyond_resolution = report.beyond_resolution ||
                               (lx.size() == 1 && std::abs(report.deviations.back()) < kResolutionFloor);
  }
  return report;
}

}  // namespace becmf
