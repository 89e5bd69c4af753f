#pragma once

#include <Eigen/Core>

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>

#include "becmf/error.hpp"

namespace becmf {

using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Point in up to three spatial dimensions; unused trailing axes are zero.
using Point = std::array<double, 3>;

/// Uniform cell-centred grid on the box [-L, L]^dim.
///
/// Node i along an axis sits at -L + (i + 1/2) h with h = 2L/n, so the
/// homogeneous Dirichlet boundary lies outside the node set. Flattened node
/// order is row-major: axis 0 varies slowest.
class Grid {
 public:
  Grid() = default;

  int dim() const noexcept { return dim_; }
  double half_width() const noexcept { return half_width_; }
  int points_per_axis() const noexcept { return n_; }
  double spacing() const noexcept { return h_; }
  std::size_t size() const noexcept { return size_; }

  /// Quadrature weight h^dim.
  double cell_volume() const noexcept { return cell_volume_; }

  double coordinate(int index) const noexcept {
    return -half_width_ + (index + 0.5) * h_;
  }

  /// Per-axis indices of flattened node `flat`.
  std::array<int, 3> unflatten(std::size_t flat) const noexcept;
  std::size_t flatten(const std::array<int, 3>& idx) const noexcept;

  Point node(std::size_t flat) const noexcept;

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  friend Grid build_grid(int dim, double half_width, int n);

  int dim_ = 0;
  double half_width_ = 0.0;
  int n_ = 0;
  double h_ = 0.0;
  double cell_volume_ = 0.0;
  std::size_t size_ = 0;
};

/// Validates the arguments and builds the grid; throws InvalidArgument for
/// dim outside {1,2,3}, nonpositive L, odd n or n < 8.
Grid build_grid(int dim, double half_width, int n);

/// Scalar field sampled at the nodes of a grid.
template <typename Scalar>
class Field {
 public:
  using Values = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Field() = default;
  explicit Field(const Grid& grid) : grid_(grid), values_(Values::Zero(grid.size())) {}
  Field(const Grid& grid, Values values);

  const Grid& grid() const noexcept { return grid_; }
  const Values& values() const noexcept { return values_; }
  Values& values() noexcept { return values_; }

  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  Scalar operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  Scalar& operator[](std::size_t i) { return values_[static_cast<Eigen::Index>(i)]; }

 private:
  Grid grid_;
  Values values_;
};

using RealField = Field<double>;
using ComplexField = Field<Complex>;

template <typename Scalar>
Field<Scalar>::Field(const Grid& grid, Values values) : grid_(grid), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.size()) != grid_.size()) {
    throw Error(ErrorKind::GridMismatch, "field value count does not match grid node count");
  }
}

/// Samples `fn` at every node.
RealField sample(const Grid& grid, const std::function<double(const Point&)>& fn);

void require_same_grid(const Grid& a, const Grid& b);

/// L2 inner product sum conj(u) v h^dim.
double inner(const RealField& u, const RealField& v);
Complex inner(const ComplexField& u, const ComplexField& v);
double norm_sq(const RealField& u);
double norm_sq(const ComplexField& u);

/// Weighted inner product on raw node vectors of `grid`.
inline double dot(const Grid& grid, const Vec& u, const Vec& v) {
  return grid.cell_volume() * u.dot(v);
}
inline Complex dot(const Grid& grid, const CVec& u, const CVec& v) {
  return grid.cell_volume() * u.dot(v);  // Eigen conjugates the left operand
}

/// Weighted integral of a node vector.
inline double integrate(const Grid& grid, const Vec& u) { return grid.cell_volume() * u.sum(); }

/// Dirichlet energy sum |grad_h u|^2 h^dim with zero ghost values, i.e.
/// <u, -Delta_h u> evaluated in gradient form.
double kinetic_energy(const Grid& grid, const Vec& u);

/// Central-difference gradient component along `axis`, zero outside the box.
Vec gradient(const Grid& grid, const Vec& u, int axis);

}  // namespace becmf
