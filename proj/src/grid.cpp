#include "becmf/grid.hpp"

#include <cmath>
#include <string>

namespace becmf {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::GridMismatch: return "grid_mismatch";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::Degeneracy: return "degeneracy";
    case ErrorKind::OccupancyDivergence: return "occupancy_divergence";
    case ErrorKind::TemperatureRange: return "temperature_range";
    case ErrorKind::UnderResolution: return "under_resolution";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

Grid build_grid(int dim, double half_width, int n) {
  if (dim < 1 || dim > 3) {
    throw Error(ErrorKind::InvalidArgument, "grid dimension must be 1, 2 or 3, got " + std::to_string(dim));
  }
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw Error(ErrorKind::InvalidArgument, "grid half width must be positive");
  }
  if (n < 8 || n % 2 != 0) {
    throw Error(ErrorKind::InvalidArgument,
                "points per axis must be even and at least 8, got " + std::to_string(n));
  }
  Grid g;
  g.dim_ = dim;
  g.half_width_ = half_width;
  g.n_ = n;
  g.h_ = 2.0 * half_width / n;
  g.cell_volume_ = std::pow(g.h_, dim);
  g.size_ = 1;
  for (int a = 0; a < dim; ++a) g.size_ *= static_cast<std::size_t>(n);
  return g;
}

std::array<int, 3> Grid::unflatten(std::size_t flat) const noexcept {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = dim_ - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % static_cast<std::size_t>(n_));
    flat /= static_cast<std::size_t>(n_);
  }
  return idx;
}

std::size_t Grid::flatten(const std::array<int, 3>& idx) const noexcept {
  std::size_t flat = 0;
  for (int a = 0; a < dim_; ++a) flat = flat * static_cast<std::size_t>(n_) + static_cast<std::size_t>(idx[a]);
  return flat;
}

Point Grid::node(std::size_t flat) const noexcept {
  const auto idx = unflatten(flat);
  Point p{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) p[a] = coordinate(idx[a]);
  return p;
}

RealField sample(const Grid& grid, const std::function<double(const Point&)>& fn) {
  RealField f(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) f[i] = fn(grid.node(i));
  return f;
}

void require_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b)) throw Error(ErrorKind::GridMismatch, "fields live on different grids");
}

double inner(const RealField& u, const RealField& v) {
  require_same_grid(u.grid(), v.grid());
  return dot(u.grid(), u.values(), v.values());
}

Complex inner(const ComplexField& u, const ComplexField& v) {
  require_same_grid(u.grid(), v.grid());
  return dot(u.grid(), u.values(), v.values());
}

double norm_sq(const RealField& u) { return inner(u, u); }

double norm_sq(const ComplexField& u) { return u.grid().cell_volume() * u.values().squaredNorm(); }

namespace {

// Stride of `axis` in the flattened node order.
std::size_t axis_stride(const Grid& grid, int axis) {
  std::size_t stride = 1;
  for (int a = grid.dim() - 1; a > axis; --a) stride *= static_cast<std::size_t>(grid.points_per_axis());
  return stride;
}

}  // namespace

double kinetic_energy(const Grid& grid, const Vec& u) {
  const int n = grid.points_per_axis();
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  double sum = 0.0;
  for (int axis = 0; axis < grid.dim(); ++axis) {
    const std::size_t stride = axis_stride(grid, axis);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const int k = grid.unflatten(i)[axis];
      const double here = u[static_cast<Eigen::Index>(i)];
      // Edge to the next node (or to the zero ghost past the last node).
      const double next = (k + 1 < n) ? u[static_cast<Eigen::Index>(i + stride)] : 0.0;
      sum += (next - here) * (next - here);
      if (k == 0) sum += here * here;
    }
  }
  return grid.cell_volume() * inv_h2 * sum;
}

Vec gradient(const Grid& grid, const Vec& u, int axis) {
  const int n = grid.points_per_axis();
  const std::size_t stride = axis_stride(grid, axis);
  const double inv_2h = 0.5 / grid.spacing();
  Vec out(u.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const int k = grid.unflatten(i)[axis];
    const double prev = (k > 0) ? u[static_cast<Eigen::Index>(i - stride)] : 0.0;
    const double next = (k + 1 < n) ? u[static_cast<Eigen::Index>(i + stride)] : 0.0;
    out[static_cast<Eigen::Index>(i)] = (next - prev) * inv_2h;
  }
  return out;
}

}  // namespace becmf
