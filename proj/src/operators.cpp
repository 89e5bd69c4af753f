#include "becmf/operators.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace becmf {

LinearOperator::LinearOperator(Grid grid, SparseMatrix matrix) : grid_(std::move(grid)), matrix_(std::move(matrix)) {
  if (static_cast<std::size_t>(matrix_.rows()) != grid_.size() || matrix_.rows() != matrix_.cols()) {
    throw Error(ErrorKind::GridMismatch, "operator dimension does not match grid");
  }
  matrix_.makeCompressed();
  Vec row_abs = Vec::Zero(matrix_.rows());
  Vec diag = Vec::Zero(matrix_.rows());
  for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(matrix_, k); it; ++it) {
      if (it.row() == it.col()) {
        diag[it.row()] += it.value();
      } else {
        row_abs[it.row()] += std::abs(it.value());
      }
    }
  }
  norm_bound_ = (diag.cwiseAbs() + row_abs).maxCoeff();
  lower_bound_ = (diag - row_abs).minCoeff();
}

RealField LinearOperator::apply(const RealField& u) const {
  require_same_grid(grid_, u.grid());
  return RealField(grid_, matrix_ * u.values());
}

SparseMatrix negative_laplacian(const Grid& grid) {
  const auto n = static_cast<std::size_t>(grid.points_per_axis());
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(grid.size() * static_cast<std::size_t>(1 + 2 * grid.dim()));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto idx = grid.unflatten(i);
    const auto row = static_cast<Eigen::Index>(i);
    triplets.emplace_back(row, row, 2.0 * grid.dim() * inv_h2);
    for (int axis = 0; axis < grid.dim(); ++axis) {
      for (int step : {-1, 1}) {
        auto nb = idx;
        nb[axis] += step;
        if (nb[axis] < 0 || static_cast<std::size_t>(nb[axis]) >= n) continue;
        triplets.emplace_back(row, static_cast<Eigen::Index>(grid.flatten(nb)), -inv_h2);
      }
    }
  }
  SparseMatrix m(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(grid.size()));
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

LinearOperator build_hamiltonian(const Grid& grid, const Vec& potential) {
  if (static_cast<std::size_t>(potential.size()) != grid.size()) {
    throw Error(ErrorKind::GridMismatch, "potential does not match grid");
  }
  if (!potential.allFinite()) throw Error(ErrorKind::InvalidArgument, "potential has non-finite entries");
  SparseMatrix m = negative_laplacian(grid);
  for (Eigen::Index i = 0; i < potential.size(); ++i) m.coeffRef(i, i) += potential[i];
  return LinearOperator(grid, std::move(m));
}

LinearOperator build_hamiltonian(const Grid& grid, const RealField& potential) {
  require_same_grid(grid, potential.grid());
  return build_hamiltonian(grid, potential.values());
}

void fix_sign(Vec& v) {
  if (v.size() == 0) return;
  const double peak = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) >= peak * (1.0 - 1e-8)) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Deterministic start block; no RNG state involved.
Eigen::MatrixXd start_block(Eigen::Index n, Eigen::Index p) {
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto bits = splitmix64(static_cast<std::uint64_t>(j) * 0x100000001B3ull + static_cast<std::uint64_t>(i));
      x(i, j) = static_cast<double>(bits >> 11) * 0x1.0p-53 - 0.5;
    }
  }
  return x;
}

double residual_target(const LinearOperator& op, const EigenOptions& opt) {
  double target = opt.rel_tol * op.norm_bound();
  if (opt.abs_tol > 0.0) target = std::min(target, opt.abs_tol);
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * op.norm_bound();
  return std::max(target, floor);
}

void flag_degeneracies(EigenResult& res, double gap) {
  for (std::size_t i = 0; i + 1 < res.values.size(); ++i) {
    if (std::abs(res.values[i + 1] - res.values[i]) < gap) {
      res.degenerate_pairs.emplace_back(static_cast<int>(i), static_cast<int>(i + 1));
    }
  }
}

// Converts Euclidean-unit columns to grid-normalised, sign-fixed fields.
void finalize(EigenResult& res, const Grid& grid, const Eigen::VectorXd& values, const Eigen::MatrixXd& vecs,
              int count, double gap) {
  const double scale = 1.0 / std::sqrt(grid.cell_volume());
  res.values.assign(values.data(), values.data() + count);
  res.vectors.clear();
  for (int k = 0; k < count; ++k) {
    Vec v = vecs.col(k) * scale;
    fix_sign(v);
    res.vectors.emplace_back(grid, std::move(v));
  }
  flag_degeneracies(res, gap);
}

// Euclidean residual norms of (P) M x - lambda x for unit columns.
double max_residual(const SparseMatrix& m, const Eigen::VectorXd& lambda, const Eigen::MatrixXd& x, int count,
                    const Vec* unit_deflate) {
  double worst = 0.0;
  for (int k = 0; k < count; ++k) {
    Vec r = m * x.col(k) - lambda[k] * x.col(k);
    if (unit_deflate) r -= unit_deflate->dot(r) * *unit_deflate;
    worst = std::max(worst, r.norm());
  }
  return worst;
}

EigenResult dense_solve(const LinearOperator& op, int count, const Vec* unit_deflate, const EigenOptions& opt) {
  const Eigen::Index n = static_cast<Eigen::Index>(op.size());
  Eigen::MatrixXd m = op.dense();
  EigenResult res;
  Eigen::VectorXd values;
  Eigen::MatrixXd vecs;
  if (!unit_deflate) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    values = es.eigenvalues().head(count);
    vecs = es.eigenvectors().leftCols(count);
  } else {
    // Householder reflector Q with Q e_0 parallel to the deflation vector;
    // columns 1..n-1 of Q span its orthogonal complement.
    const Vec& u = *unit_deflate;
    Vec w = u;
    w[0] += (u[0] >= 0.0 ? 1.0 : -1.0);
    const double beta = 2.0 / w.squaredNorm();
    const Vec p = beta * (m * w);
    const double kappa = 0.5 * beta * w.dot(p);
    const Vec q = p - kappa * w;
    m.noalias() -= w * q.transpose();
    m.noalias() -= q * w.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.bottomRightCorner(n - 1, n - 1));
    values = es.eigenvalues().head(count);
    vecs = Eigen::MatrixXd::Zero(n, count);
    vecs.bottomRows(n - 1) = es.eigenvectors().leftCols(count);
    const Eigen::RowVectorXd wy = w.transpose() * vecs;
    vecs.noalias() -= beta * w * wy;
  }
  res.max_residual = max_residual(op.matrix(), values, vecs, count, unit_deflate);
  res.iterations = 1;
  finalize(res, op.grid(), values, vecs, count, opt.degeneracy_gap);
  return res;
}

EigenResult subspace_solve(const LinearOperator& op, int count, const Vec* unit_deflate, const EigenOptions& opt,
                           const std::vector<Vec>& initial) {
  const Eigen::Index n = static_cast<Eigen::Index>(op.size());
  const Eigen::Index usable = unit_deflate ? n - 1 : n;
  const Eigen::Index p = std::min<Eigen::Index>(count + std::max(opt.extra_vectors, count / 2), usable);

  const double shift = op.lower_bound() - std::max(1.0, 1e-3 * std::abs(op.lower_bound()));
  SparseMatrix shifted = op.matrix();
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= shift;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted);
  if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::Convergence, "shifted operator factorisation failed");

  Vec w_defl;
  double uw = 0.0;
  if (unit_deflate) {
    w_defl = ldlt.solve(*unit_deflate);
    uw = unit_deflate->dot(w_defl);
  }
  auto project = [&](Eigen::MatrixXd& block) {
    if (!unit_deflate) return;
    const Eigen::RowVectorXd c = unit_deflate->transpose() * block;
    block.noalias() -= *unit_deflate * c;
  };

  Eigen::MatrixXd x = start_block(n, p);
  const double cell = std::sqrt(op.grid().cell_volume());
  for (std::size_t k = 0; k < initial.size() && static_cast<Eigen::Index>(k) < p; ++k) {
    if (initial[k].size() == n) x.col(static_cast<Eigen::Index>(k)) = initial[k] * cell;
  }
  project(x);
  x = Eigen::HouseholderQR<Eigen::MatrixXd>(x).householderQ() * Eigen::MatrixXd::Identity(n, p);

  const double target = residual_target(op, opt);
  Eigen::VectorXd ritz;
  double resid = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opt.max_iterations; ++it) {
    Eigen::MatrixXd y(n, p);
    for (Eigen::Index k = 0; k < p; ++k) {
      Vec col = ldlt.solve(x.col(k));
      if (unit_deflate) col -= (unit_deflate->dot(col) / uw) * w_defl;
      y.col(k) = col;
    }
    project(y);
    Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(y).householderQ() * Eigen::MatrixXd::Identity(n, p);
    const Eigen::MatrixXd mq = op.matrix() * q;
    Eigen::MatrixXd t = q.transpose() * mq;
    t = 0.5 * (t + t.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    ritz = es.eigenvalues();
    x = q * es.eigenvectors();
    resid = max_residual(op.matrix(), ritz, x, count, unit_deflate);
    if (resid <= target) {
      EigenResult res;
      res.max_residual = resid;
      res.iterations = it;
      finalize(res, op.grid(), ritz, x, count, opt.degeneracy_gap);
      return res;
    }
  }
  throw Error(ErrorKind::Convergence, "subspace iteration did not converge; residual attained " +
                                          std::to_string(resid) + " against target " + std::to_string(target));
}

EigenResult dispatch(const LinearOperator& op, int count, const Vec* unit_deflate, const EigenOptions& opt,
                     const std::vector<Vec>& initial) {
  const auto n = op.size();
  const std::size_t usable = unit_deflate ? n - 1 : n;
  if (count < 0 || static_cast<std::size_t>(count) > usable) {
    throw Error(ErrorKind::InvalidArgument, "requested eigenpair count exceeds available dimension");
  }
  if (count == 0) return {};
  if (n <= opt.dense_limit) return dense_solve(op, count, unit_deflate, opt);
  return subspace_solve(op, count, unit_deflate, opt, initial);
}

}  // namespace

EigenResult eigensolve_lowest(const LinearOperator& op, int count, const EigenOptions& options,
                              const std::vector<Vec>& initial) {
  return dispatch(op, count, nullptr, options, initial);
}

EigenResult deflated_eigensolve(const LinearOperator& op, const RealField& deflate, int count,
                                const EigenOptions& options, const std::vector<Vec>& initial) {
  require_same_grid(op.grid(), deflate.grid());
  const double nrm = deflate.values().norm();
  if (!(nrm > 0.0)) throw Error(ErrorKind::InvalidArgument, "deflation vector must be nonzero");
  const Vec unit = deflate.values() / nrm;
  return dispatch(op, count, &unit, options, initial);
}

struct BorderedSolver::Impl {
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  SparseMatrix kkt;
  Eigen::Index n = 0;
  Eigen::Index k = 0;
};

BorderedSolver::BorderedSolver(const SparseMatrix& a, const Eigen::MatrixXd& border) : impl_(std::make_unique<Impl>()) {
  const Eigen::Index n = a.rows();
  const Eigen::Index k = border.cols();
  if (border.rows() != n) throw Error(ErrorKind::InvalidArgument, "border height does not match operator");
  impl_->n = n;
  impl_->k = k;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(a.nonZeros() + 2 * n * k));
  for (Eigen::Index c = 0; c < a.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(a, c); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  }
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (border(i, j) == 0.0) continue;
      trip.emplace_back(i, n + j, border(i, j));
      trip.emplace_back(n + j, i, border(i, j));
    }
  }
  SparseMatrix& kkt = impl_->kkt;
  kkt.resize(n + k, n + k);
  kkt.setFromTriplets(trip.begin(), trip.end());
  kkt.makeCompressed();
  // Prefer diagonal pivots: off-diagonal pivots pull the dense border rows
  // into the factor and fill it in completely.
  impl_->lu.setPivotThreshold(1e-3);
  impl_->lu.compute(kkt);
  if (impl_->lu.info() != Eigen::Success) {
    throw Error(ErrorKind::Degeneracy, "bordered system is singular");
  }
}

BorderedSolver::~BorderedSolver() = default;
BorderedSolver::BorderedSolver(BorderedSolver&&) noexcept = default;
BorderedSolver& BorderedSolver::operator=(BorderedSolver&&) noexcept = default;

std::pair<Vec, Vec> BorderedSolver::solve(const Vec& r, const Vec& c) const {
  Vec rhs(impl_->n + impl_->k);
  rhs << r, c;
  Vec sol = impl_->lu.solve(rhs);
  // One step of iterative refinement against the unfactored system.
  if (sol.allFinite()) sol += impl_->lu.solve(rhs - impl_->kkt * sol);
  if (impl_->lu.info() != Eigen::Success || !sol.allFinite()) {
    throw Error(ErrorKind::Degeneracy, "bordered solve failed");
  }
  return {sol.head(impl_->n), sol.tail(impl_->k)};
}

}  // namespace becmf
