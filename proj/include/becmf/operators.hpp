#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <memory>
#include <utility>
#include <vector>

#include "becmf/grid.hpp"

namespace becmf {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Symmetric operator -Delta_h + diag(potential) acting on node vectors.
///
/// Stored sparse; `dense()` materialises it for small grids and tests.
class LinearOperator {
 public:
  LinearOperator(Grid grid, SparseMatrix matrix);

  const Grid& grid() const noexcept { return grid_; }
  const SparseMatrix& matrix() const noexcept { return matrix_; }
  std::size_t size() const noexcept { return grid_.size(); }

  Vec apply(const Vec& u) const { return matrix_ * u; }
  RealField apply(const RealField& u) const;

  /// Infinity-norm bound on the spectral radius.
  double norm_bound() const noexcept { return norm_bound_; }
  /// Gershgorin lower bound on the spectrum.
  double lower_bound() const noexcept { return lower_bound_; }

  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix_); }

 private:
  Grid grid_;
  SparseMatrix matrix_;
  double norm_bound_ = 0.0;
  double lower_bound_ = 0.0;
};

/// Second-order central-difference -Delta_h with homogeneous Dirichlet data.
SparseMatrix negative_laplacian(const Grid& grid);

LinearOperator build_hamiltonian(const Grid& grid, const RealField& potential);
LinearOperator build_hamiltonian(const Grid& grid, const Vec& potential);

struct EigenOptions {
  /// Residual target relative to the operator norm bound.
  double rel_tol = 1e-10;
  /// Optional absolute residual target; the tighter of the two applies.
  double abs_tol = 0.0;
  /// Grids up to this many nodes use a dense symmetric eigendecomposition.
  std::size_t dense_limit = 256;
  int max_iterations = 4000;
  /// Guard vectors carried by the shift-invert subspace iteration.
  int extra_vectors = 8;
  /// Requested eigenvalues closer than this are reported as degenerate.
  double degeneracy_gap = 1e-9;
};

struct EigenResult {
  std::vector<double> values;
  std::vector<RealField> vectors;
  /// Index pairs (i, i+1) of requested modes with |lambda_i - lambda_{i+1}| < gap.
  std::vector<std::pair<int, int>> degenerate_pairs;
  double max_residual = 0.0;
  int iterations = 0;

  bool degenerate() const noexcept { return !degenerate_pairs.empty(); }
};

/// Lowest `count` eigenpairs, ascending, orthonormal in the grid inner
/// product, each with its first dominant component positive.
EigenResult eigensolve_lowest(const LinearOperator& op, int count, const EigenOptions& options = {},
                              const std::vector<Vec>& initial = {});

/// Lowest `count` eigenpairs of P op P restricted to the orthogonal
/// complement of `deflate`, P = I - |d><d| / <d,d>. The trivial mode along
/// `deflate` never appears in the result.
EigenResult deflated_eigensolve(const LinearOperator& op, const RealField& deflate, int count,
                                const EigenOptions& options = {}, const std::vector<Vec>& initial = {});

/// Flips `v` so that its first component of (numerically) largest magnitude
/// is positive.
void fix_sign(Vec& v);

/// Direct solver for the saddle-point system [A B; B^T 0][x; y] = [r; c]
/// with sparse A (n x n) and a dense border B (n x k).
class BorderedSolver {
 public:
  BorderedSolver(const SparseMatrix& a, const Eigen::MatrixXd& border);
  ~BorderedSolver();
  BorderedSolver(BorderedSolver&&) noexcept;
  BorderedSolver& operator=(BorderedSolver&&) noexcept;

  /// Returns (x, y).
  std::pair<Vec, Vec> solve(const Vec& r, const Vec& c) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace becmf
