#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pfspin/types.hpp"

namespace pfspin {

/// Matrix-free linear map v -> w. `w` is resized by the callee.
class LinearOperator {
 public:
  using ApplyFn = std::function<void(const Vector& v, Vector& w)>;

  LinearOperator() = default;
  LinearOperator(Index dim, ApplyFn fn) : dim_(dim), fn_(std::move(fn)) {}

  /// Wraps a matrix by reference; the matrix must outlive the operator.
  static LinearOperator from_matrix(const SparseMatrix& a);
  static LinearOperator identity(Index dim);

  Index size() const { return dim_; }
  bool empty() const { return !fn_; }
  void apply(const Vector& v, Vector& w) const { fn_(v, w); }
  Vector operator()(const Vector& v) const {
    Vector w;
    fn_(v, w);
    return w;
  }

 private:
  Index dim_ = 0;
  ApplyFn fn_;
};

enum class KrylovMethod { CG, BiCGStab, MINRES, GMRES };

std::string to_string(KrylovMethod m);

/// Stopping rule: ||b - A x|| <= max(rel_tol * ||b||, abs_tol).
struct KrylovSpec {
  KrylovMethod method = KrylovMethod::BiCGStab;
  double rel_tol = 1e-9;
  double abs_tol = 0.0;
  Index max_iters = 10000;
  Index restart = 200;
  /// Empty means unpreconditioned. CG and MINRES need an SPD preconditioner.
  LinearOperator preconditioner;
  /// Recompute b - A x with a fresh operator application before declaring
  /// convergence. Disable for operators that are only approximately linear;
  /// GMRES then reports the residual of the accumulated operator products.
  bool fresh_residual_check = true;
};

struct KrylovResult {
  Index iterations = 0;
  bool converged = false;
  bool breakdown = false;
  double residual_norm = 0.0;
  double target = 0.0;
};

KrylovResult cg(const LinearOperator& a, const Vector& b, Vector& x, const KrylovSpec& spec);
KrylovResult bicgstab(const LinearOperator& a, const Vector& b, Vector& x, const KrylovSpec& spec);
KrylovResult minres(const LinearOperator& a, const Vector& b, Vector& x, const KrylovSpec& spec);
/// Right-preconditioned restarted GMRES (modified Gram-Schmidt, Givens).
KrylovResult gmres(const LinearOperator& a, const Vector& b, Vector& x, const KrylovSpec& spec,
                   std::vector<double>* history = nullptr);

/// Dispatches on spec.method. `x` holds the initial guess on entry.
KrylovResult krylov_solve(const LinearOperator& a, const Vector& b, Vector& x, const KrylovSpec& spec);

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// LU factorization that can be reused for several right-hand sides.
/// Sparse LU with COLAMD ordering, or dense partial-pivot LU below
/// `dense_threshold` unknowns.
class DirectSolver {
 public:
  DirectSolver();
  ~DirectSolver();
  DirectSolver(DirectSolver&&) noexcept;
  DirectSolver& operator=(DirectSolver&&) noexcept;

  static constexpr Index dense_threshold = 2000;

  void compute(const SparseMatrix& a);
  Vector solve(const Vector& b) const;
  Index size() const { return n_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  Index n_ = 0;
};

Vector direct_solve(const SparseMatrix& a, const Vector& b);

/// v -> D^{-1} v. Throws on a zero diagonal entry.
LinearOperator jacobi_preconditioner(const SparseMatrix& a);

/// One V-cycle of plain-aggregation multilevel with damped Jacobi smoothing.
/// Owns a copy of the hierarchy.
LinearOperator aggregation_preconditioner(const SparseMatrix& a, int levels = 10);

enum class PreconditionerKind { None, Jacobi, Aggregation };

LinearOperator make_preconditioner(PreconditionerKind kind, const SparseMatrix& a);

/// MatrixMarket coordinate real general.
void write_matrix_market(const SparseMatrix& a, const std::string& path);

}  // namespace pfspin
