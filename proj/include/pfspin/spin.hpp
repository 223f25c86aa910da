#pragma once

#include <string>
#include <vector>

#include "pfspin/coupled.hpp"

namespace pfspin {

enum class SpinMode { Additive, Multiplicative };

std::string to_string(SpinMode m);

struct SpinConfig {
  SpinMode mode = SpinMode::Additive;
  double eps_app_lin = 1e-4;
  double eta = 1e-4;
  double eps_rel_glob_nonl = 1e-6;
  double eps_abs_glob_nonl = 1e-7;
  KrylovMethod global_method = KrylovMethod::GMRES;
  Index restart = 200;
  Index global_max_iters = 2000;
  PreconditionerKind inner_preconditioner = PreconditionerKind::Jacobi;
  Index inner_max_iters = 20000;
  int max_outer_iters = 50000;
  double stol = 1e-8;
  /// Run the two additive subproblems on separate threads.
  bool concurrent = true;
  /// Re-apply P J to the accepted direction and record ||P J p - s||.
  bool audit_fresh_forcing = false;
  NewtonConfig sub;
  /// Called after every accepted global iteration.
  IterationCallback on_iteration;

  /// Values above 1e-2 are accepted but outside the range where the
  /// preconditioner action is known to be reliable.
  bool within_stability_bound() const { return eps_app_lin <= 1e-2; }
  void validate() const;
};

/// s = x_prec - x for the nonlinearly preconditioned system.
struct PreconditionedResidual {
  Vector U_prec;
  Vector C_prec;
  Vector s_u;
  Vector s_c;
  NewtonStats u_stats;
  NewtonStats c_stats;

  Vector stacked() const;
};

/// Both subproblems start at (U, C). Optional Jacobians must be assembled at
/// that point; they replace the first Newton assembly of each subproblem.
PreconditionedResidual build_residual_additive(const PhaseFieldModel& model, const SystemState& state,
                                               const NewtonConfig& sub, bool concurrent = true,
                                               const SparseMatrix* j_uu = nullptr, const SparseMatrix* j_cc = nullptr);

/// The phase-field solve uses U_prec; this is one alternate-minimization sweep.
PreconditionedResidual build_residual_multiplicative(const PhaseFieldModel& model, const SystemState& state,
                                                     const NewtonConfig& sub, const SparseMatrix* j_uu = nullptr);

struct InnerStats {
  Index u_iters = 0;
  Index c_iters = 0;
  Index u_solves = 0;
  Index c_solves = 0;
};

/// Approximate inverses of J_uu and J_cc: preconditioned BCGSTAB from a zero
/// guess to relative tolerance `rtol`. Keeps a reference to `j`.
class FieldSolvers {
 public:
  FieldSolvers(const BlockJacobian& j, double rtol, PreconditionerKind kind = PreconditionerKind::Jacobi,
               Index max_iters = 20000);

  const BlockJacobian& jacobian() const { return *j_; }
  Vector solve_uu(const Vector& b, InnerStats* stats = nullptr) const;
  Vector solve_cc(const Vector& b, InnerStats* stats = nullptr) const;

 private:
  Vector solve(const SparseMatrix& a, const LinearOperator& prec, const Vector& b, Index& iters,
               const char* name) const;

  const BlockJacobian* j_;
  double rtol_;
  Index max_iters_;
  LinearOperator prec_u_;
  LinearOperator prec_c_;
};

/// y = blkdiag(J_uu, J_cc)^{-1} J v with approximate block solves.
Vector apply_Padd_J(const FieldSolvers& solvers, const Vector& v, InnerStats* stats = nullptr);
Vector apply_Padd_J(const BlockJacobian& j, const Vector& v, double eps_app_lin);

/// y = [[J_uu, 0], [J_cu, J_cc]]^{-1} J v with approximate block solves.
Vector apply_Pmult_J(const FieldSolvers& solvers, const Vector& v, InnerStats* stats = nullptr);
Vector apply_Pmult_J(const BlockJacobian& j, const Vector& v, double eps_app_lin);

struct SpinResult {
  SystemState state;
  CoupledStats stats;
  std::vector<GlobalIteration> trace;
};

/// ASPIN / MSPIN outer loop. Stops on the coupled residual
/// ||F|| <= max(eps_abs_glob_nonl, eps_rel_glob_nonl ||F0||).
SpinResult spin_solve(const PhaseFieldModel& model, const SystemState& state, const SpinConfig& config);

}  // namespace pfspin
