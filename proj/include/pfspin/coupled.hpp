#pragma once

#include <functional>
#include <limits>

#include "pfspin/model.hpp"
#include "pfspin/nonlinear.hpp"

namespace pfspin {

/// Iteration accounting shared by the coupled solvers.
struct CoupledStats {
  int global_iters = 0;
  int nl_u = 0;
  int nl_c = 0;
  Index lin_u = 0;
  Index lin_c = 0;
  Index krylov_global = 0;
  bool converged = false;
  double initial_residual = 0.0;
  double final_residual = 0.0;
  SolveAudit audit;

  void add_subproblem(Field f, const NewtonStats& s, bool inexact);
  void merge(const CoupledStats& other);
};

/// Minimize the coupled energy over U with C fixed. The problem keeps
/// references to the model and vectors, which must outlive it.
NonlinearProblem displacement_problem(const PhaseFieldModel& model, const Vector& C);
/// Minimize the coupled energy over C with U fixed.
NonlinearProblem phase_field_problem(const PhaseFieldModel& model, const Vector& U, const Vector& C_prev);

/// max(abs, rel * initial).
inline double stopping_target(double abs_tol, double rel_tol, double initial) {
  return std::max(abs_tol, rel_tol * initial);
}

/// Subproblem configuration used inside a coupled loop. The absolute
/// subproblem tolerance is capped at target / sqrt(2), so that two
/// pre-converged subproblems always imply a converged coupled residual.
NewtonConfig capped_subproblem(NewtonConfig sub, double global_target);

/// Records one iteration of a coupled solver.
struct GlobalIteration {
  int iter = 0;
  double residual_norm = 0.0;  // after the update
  double energy_before = 0.0;
  double energy_after = 0.0;
  double dc_inf = 0.0;
  double du_inf = 0.0;
  double s_norm = 0.0;
  Index krylov_iters = 0;
  Index inner_u = 0;
  Index inner_c = 0;
  double alpha = 1.0;
  double forcing_residual = 0.0;  // ||P J p - s|| from the stored operator products
  double forcing_fresh = -1.0;    // ||P J p - s|| re-applied, when audited
  double forcing_exact = -1.0;    // same with exact block inverses
  double forcing_target = 0.0;
  bool fallback_direction = false;
};

using IterationCallback = std::function<void(const GlobalIteration&)>;

}  // namespace pfspin
