#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pfspin/linalg.hpp"
#include "pfspin/types.hpp"

namespace pfspin {

/// Raised when a nonlinear or linear solve cannot meet its contract.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NewtonVariant { ND, NK, INK };

std::string to_string(NewtonVariant v);

struct NewtonConfig {
  NewtonVariant variant = NewtonVariant::INK;
  double eps_abs_sub_nonl = 1e-7;
  double eps_rel_sub_nonl = 1e-6;
  double eps_abs_lin = 1e-9;
  double eps_rel_lin = 1e-9;
  double eta = 1e-4;
  int max_iters = 100;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  int max_line_search_evals = 40;
  double min_step = 1e-12;
  KrylovMethod krylov = KrylovMethod::BiCGStab;
  Index krylov_max_iters = 20000;
  PreconditionerKind preconditioner = PreconditionerKind::Jacobi;

  void validate() const;
};

/// R(x) = 0 where R is the gradient of the merit f. Dirichlet dofs carry a
/// zero residual and a unit Jacobian row.
struct NonlinearProblem {
  Index dim = 0;
  std::function<double(const Vector&)> energy;
  std::function<Vector(const Vector&)> residual;
  std::function<SparseMatrix(const Vector&)> jacobian;
  /// Jacobian already assembled at the initial iterate; used for the first step.
  std::optional<SparseMatrix> initial_jacobian;
};

struct LineSearchOptions {
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_evals = 40;
  double min_step = 1e-12;
  double alpha_max = 4.0;
  /// Relative energy resolution. Trial points whose energy change is below
  /// this (times |f0|) cannot be ranked by f, so the curvature test decides.
  double energy_noise = 1e-13;
};

struct LineSearchResult {
  double alpha = 0.0;
  double f = 0.0;
  Vector grad;
  int evaluations = 0;
  bool success = false;
  /// Accepted on the derivative test because f changes were at roundoff level.
  bool approximate = false;
};

/// Strong-Wolfe search along p starting with alpha = 1: expansion/bracketing
/// followed by zoom with safeguarded cubic interpolation. Throws SolverError
/// if p is not a descent direction.
LineSearchResult line_search_cubic(const std::function<double(const Vector&)>& f,
                                   const std::function<Vector(const Vector&)>& grad, const Vector& x, const Vector& p,
                                   const LineSearchOptions& opts, std::optional<double> f0 = std::nullopt,
                                   const Vector* g0 = nullptr);

/// Returns p if it is a descent direction for grad, else the fallback if that
/// one is, else -grad.
Vector ensure_descent(const Vector& p, const Vector& grad, const Vector& newton_fallback);

struct NewtonIteration {
  int iter = 0;
  double residual_norm = 0.0;
  double alpha = 0.0;
  Index linear_iters = 0;
  double linear_residual = 0.0;  // fresh ||J p + R||
  double linear_target = 0.0;
  double merit_before = 0.0;
  double merit_after = 0.0;
  bool approximate_wolfe = false;
};

struct NewtonStats {
  int iterations = 0;
  Index linear_iterations = 0;
  bool converged = false;
  double initial_residual = 0.0;
  double final_residual = 0.0;
  std::vector<NewtonIteration> trace;
};

struct NewtonResult {
  Vector x;
  NewtonStats stats;
};

/// Newton with direct (ND), tight Krylov (NK) or forcing-term (INK) linear
/// solves and strong-Wolfe globalization. Stops when
/// ||R|| <= max(eps_abs_sub_nonl, eps_rel_sub_nonl ||R(x0)||).
NewtonResult newton_solve(const NonlinearProblem& problem, const Vector& x0, const NewtonConfig& config);

/// Aggregated checks over many solves, used by the coupled drivers.
struct SolveAudit {
  /// Energy rose by more than the resolution kMeritNoise * |f|.
  Index merit_increases = 0;
  /// Energy rose, but only at roundoff level.
  Index roundoff_increases = 0;
  Index approximate_wolfe_steps = 0;
  Index accepted_steps = 0;
  double worst_forcing_ratio = 0.0;  // max ||J p + R|| / target over inexact solves
  double worst_global_forcing_ratio = 0.0;  // Arnoldi residual / (eta ||s||)
  // With audit_fresh_forcing: ||P J p - s|| recomputed with the configured
  // inner solves and with exact block inverses.
  Index global_checks = 0;
  Index fresh_violations = 0;
  Index exact_violations = 0;
  double worst_fresh_ratio = 0.0;
  double worst_exact_ratio = 0.0;

  static constexpr double kMeritNoise = 1e-13;

  void count_merit(double before, double after);
  void absorb(const NewtonStats& s, bool inexact);
  void merge(const SolveAudit& other);
};

}  // namespace pfspin
