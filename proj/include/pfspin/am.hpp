#pragma once

#include <string>
#include <vector>

#include "pfspin/coupled.hpp"

namespace pfspin {

enum class AmVariant { ND, NK, INK, ST };

std::string to_string(AmVariant v);

struct AmConfig {
  AmVariant variant = AmVariant::INK;
  double eps_rel_glob_nonl = 1e-6;
  double eps_abs_glob_nonl = 1e-7;
  double eps_c_diff = 1e-4;
  double disp_diff_tol = 1e-12;
  int max_outer_iters = 50000;
  /// Relative step size below which a non-converged iteration counts as stagnation.
  double stol = 1e-8;
  NewtonConfig sub;
  /// Called after every accepted global iteration.
  IterationCallback on_iteration;

  /// Subproblem Newton settings implied by the variant (ST uses ND).
  NewtonConfig subproblem_config() const;
  void validate() const;
};

/// One alternate-minimization sweep: U at fixed C, then C at the new U.
/// `sub` is used verbatim for both subproblems.
SystemState am_step(const PhaseFieldModel& model, const SystemState& state, const NewtonConfig& sub,
                    CoupledStats* stats = nullptr);

struct AmResult {
  SystemState state;
  CoupledStats stats;
  std::vector<GlobalIteration> trace;
};

/// Throws SolverError when max_outer_iters is exceeded, on stagnation, or
/// when a subproblem fails (message tagged with the field).
AmResult am_solve(const PhaseFieldModel& model, const SystemState& state, const AmConfig& config);

}  // namespace pfspin
