#include "pfspin/am.hpp"

#include <cmath>

namespace pfspin {

std::string to_string(AmVariant v) {
  switch (v) {
    case AmVariant::ND: return "am-nd";
    case AmVariant::NK: return "am-nk";
    case AmVariant::INK: return "am-ink";
    case AmVariant::ST: return "am-st";
  }
  return "?";
}

NewtonConfig AmConfig::subproblem_config() const {
  NewtonConfig c = sub;
  switch (variant) {
    case AmVariant::ND:
    case AmVariant::ST: c.variant = NewtonVariant::ND; break;
    case AmVariant::NK: c.variant = NewtonVariant::NK; break;
    case AmVariant::INK: c.variant = NewtonVariant::INK; break;
  }
  return c;
}

void AmConfig::validate() const {
  if (eps_rel_glob_nonl < 0 || eps_abs_glob_nonl < 0 || eps_c_diff < 0 || disp_diff_tol < 0 || stol < 0) {
    throw std::invalid_argument("AmConfig: negative tolerance");
  }
  if (max_outer_iters < 0) throw std::invalid_argument("AmConfig: negative iteration limit");
  sub.validate();
}

SystemState am_step(const PhaseFieldModel& model, const SystemState& state, const NewtonConfig& sub,
                    CoupledStats* stats) {
  const bool inexact = sub.variant == NewtonVariant::INK;
  SystemState next = state;
  try {
    auto r = newton_solve(displacement_problem(model, state.C), state.U, sub);
    next.U = std::move(r.x);
    if (stats) stats->add_subproblem(Field::Displacement, r.stats, inexact);
  } catch (const SolverError& e) {
    throw SolverError(std::string("displacement subproblem: ") + e.what());
  }
  try {
    auto r = newton_solve(phase_field_problem(model, next.U, state.C_prev), state.C, sub);
    next.C = std::move(r.x);
    if (stats) stats->add_subproblem(Field::PhaseField, r.stats, inexact);
  } catch (const SolverError& e) {
    throw SolverError(std::string("phase-field subproblem: ") + e.what());
  }
  return next;
}

AmResult am_solve(const PhaseFieldModel& model, const SystemState& state, const AmConfig& config) {
  config.validate();
  AmResult out;
  out.state = state;
  SystemState& s = out.state;
  CoupledStats& st = out.stats;

  double fnorm = model.residual(s).norm();
  st.initial_residual = fnorm;
  const double target = stopping_target(config.eps_abs_glob_nonl, config.eps_rel_glob_nonl, fnorm);
  const NewtonConfig sub = capped_subproblem(config.subproblem_config(), target);
  double energy = model.energy(s).total();

  if (fnorm <= target) {
    st.converged = true;
    st.final_residual = fnorm;
    return out;
  }
  for (int k = 1;; ++k) {
    if (k > config.max_outer_iters) {
      st.final_residual = fnorm;
      throw SolverError("alternate minimization: no convergence in " + std::to_string(config.max_outer_iters) +
                        " iterations");
    }
    const int nl_u = st.nl_u;
    const int nl_c = st.nl_c;
    const Index lin_u = st.lin_u;
    const Index lin_c = st.lin_c;
    SystemState next = am_step(model, s, sub, &st);
    ++st.global_iters;

    GlobalIteration rec;
    rec.iter = k;
    rec.energy_before = energy;
    rec.dc_inf = (next.C - s.C).lpNorm<Eigen::Infinity>();
    rec.du_inf = (next.U - s.U).lpNorm<Eigen::Infinity>();
    rec.inner_u = st.lin_u - lin_u;
    rec.inner_c = st.lin_c - lin_c;
    const double step = std::sqrt((next.U - s.U).squaredNorm() + (next.C - s.C).squaredNorm());
    const double size = std::sqrt(next.U.squaredNorm() + next.C.squaredNorm());
    s = std::move(next);
    fnorm = model.residual(s).norm();
    energy = model.energy(s).total();
    rec.residual_norm = fnorm;
    rec.energy_after = energy;
    out.trace.push_back(rec);
    if (config.on_iteration) config.on_iteration(rec);

    const bool done = config.variant == AmVariant::ST
                          ? rec.dc_inf <= config.eps_c_diff && rec.du_inf <= config.disp_diff_tol
                          : fnorm <= target;
    if (done) break;
    if (step <= config.stol * size && st.nl_u == nl_u && st.nl_c == nl_c) {
      st.final_residual = fnorm;
      throw SolverError("alternate minimization: stagnated at |F| = " + std::to_string(fnorm));
    }
  }
  st.converged = true;
  st.final_residual = fnorm;
  return out;
}

}  // namespace pfspin
