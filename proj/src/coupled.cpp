#include "pfspin/coupled.hpp"

#include <cmath>

namespace pfspin {

void CoupledStats::add_subproblem(Field f, const NewtonStats& s, bool inexact) {
  if (f == Field::Displacement) {
    nl_u += s.iterations;
    lin_u += s.linear_iterations;
  } else {
    nl_c += s.iterations;
    lin_c += s.linear_iterations;
  }
  audit.absorb(s, inexact);
}

void CoupledStats::merge(const CoupledStats& o) {
  global_iters += o.global_iters;
  nl_u += o.nl_u;
  nl_c += o.nl_c;
  lin_u += o.lin_u;
  lin_c += o.lin_c;
  krylov_global += o.krylov_global;
  audit.merge(o.audit);
}

NonlinearProblem displacement_problem(const PhaseFieldModel& model, const Vector& C) {
  NonlinearProblem p;
  p.dim = model.num_u();
  // C_prev does not enter the U-dependent part of the energy.
  p.energy = [&model, &C](const Vector& U) {
    const auto e = model.energy(U, C, C);
    return e.elastic + e.fracture;
  };
  p.residual = [&model, &C](const Vector& U) { return model.residual_u(U, C); };
  p.jacobian = [&model, &C](const Vector& U) { return model.jacobian_uu(U, C); };
  return p;
}

NonlinearProblem phase_field_problem(const PhaseFieldModel& model, const Vector& U, const Vector& C_prev) {
  NonlinearProblem p;
  p.dim = model.num_c();
  p.energy = [&model, &U, &C_prev](const Vector& C) { return model.energy(U, C, C_prev).total(); };
  p.residual = [&model, &U, &C_prev](const Vector& C) { return model.residual_c(U, C, C_prev); };
  p.jacobian = [&model, &U, &C_prev](const Vector& C) { return model.jacobian_cc(U, C, C_prev); };
  return p;
}

NewtonConfig capped_subproblem(NewtonConfig sub, double global_target) {
  sub.eps_abs_sub_nonl = std::min(sub.eps_abs_sub_nonl, global_target / std::sqrt(2.0));
  return sub;
}

}  // namespace pfspin
