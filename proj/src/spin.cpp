#include "pfspin/spin.hpp"

#include <cmath>
#include <future>

namespace pfspin {

std::string to_string(SpinMode m) { return m == SpinMode::Additive ? "aspin" : "mspin"; }

void SpinConfig::validate() const {
  if (!(eps_app_lin > 0.0) || !(eta > 0.0) || eps_rel_glob_nonl < 0 || eps_abs_glob_nonl < 0 || stol < 0) {
    throw std::invalid_argument("SpinConfig: tolerances must be positive");
  }
  if (restart < 1 || global_max_iters < 1 || inner_max_iters < 1 || max_outer_iters < 0) {
    throw std::invalid_argument("SpinConfig: bad iteration limits");
  }
  sub.validate();
}

Vector PreconditionedResidual::stacked() const {
  Vector s(s_u.size() + s_c.size());
  s << s_u, s_c;
  return s;
}

namespace {

NewtonResult solve_field(Field f, const NonlinearProblem& problem, const Vector& x0, const NewtonConfig& sub) {
  try {
    return newton_solve(problem, x0, sub);
  } catch (const SolverError& e) {
    throw SolverError(std::string(f == Field::Displacement ? "displacement" : "phase-field") + " subproblem: " +
                      e.what());
  }
}

}  // namespace

PreconditionedResidual build_residual_additive(const PhaseFieldModel& model, const SystemState& state,
                                               const NewtonConfig& sub, bool concurrent, const SparseMatrix* j_uu,
                                               const SparseMatrix* j_cc) {
  NonlinearProblem pu = displacement_problem(model, state.C);
  NonlinearProblem pc = phase_field_problem(model, state.U, state.C_prev);
  if (j_uu) pu.initial_jacobian = *j_uu;
  if (j_cc) pc.initial_jacobian = *j_cc;

  auto run_u = [&] { return solve_field(Field::Displacement, pu, state.U, sub); };
  auto run_c = [&] { return solve_field(Field::PhaseField, pc, state.C, sub); };
  NewtonResult ru;
  NewtonResult rc;
  if (concurrent) {
    auto fu = std::async(std::launch::async, run_u);
    try {
      rc = run_c();
    } catch (...) {
      fu.wait();
      throw;
    }
    ru = fu.get();
  } else {
    ru = run_u();
    rc = run_c();
  }

  PreconditionedResidual out;
  out.s_u = ru.x - state.U;
  out.s_c = rc.x - state.C;
  out.U_prec = std::move(ru.x);
  out.C_prec = std::move(rc.x);
  out.u_stats = std::move(ru.stats);
  out.c_stats = std::move(rc.stats);
  return out;
}

PreconditionedResidual build_residual_multiplicative(const PhaseFieldModel& model, const SystemState& state,
                                                     const NewtonConfig& sub, const SparseMatrix* j_uu) {
  NonlinearProblem pu = displacement_problem(model, state.C);
  if (j_uu) pu.initial_jacobian = *j_uu;
  NewtonResult ru = solve_field(Field::Displacement, pu, state.U, sub);
  NewtonResult rc = solve_field(Field::PhaseField, phase_field_problem(model, ru.x, state.C_prev), state.C, sub);

  PreconditionedResidual out;
  out.s_u = ru.x - state.U;
  out.s_c = rc.x - state.C;
  out.U_prec = std::move(ru.x);
  out.C_prec = std::move(rc.x);
  out.u_stats = std::move(ru.stats);
  out.c_stats = std::move(rc.stats);
  return out;
}

FieldSolvers::FieldSolvers(const BlockJacobian& j, double rtol, PreconditionerKind kind, Index max_iters)
    : j_(&j), rtol_(rtol), max_iters_(max_iters) {
  prec_u_ = make_preconditioner(kind, j.uu);
  prec_c_ = make_preconditioner(kind, j.cc);
}

Vector FieldSolvers::solve(const SparseMatrix& a, const LinearOperator& prec, const Vector& b, Index& iters,
                           const char* name) const {
  Vector x = Vector::Zero(b.size());
  if (b.isZero(0.0)) return x;
  KrylovSpec spec;
  spec.method = KrylovMethod::BiCGStab;
  spec.rel_tol = rtol_;
  spec.abs_tol = 0.0;
  spec.max_iters = max_iters_;
  spec.preconditioner = prec;
  const auto r = bicgstab(LinearOperator::from_matrix(a), b, x, spec);
  iters += r.iterations;
  if (!r.converged) {
    throw SolverError(std::string("preconditioner application: ") + name + " solve " +
                      (r.breakdown ? "broke down" : "did not converge"));
  }
  return x;
}

Vector FieldSolvers::solve_uu(const Vector& b, InnerStats* stats) const {
  Index it = 0;
  Vector x = solve(j_->uu, prec_u_, b, it, "J_uu");
  if (stats) {
    stats->u_iters += it;
    ++stats->u_solves;
  }
  return x;
}

Vector FieldSolvers::solve_cc(const Vector& b, InnerStats* stats) const {
  Index it = 0;
  Vector x = solve(j_->cc, prec_c_, b, it, "J_cc");
  if (stats) {
    stats->c_iters += it;
    ++stats->c_solves;
  }
  return x;
}

Vector apply_Padd_J(const FieldSolvers& solvers, const Vector& v, InnerStats* stats) {
  const auto& j = solvers.jacobian();
  Vector w;
  j.apply(v, w);
  Vector y(j.size());
  y.head(j.num_u()) = solvers.solve_uu(w.head(j.num_u()), stats);
  y.tail(j.num_c()) = solvers.solve_cc(w.tail(j.num_c()), stats);
  return y;
}

Vector apply_Pmult_J(const FieldSolvers& solvers, const Vector& v, InnerStats* stats) {
  const auto& j = solvers.jacobian();
  Vector w;
  j.apply(v, w);
  Vector y(j.size());
  y.head(j.num_u()) = solvers.solve_uu(w.head(j.num_u()), stats);
  const Vector z = w.tail(j.num_c()) - j.cu * y.head(j.num_u());
  y.tail(j.num_c()) = solvers.solve_cc(z, stats);
  return y;
}

Vector apply_Padd_J(const BlockJacobian& j, const Vector& v, double eps_app_lin) {
  return apply_Padd_J(FieldSolvers(j, eps_app_lin), v);
}

Vector apply_Pmult_J(const BlockJacobian& j, const Vector& v, double eps_app_lin) {
  return apply_Pmult_J(FieldSolvers(j, eps_app_lin), v);
}

namespace {
constexpr double kSubproblemForcing = 1e-2;

// P J v with LU block inverses, for auditing only.
Vector exact_PJ(const BlockJacobian& j, const Vector& v, bool additive) {
  DirectSolver lu_u, lu_c;
  lu_u.compute(j.uu);
  lu_c.compute(j.cc);
  Vector w;
  j.apply(v, w);
  Vector y(j.size());
  y.head(j.num_u()) = lu_u.solve(w.head(j.num_u()));
  const Vector z = additive ? Vector(w.tail(j.num_c())) : Vector(w.tail(j.num_c()) - j.cu * y.head(j.num_u()));
  y.tail(j.num_c()) = lu_c.solve(z);
  return y;
}
}  // namespace

SpinResult spin_solve(const PhaseFieldModel& model, const SystemState& state, const SpinConfig& config) {
  config.validate();
  SpinResult out;
  out.state = state;
  SystemState& s = out.state;
  CoupledStats& st = out.stats;
  const Index nu = model.num_u();
  const Index nc = model.num_c();
  const Vector& c_prev = state.C_prev;

  auto stack = [&](const Vector& u, const Vector& c) {
    Vector x(nu + nc);
    x << u, c;
    return x;
  };
  auto merit = [&](const Vector& x) { return model.energy(x.head(nu), x.tail(nc), c_prev).total(); };
  auto gradient = [&](const Vector& x) {
    const Vector u = x.head(nu);
    const Vector c = x.tail(nc);
    return model.residual(u, c, c_prev);
  };

  Vector x = stack(s.U, s.C);
  Vector f = gradient(x);
  double fnorm = f.norm();
  double energy = merit(x);
  st.initial_residual = fnorm;
  const double target = stopping_target(config.eps_abs_glob_nonl, config.eps_rel_glob_nonl, fnorm);
  NewtonConfig sub = capped_subproblem(config.sub, target);
  sub.variant = NewtonVariant::INK;
  const bool inexact = true;

  LineSearchOptions ls;
  ls.c1 = sub.wolfe_c1;
  ls.c2 = sub.wolfe_c2;
  ls.max_evals = sub.max_line_search_evals;
  ls.min_step = sub.min_step;

  for (int k = 1; fnorm > target; ++k) {
    if (k > config.max_outer_iters) {
      st.final_residual = fnorm;
      throw SolverError(to_string(config.mode) + ": no convergence in " + std::to_string(config.max_outer_iters) +
                        " iterations");
    }
    GlobalIteration rec;
    rec.iter = k;
    rec.energy_before = energy;

    BlockJacobian jac;
    jac.uu = model.jacobian_uu(s.U, s.C);
    jac.cc = model.jacobian_cc(s.U, s.C, c_prev);
    jac.cu = model.jacobian_cu(s.U, s.C);
    jac.uc = SparseMatrix(jac.cu.transpose());

    // Near the global target a fixed subproblem tolerance leaves s with an
    // error comparable to s itself, and the outer iteration stalls.
    NewtonConfig step_sub = sub;
    step_sub.eps_abs_sub_nonl = std::min(sub.eps_abs_sub_nonl, kSubproblemForcing * fnorm);
    const PreconditionedResidual pr =
        config.mode == SpinMode::Additive
            ? build_residual_additive(model, s, step_sub, config.concurrent, &jac.uu, &jac.cc)
            : build_residual_multiplicative(model, s, step_sub, &jac.uu);
    st.add_subproblem(Field::Displacement, pr.u_stats, inexact);
    st.add_subproblem(Field::PhaseField, pr.c_stats, inexact);
    const Vector rhs = pr.stacked();
    rec.s_norm = rhs.norm();
    if (rec.s_norm == 0.0) {
      st.final_residual = fnorm;
      throw SolverError(to_string(config.mode) + ": preconditioned residual vanished at |F| = " +
                        std::to_string(fnorm));
    }

    const FieldSolvers solvers(jac, config.eps_app_lin, config.inner_preconditioner, config.inner_max_iters);
    InnerStats inner;
    const bool additive = config.mode == SpinMode::Additive;
    const LinearOperator pj(nu + nc, [&](const Vector& v, Vector& w) {
      w = additive ? apply_Padd_J(solvers, v, &inner) : apply_Pmult_J(solvers, v, &inner);
    });

    KrylovSpec spec;
    spec.method = config.global_method;
    spec.rel_tol = config.eta;
    spec.abs_tol = 0.0;
    spec.restart = config.restart;
    spec.max_iters = config.global_max_iters;
    spec.fresh_residual_check = false;
    Vector p = Vector::Zero(nu + nc);
    KrylovResult kr;
    if (spec.method == KrylovMethod::GMRES) {
      kr = gmres(pj, rhs, p, spec);
    } else {
      spec.fresh_residual_check = true;
      kr = krylov_solve(pj, rhs, p, spec);
    }
    rec.krylov_iters = kr.iterations;
    rec.forcing_residual = kr.residual_norm;
    rec.forcing_target = config.eta * rec.s_norm;
    st.krylov_global += kr.iterations;
    if (!kr.converged) {
      st.final_residual = fnorm;
      throw SolverError(to_string(config.mode) + ": global " + to_string(spec.method) + " did not converge (" +
                        std::to_string(kr.residual_norm) + " > " + std::to_string(kr.target) + ")");
    }
    st.audit.worst_global_forcing_ratio =
        std::max(st.audit.worst_global_forcing_ratio, rec.forcing_residual / rec.forcing_target);
    if (config.audit_fresh_forcing) {
      InnerStats scratch;
      rec.forcing_fresh =
          ((additive ? apply_Padd_J(solvers, p, &scratch) : apply_Pmult_J(solvers, p, &scratch)) - rhs).norm();
      rec.forcing_exact = (exact_PJ(jac, p, additive) - rhs).norm();
      auto& a = st.audit;
      ++a.global_checks;
      a.worst_fresh_ratio = std::max(a.worst_fresh_ratio, rec.forcing_fresh / rec.forcing_target);
      a.worst_exact_ratio = std::max(a.worst_exact_ratio, rec.forcing_exact / rec.forcing_target);
      if (rec.forcing_fresh > rec.forcing_target) ++a.fresh_violations;
      if (rec.forcing_exact > rec.forcing_target) ++a.exact_violations;
    }

    if (!(p.dot(f) < 0.0) && rhs.dot(f) < 0.0) {
      // The subproblem corrections are a descent direction whenever each
      // field solve lowered the energy from the current iterate.
      p = rhs;
      rec.fallback_direction = true;
    } else if (!(p.dot(f) < 0.0)) {
      // Inexact Newton direction on the monolithic Jacobian.
      const SparseMatrix mono = jac.monolithic();
      KrylovSpec ns;
      ns.method = KrylovMethod::GMRES;
      ns.rel_tol = config.eta;
      ns.restart = config.restart;
      ns.max_iters = config.global_max_iters;
      ns.preconditioner = jacobi_preconditioner(mono);
      Vector d = Vector::Zero(nu + nc);
      const Vector minus_f = -f;
      gmres(LinearOperator::from_matrix(mono), minus_f, d, ns);
      p = ensure_descent(p, f, d);
      rec.fallback_direction = true;
    }

    const auto res = line_search_cubic(merit, gradient, x, p, ls, energy, &f);
    if (!res.success) {
      st.final_residual = fnorm;
      throw SolverError(to_string(config.mode) + ": line search failed after " + std::to_string(res.evaluations) +
                        " evaluations");
    }
    const Vector dx = res.alpha * p;
    x += dx;
    f = res.grad;
    fnorm = f.norm();
    energy = res.f;
    s.U = x.head(nu);
    s.C = x.tail(nc);
    ++st.global_iters;
    ++st.audit.accepted_steps;
    if (res.approximate) ++st.audit.approximate_wolfe_steps;
    st.audit.count_merit(rec.energy_before, energy);

    st.lin_u += inner.u_iters;
    st.lin_c += inner.c_iters;
    rec.inner_u = inner.u_iters;
    rec.inner_c = inner.c_iters;
    rec.alpha = res.alpha;
    rec.residual_norm = fnorm;
    rec.energy_after = energy;
    rec.du_inf = dx.head(nu).lpNorm<Eigen::Infinity>();
    rec.dc_inf = dx.tail(nc).lpNorm<Eigen::Infinity>();
    out.trace.push_back(rec);
    if (config.on_iteration) config.on_iteration(rec);

    if (fnorm > target && dx.norm() <= config.stol * x.norm()) {
      st.final_residual = fnorm;
      throw SolverError(to_string(config.mode) + ": stagnated at |F| = " + std::to_string(fnorm));
    }
  }
  st.converged = true;
  st.final_residual = fnorm;
  return out;
}

}  // namespace pfspin
