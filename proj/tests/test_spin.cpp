#include "doctest.h"
#include "pfspin/am.hpp"
#include "pfspin/spin.hpp"
#include "support.hpp"

#include <Eigen/LU>

using namespace pfspin;

namespace {

SpinConfig spin_config(SpinMode m) {
  SpinConfig c;
  c.mode = m;
  c.concurrent = false;
  return c;
}

Eigen::MatrixXd dense(const SparseMatrix& a) { return Eigen::MatrixXd(a); }

// A damaged, loaded state where all four blocks are nonzero.
SystemState coupled_state(const PhaseFieldModel& m, std::uint64_t seed) {
  Eigen::Matrix2d e;
  e << 0.3, 0.05, 0.05, -0.1;
  return test::admissible_state(m, e, seed);
}

}  // namespace

TEST_CASE("preconditioned residual vanishes at zero load") {
  test::Patch p = test::stretched_patch(3, 0.0);
  NewtonConfig sub;
  for (bool concurrent : {false, true}) {
    const auto add = build_residual_additive(*p.model, p.state, sub, concurrent);
    CHECK(add.stacked().norm() == 0.0);
  }
  const auto mult = build_residual_multiplicative(*p.model, p.state, sub);
  CHECK(mult.stacked().norm() == 0.0);
}

TEST_CASE("multiplicative correction is one alternate minimization sweep") {
  test::Patch p = test::stretched_patch(4, 0.3);
  NewtonConfig sub;
  sub.variant = NewtonVariant::ND;
  const auto mult = build_residual_multiplicative(*p.model, p.state, sub);
  const SystemState next = am_step(*p.model, p.state, sub);
  CHECK((mult.U_prec - next.U).lpNorm<Eigen::Infinity>() <= 1e-14);
  CHECK((mult.C_prec - next.C).lpNorm<Eigen::Infinity>() <= 1e-14);
  CHECK((mult.s_u - (next.U - p.state.U)).norm() <= 1e-14);
}

TEST_CASE("additive subproblems both start from the current iterate") {
  test::Patch p = test::stretched_patch(4, 0.3);
  const PhaseFieldModel& m = *p.model;
  NewtonConfig sub;
  sub.variant = NewtonVariant::ND;
  sub.eps_rel_sub_nonl = 0.0;
  sub.eps_abs_sub_nonl = 1e-11;
  const auto a = build_residual_additive(m, p.state, sub, true);
  const auto b = build_residual_additive(m, p.state, sub, false);
  CHECK((a.stacked() - b.stacked()).norm() == 0.0);
  CHECK(m.residual_u(a.U_prec, p.state.C).norm() <= 1e-11);
  CHECK(m.residual_c(p.state.U, a.C_prec, p.state.C_prev).norm() <= 1e-11);
}

TEST_CASE("preconditioned Jacobian products match dense block inverses") {
  test::Patch p = test::stretched_patch(3, 0.0);
  const PhaseFieldModel& m = *p.model;
  const SystemState s = coupled_state(m, 7);
  const BlockJacobian j = m.jacobian(s);
  const Index nu = j.num_u();
  const Index nc = j.num_c();
  const Eigen::MatrixXd full = dense(j.monolithic());
  Eigen::MatrixXd lower_blocks = Eigen::MatrixXd::Zero(nu + nc, nu + nc);
  lower_blocks.topLeftCorner(nu, nu) = dense(j.uu);
  lower_blocks.bottomRightCorner(nc, nc) = dense(j.cc);
  const Eigen::MatrixXd diag_blocks = lower_blocks;
  lower_blocks.bottomLeftCorner(nc, nu) = dense(j.cu);
  REQUIRE(dense(j.cu).norm() > 1e-3);

  std::mt19937 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector v = test::random_vector(nu + nc, rng, -1.0, 1.0);
    const Vector add_ref = diag_blocks.lu().solve(full * v);
    const Vector mult_ref = lower_blocks.lu().solve(full * v);
    CHECK((apply_Padd_J(j, v, 1e-12) - add_ref).norm() <= 1e-9 * add_ref.norm());
    CHECK((apply_Pmult_J(j, v, 1e-12) - mult_ref).norm() <= 1e-9 * mult_ref.norm());
  }
  CHECK(apply_Padd_J(j, Vector::Zero(nu + nc), 1e-8).norm() == 0.0);
  CHECK(apply_Pmult_J(j, Vector::Zero(nu + nc), 1e-8).norm() == 0.0);
}

TEST_CASE("preconditioned Jacobian is the identity for decoupled fields") {
  // with no displacement there is no driving force, so J_uc = J_cu = 0
  test::Patch p = test::stretched_patch(3, 0.0);
  const PhaseFieldModel& m = *p.model;
  SystemState s = m.zero_state();
  s.C.setConstant(0.3);
  s.C_prev = s.C;
  const BlockJacobian j = m.jacobian(s);
  REQUIRE(j.uc.norm() == 0.0);
  REQUIRE(j.cu.norm() == 0.0);
  std::mt19937 rng(5);
  const Vector v = test::random_vector(j.size(), rng, -1.0, 1.0);
  CHECK((apply_Padd_J(j, v, 1e-12) - v).norm() <= 1e-9 * v.norm());
  CHECK((apply_Pmult_J(j, v, 1e-12) - v).norm() <= 1e-9 * v.norm());
}

TEST_CASE("spin converges to the alternate minimization solution") {
  // below the load where damage localizes, so the coupled root is unique
  test::Patch p = test::stretched_patch(4, 0.2);
  const PhaseFieldModel& m = *p.model;
  AmConfig am;
  am.variant = AmVariant::ND;
  const double e_am = m.energy(am_solve(m, p.state, am).state).total();
  const double f0 = m.residual(p.state).norm();
  for (auto mode : {SpinMode::Additive, SpinMode::Multiplicative}) {
    CAPTURE(to_string(mode));
    const SpinConfig c = spin_config(mode);
    const SpinResult r = spin_solve(m, p.state, c);
    CHECK(r.stats.converged);
    CHECK(m.residual(r.state).norm() <= std::max(c.eps_abs_glob_nonl, c.eps_rel_glob_nonl * f0));
    CHECK(m.energy(r.state).total() == doctest::Approx(e_am).epsilon(1e-6));
    CHECK(static_cast<int>(r.trace.size()) == r.stats.global_iters);
    CHECK(r.stats.krylov_global > 0);
    for (const auto& g : r.trace) CHECK(g.energy_after <= g.energy_before + 1e-13 * std::abs(g.energy_before));

    SpinConfig abs_only = c;
    abs_only.eps_rel_glob_nonl = 0.0;
    abs_only.eps_abs_glob_nonl = 2.0 * r.stats.final_residual;
    CHECK(spin_solve(m, r.state, abs_only).stats.global_iters == 0);
  }
}

TEST_CASE("forcing audit with tight inner solves") {
  // with near exact block solves the three residual measures coincide
  test::Patch p = test::stretched_patch(4, 0.2);
  for (auto mode : {SpinMode::Additive, SpinMode::Multiplicative}) {
    CAPTURE(to_string(mode));
    SpinConfig c = spin_config(mode);
    c.eps_app_lin = 1e-12;
    c.audit_fresh_forcing = true;
    const SpinResult r = spin_solve(*p.model, p.state, c);
    const SolveAudit& a = r.stats.audit;
    CHECK(a.global_checks == r.stats.global_iters);
    CHECK(a.worst_global_forcing_ratio <= 1.0);
    CHECK(a.exact_violations == 0);
    CHECK(a.fresh_violations == 0);
    for (const auto& g : r.trace) {
      CHECK(g.forcing_exact == doctest::Approx(g.forcing_residual).epsilon(1e-3).scale(g.forcing_target));
      CHECK(g.forcing_fresh == doctest::Approx(g.forcing_exact).epsilon(1e-3).scale(g.forcing_target));
    }
  }
}

TEST_CASE("spin solves a decoupled linear problem in one step") {
  // U fixed at zero and C clamped to 1 on one edge: the phase-field equation
  // is linear and the displacement block is already solved.
  const auto mesh = test::unit_mesh(4);
  PhaseFieldModel m(mesh, test::unit_material());
  DofMap& dofs = m.dofs();
  for (Index i = 0; i < mesh->num_nodes(); ++i) {
    dofs.constrain(dofs.u_dof(i, 0), 0.0);
    dofs.constrain(dofs.u_dof(i, 1), 0.0);
  }
  for (Index i : mesh->node_sets.at("left")) dofs.constrain(dofs.c_dof(i), 1.0);
  SystemState s = m.zero_state();
  m.impose_constraints(s.U, s.C);
  for (auto mode : {SpinMode::Additive, SpinMode::Multiplicative}) {
    SpinConfig c = spin_config(mode);
    c.eps_app_lin = 1e-12;
    c.sub.eps_rel_sub_nonl = 1e-12;
    c.eps_rel_glob_nonl = 1e-9;
    const SpinResult r = spin_solve(m, s, c);
    CHECK(r.stats.global_iters == 1);
    CHECK(r.state.C.maxCoeff() == doctest::Approx(1.0));
  }
}

TEST_CASE("spin config validation") {
  SpinConfig c;
  CHECK(c.within_stability_bound());
  c.eps_app_lin = 0.1;
  CHECK_FALSE(c.within_stability_bound());
  CHECK_NOTHROW(c.validate());
  c.eps_app_lin = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
