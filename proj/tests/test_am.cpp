#include "doctest.h"
#include "pfspin/am.hpp"
#include "pfspin/driver.hpp"
#include "support.hpp"

using namespace pfspin;

namespace {

AmConfig am_config(AmVariant v) {
  AmConfig c;
  c.variant = v;
  return c;
}

}  // namespace

TEST_CASE("am_step at zero load returns the zero state") {
  test::Patch p = test::stretched_patch(3, 0.0);
  const SystemState next = am_step(*p.model, p.state, am_config(AmVariant::ND).subproblem_config());
  CHECK(next.U.norm() == 0.0);
  CHECK(next.C.norm() == 0.0);
  const AmResult r = am_solve(*p.model, p.state, am_config(AmVariant::INK));
  CHECK(r.stats.global_iters == 0);
}

TEST_CASE("am_step solves each field but not the coupled system") {
  // one row of interior nodes keeps the displacement free
  test::Patch p = test::stretched_patch(2, 0.3);
  const PhaseFieldModel& m = *p.model;
  NewtonConfig sub = am_config(AmVariant::ND).subproblem_config();
  sub.eps_rel_sub_nonl = 0.0;
  sub.eps_abs_sub_nonl = 1e-10;
  const SystemState next = am_step(m, p.state, sub);
  CHECK(m.residual_u(next.U, p.state.C).norm() <= 1e-10);
  CHECK(m.residual_c(next.U, next.C, next.C_prev).norm() <= 1e-10);
  CHECK(m.residual(next).norm() > 1e-6);
  CHECK(next.C.maxCoeff() > 0.1);
}

TEST_CASE("half steps do not increase the energy") {
  test::Patch p = test::stretched_patch(4, 0.3);
  const PhaseFieldModel& m = *p.model;
  const NewtonConfig sub = am_config(AmVariant::INK).subproblem_config();
  SystemState s = p.state;
  for (int k = 0; k < 5; ++k) {
    const double e0 = m.energy(s).total();
    const SystemState next = am_step(m, s, sub);
    const double e_half = m.energy(next.U, s.C, s.C_prev).total();
    const double e1 = m.energy(next).total();
    CHECK(e_half <= e0 * (1 + 1e-13));
    CHECK(e1 <= e_half * (1 + 1e-13));
    s = next;
  }
}

TEST_CASE("am_solve stops on the coupled residual") {
  test::Patch p = test::stretched_patch(4, 0.3);
  const PhaseFieldModel& m = *p.model;
  const double f0 = m.residual(p.state).norm();
  for (auto v : {AmVariant::ND, AmVariant::NK, AmVariant::INK}) {
    CAPTURE(to_string(v));
    const AmConfig c = am_config(v);
    const AmResult r = am_solve(m, p.state, c);
    CHECK(r.stats.converged);
    CHECK(m.residual(r.state).norm() <= std::max(c.eps_abs_glob_nonl, c.eps_rel_glob_nonl * f0));
    CHECK(r.stats.final_residual == m.residual(r.state).norm());
    CHECK(r.stats.nl_u >= r.stats.global_iters);
    CHECK(r.stats.nl_c >= r.stats.global_iters);
    CHECK(static_cast<int>(r.trace.size()) == r.stats.global_iters);

    // restarting from the converged state needs no iteration
    AmConfig abs_only = c;
    abs_only.eps_rel_glob_nonl = 0.0;
    abs_only.eps_abs_glob_nonl = 2.0 * r.stats.final_residual;
    const AmResult again = am_solve(m, r.state, abs_only);
    CHECK(again.stats.global_iters == 0);
  }
}

TEST_CASE("am variants agree on the energy") {
  test::Patch p = test::stretched_patch(6, 0.3);
  const PhaseFieldModel& m = *p.model;
  const double nd = m.energy(am_solve(m, p.state, am_config(AmVariant::ND)).state).total();
  const double ink = m.energy(am_solve(m, p.state, am_config(AmVariant::INK)).state).total();
  const double nk = m.energy(am_solve(m, p.state, am_config(AmVariant::NK)).state).total();
  CHECK(ink == doctest::Approx(nd).epsilon(1e-6));
  CHECK(nk == doctest::Approx(nd).epsilon(1e-6));
}

TEST_CASE("am-st stops no later than am-nd on the same trajectory") {
  test::Patch p = test::stretched_patch(4, 0.3);
  const PhaseFieldModel& m = *p.model;
  const AmResult nd = am_solve(m, p.state, am_config(AmVariant::ND));
  REQUIRE(!nd.trace.empty());
  AmConfig st = am_config(AmVariant::ST);
  st.eps_c_diff = nd.trace.back().dc_inf;
  st.disp_diff_tol = nd.trace.back().du_inf;
  const AmResult r = am_solve(m, p.state, st);
  CHECK(r.stats.global_iters <= nd.stats.global_iters);
  CHECK(r.trace.back().dc_inf <= st.eps_c_diff);
  CHECK(r.trace.back().du_inf <= st.disp_diff_tol);
}

TEST_CASE("am failures are reported") {
  test::Patch p = test::stretched_patch(4, 0.3);
  AmConfig c = am_config(AmVariant::ND);
  c.max_outer_iters = 1;
  CHECK_THROWS_AS(am_solve(*p.model, p.state, c), SolverError);

  AmConfig bad = am_config(AmVariant::INK);
  bad.sub.max_iters = 0;
  try {
    am_solve(*p.model, p.state, bad);
    FAIL("expected a subproblem failure");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("displacement subproblem") != std::string::npos);
  }
}

TEST_CASE("elastic step of the coarse tension benchmark") {
  const BenchmarkSpec spec = coarse_benchmark("tension");
  RunOptions o;
  o.max_steps = 1;
  const RunReport r = run_benchmark(spec, make_solver("am-nd"), o);
  REQUIRE(r.completed);
  REQUIRE(r.steps.size() == 1);
  CHECK(r.steps[0].nl_global <= 3);
  CHECK(r.steps[0].residual_norm <= std::max(1e-7, 1e-6 * r.steps[0].initial_residual));
}
