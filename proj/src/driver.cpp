#include "pfspin/driver.hpp"

#include <chrono>
#include <filesystem>
#include <memory>

namespace pfspin {

std::string SolverSettings::name() const {
  switch (kind) {
    case SolverKind::AmND: return "am-nd";
    case SolverKind::AmNK: return "am-nk";
    case SolverKind::AmINK: return "am-ink";
    case SolverKind::AmST: return "am-st";
    case SolverKind::ASPIN: return "aspin";
    case SolverKind::MSPIN: return "mspin";
  }
  return "?";
}

SolverSettings make_solver(const std::string& name) {
  SolverSettings s;
  if (name == "am-nd") {
    s.kind = SolverKind::AmND;
    s.am.variant = AmVariant::ND;
  } else if (name == "am-nk") {
    s.kind = SolverKind::AmNK;
    s.am.variant = AmVariant::NK;
  } else if (name == "am-ink") {
    s.kind = SolverKind::AmINK;
    s.am.variant = AmVariant::INK;
  } else if (name == "am-st") {
    s.kind = SolverKind::AmST;
    s.am.variant = AmVariant::ST;
  } else if (name == "aspin") {
    s.kind = SolverKind::ASPIN;
    s.spin.mode = SpinMode::Additive;
  } else if (name == "mspin") {
    s.kind = SolverKind::MSPIN;
    s.spin.mode = SpinMode::Multiplicative;
  } else {
    throw std::invalid_argument("unknown solver '" + name + "'");
  }
  return s;
}

CoupledStats solve_step(const PhaseFieldModel& model, SystemState& state, const SolverSettings& solver,
                        std::vector<GlobalIteration>* trace) {
  if (solver.is_spin()) {
    auto r = spin_solve(model, state, solver.spin);
    state = std::move(r.state);
    if (trace) *trace = std::move(r.trace);
    return r.stats;
  }
  auto r = am_solve(model, state, solver.am);
  state = std::move(r.state);
  if (trace) *trace = std::move(r.trace);
  return r.stats;
}

RunReport run_benchmark(const BenchmarkSpec& spec, const SolverSettings& solver, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.benchmark = spec.name;
  report.solver = solver.name();

  auto mesh = std::make_shared<const QuadMesh>(spec.build_mesh());
  check_mesh(*mesh);
  PhaseFieldModel model(mesh, spec.material);
  report.num_dofs = model.num_u() + model.num_c();
  SystemState state = model.zero_state();

  const auto times = spec.load_times(options.max_steps);
  const std::filesystem::path out_dir(options.out_dir);
  std::vector<GlobalIteration> trace;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double t = times[i];
    spec.apply_boundary(*mesh, model.dofs(), t);
    model.impose_constraints(state.U, state.C);
    state.t = t;

    StepRecord rec;
    rec.step = static_cast<int>(i) + 1;
    rec.time = t;
    try {
      const CoupledStats st = solve_step(model, state, solver, &trace);
      rec.nl_global = st.global_iters;
      rec.nl_u = st.nl_u;
      rec.nl_c = st.nl_c;
      rec.lin_u = st.lin_u;
      rec.lin_c = st.lin_c;
      rec.krylov_global = st.krylov_global;
      rec.initial_residual = st.initial_residual;
      rec.residual_norm = st.final_residual;
      report.audit.merge(st.audit);
    } catch (const SolverError& e) {
      report.completed = false;
      report.failure = "step " + std::to_string(rec.step) + " (t = " + std::to_string(t) + "): " + e.what();
      break;
    }
    rec.energy = model.energy(state);
    rec.irreversibility = PhaseFieldModel::irreversibility_violation(state.C, state.C_prev);
    rec.c_min = state.C.minCoeff();
    rec.c_max = state.C.maxCoeff();
    report.steps.push_back(rec);

    if (options.on_step) options.on_step({model, state, report.steps.back(), trace});
    if (!options.out_dir.empty() && options.vtk_every > 0 && rec.step % options.vtk_every == 0) {
      std::string step = std::to_string(rec.step);
      step.insert(0, step.size() < 5 ? 5 - step.size() : 0, '0');
      write_vtk(state, *mesh, (out_dir / (spec.name + "_" + step + ".vtk")).string());
    }
    state.C_prev = state.C;
  }
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace pfspin
