#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pfspin/driver.hpp"

namespace pfspin {

namespace {

// PETSc-style options use a single dash with a multi-character name, which
// CLI11 would read as a bundle of short flags.
std::vector<std::string> normalize_args(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = argc - 1; i >= 1; --i) {
    std::string a = argv[i];
    if (a.rfind("-snes_", 0) == 0) a.insert(0, "-");
    args.push_back(std::move(a));
  }
  return args;  // CLI11 expects reversed order
}

}  // namespace

int parse_cli(int argc, const char* const* argv, CliRequest& req) {
  CLI::App app{"Phase-field fracture benchmarks with alternate minimization and SPIN solvers"};
  app.name(argc > 0 ? std::filesystem::path(argv[0]).filename().string() : "pfspin");

  std::string benchmark = "tension";
  std::string solver_name = "aspin";
  double mesh_scale = 1.0;
  std::string out_dir = "out";
  int steps = -1;
  int vtk_every = 0;
  bool coarse = false;
  bool verbose = false;

  double atol = 1e-7;
  double stol = 1e-8;
  double rtol = 1e-6;
  int max_it = 50000;
  double c_diff = 1e-4;
  double disp_diff = 1e-12;
  bool am_inexact = true;
  bool am_direct = false;
  bool spin_additive = true;
  double action_rtol = 1e-4;

  app.add_option("--benchmark", benchmark, "tension | shear | three_point_bending | l_shape | asym_notched_beam")
      ->capture_default_str()
      ->check(CLI::IsMember(benchmark_names()));
  app.add_option("--solver", solver_name, "am-nd | am-nk | am-ink | am-st | aspin | mspin")
      ->capture_default_str()
      ->check(CLI::IsMember({"am-nd", "am-nk", "am-ink", "am-st", "aspin", "mspin"}));
  app.add_option("--mesh-scale", mesh_scale, "refinement factor for the default mesh")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--steps", steps, "truncate the loading schedule (-1: full)")->capture_default_str();
  app.add_option("--vtk-every", vtk_every, "write a VTK snapshot every n steps (0: never)")->capture_default_str();
  app.add_flag("--verbose", verbose, "print every global nonlinear iteration");
  app.add_flag("--coarse", coarse, "use the small regression variant of the benchmark (l_s = 2h)");

  auto* o_atol = app.add_option("--snes_atol", atol, "absolute tolerance on the coupled residual")
                     ->capture_default_str();
  app.add_option("--snes_stol", stol, "relative step size treated as stagnation")->capture_default_str();
  app.add_option("--snes_rtol", rtol, "relative tolerance on the coupled residual")->capture_default_str();
  app.add_option("--snes_max_it", max_it, "maximum global nonlinear iterations per step")->capture_default_str();
  app.add_option("--snes_am_c_diff_tol", c_diff, "am-st phase-field change tolerance")->capture_default_str();
  app.add_option("--snes_am_disp_diff_tol", disp_diff, "am-st displacement change tolerance")->capture_default_str();
  auto* o_inexact =
      app.add_option("--snes_am_inexact_solve", am_inexact, "AM subproblems use inexact Newton")->capture_default_str();
  auto* o_direct =
      app.add_option("--snes_am_direct_solver", am_direct, "AM subproblems use a direct solver")->capture_default_str();
  auto* o_additive =
      app.add_option("--snes_spin_additive", spin_additive, "additive (true) or multiplicative SPIN")
          ->capture_default_str();
  app.add_option("--snes_spin_action_rtol", action_rtol, "inner tolerance of the SPIN preconditioner action")
      ->capture_default_str();
  (void)o_atol;

  try {
    auto args = normalize_args(argc, argv);
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  SolverSettings solver = make_solver(solver_name);
  if (solver.is_spin()) {
    if (o_additive->count() > 0) {
      solver.kind = spin_additive ? SolverKind::ASPIN : SolverKind::MSPIN;
      solver.spin.mode = spin_additive ? SpinMode::Additive : SpinMode::Multiplicative;
    }
  } else if (solver.kind != SolverKind::AmST && (o_direct->count() > 0 || o_inexact->count() > 0)) {
    if (o_direct->count() > 0 && am_direct) {
      solver.kind = SolverKind::AmND;
      solver.am.variant = AmVariant::ND;
    } else if (o_inexact->count() > 0) {
      solver.kind = am_inexact ? SolverKind::AmINK : SolverKind::AmNK;
      solver.am.variant = am_inexact ? AmVariant::INK : AmVariant::NK;
    }
  }
  for (double* a : {&solver.am.eps_abs_glob_nonl, &solver.spin.eps_abs_glob_nonl}) *a = atol;
  for (double* r : {&solver.am.eps_rel_glob_nonl, &solver.spin.eps_rel_glob_nonl}) *r = rtol;
  solver.am.stol = solver.spin.stol = stol;
  solver.am.max_outer_iters = solver.spin.max_outer_iters = max_it;
  solver.am.eps_c_diff = c_diff;
  solver.am.disp_diff_tol = disp_diff;
  solver.spin.eps_app_lin = action_rtol;
  if (solver.is_spin() && !solver.spin.within_stability_bound()) {
    std::cerr << "warning: -snes_spin_action_rtol " << action_rtol << " is above 1e-2; convergence may stagnate\n";
  }

  if (verbose) {
    const IterationCallback print = [](const GlobalIteration& g) {
      std::fprintf(stderr, "  it %4d  |F| = %.3e  |s| = %.3e  alpha = %.3g  krylov = %td  inner = %td/%td  dE = %.3e%s\n",
                   g.iter, g.residual_norm, g.s_norm, g.alpha, g.krylov_iters, g.inner_u, g.inner_c,
                   g.energy_after - g.energy_before, g.fallback_direction ? "  (fallback)" : "");
    };
    solver.am.on_iteration = print;
    solver.spin.on_iteration = print;
  }

  try {
    solver.am.validate();
    solver.spin.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  req.benchmark = benchmark;
  req.coarse = coarse;
  req.mesh_scale = mesh_scale;
  req.solver = solver;
  req.options.max_steps = steps;
  req.options.out_dir = out_dir;
  req.options.vtk_every = vtk_every;
  return -1;
}

int cli_main(int argc, const char* const* argv) {
  CliRequest req;
  if (const int code = parse_cli(argc, argv, req); code >= 0) return code;
  const BenchmarkSpec spec = req.coarse ? coarse_benchmark(req.benchmark) : benchmark_spec(req.benchmark, req.mesh_scale);
  const std::string& out_dir = req.options.out_dir;
  RunOptions opts = req.options;
  opts.on_step = [](const StepContext& ctx) {
    const auto& r = ctx.record;
    std::printf("step %4d  t = %.6e  Psi = %.10e  E_f = %.6e  nl = %d (u %d, c %d)  lin = %td/%td  krylov = %td\n",
                r.step, r.time, r.energy.total(), r.energy.fracture, r.nl_global, r.nl_u, r.nl_c, r.lin_u, r.lin_c,
                r.krylov_global);
    std::fflush(stdout);
  };

  const RunReport report = run_benchmark(spec, req.solver, opts);
  const std::string csv = (std::filesystem::path(out_dir) / (spec.name + "_" + report.solver + ".csv")).string();
  try {
    write_csv(report, csv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::printf("%s / %s: %zu steps, %td dofs, %.2f s, csv: %s\n", spec.name.c_str(), report.solver.c_str(),
              report.steps.size(), report.num_dofs, report.wall_time, csv.c_str());
  if (!report.completed) {
    std::cerr << "solver failure at " << report.failure << '\n';
    return 1;
  }
  return 0;
}

}  // namespace pfspin
