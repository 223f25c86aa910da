#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pfspin/am.hpp"
#include "pfspin/benchmarks.hpp"
#include "pfspin/spin.hpp"

namespace pfspin {

enum class SolverKind { AmND, AmNK, AmINK, AmST, ASPIN, MSPIN };

struct SolverSettings {
  SolverKind kind = SolverKind::ASPIN;
  AmConfig am;
  SpinConfig spin;

  bool is_spin() const { return kind == SolverKind::ASPIN || kind == SolverKind::MSPIN; }
  std::string name() const;
};

/// Accepts am-nd, am-nk, am-ink, am-st, aspin, mspin.
SolverSettings make_solver(const std::string& name);

struct StepRecord {
  int step = 0;
  double time = 0.0;
  EnergyParts energy;
  int nl_global = 0;
  int nl_u = 0;
  int nl_c = 0;
  Index lin_u = 0;
  Index lin_c = 0;
  Index krylov_global = 0;
  double initial_residual = 0.0;
  double residual_norm = 0.0;
  double irreversibility = 0.0;  // max(C_prev - C)
  double c_min = 0.0;
  double c_max = 0.0;
};

struct RunReport {
  std::string benchmark;
  std::string solver;
  Index num_dofs = 0;
  std::vector<StepRecord> steps;
  double wall_time = 0.0;
  bool completed = true;
  std::string failure;
  SolveAudit audit;
};

struct StepContext {
  const PhaseFieldModel& model;
  const SystemState& state;
  const StepRecord& record;
  const std::vector<GlobalIteration>& trace;
};

struct RunOptions {
  int max_steps = -1;
  std::string out_dir;  // empty: no files
  int vtk_every = 0;
  std::function<void(const StepContext&)> on_step;
};

/// Quasi-static loading loop. A solver failure stops the run; the partial
/// report has completed = false and the message in `failure`.
RunReport run_benchmark(const BenchmarkSpec& spec, const SolverSettings& solver, const RunOptions& options = {});

/// Solves one loading step in place (state.C_prev must hold the previous step).
CoupledStats solve_step(const PhaseFieldModel& model, SystemState& state, const SolverSettings& solver,
                        std::vector<GlobalIteration>* trace = nullptr);

inline constexpr const char* kCsvHeader =
    "step,time,E_elastic,E_fracture,E_penalty,Psi,nl_global,nl_u,nl_c,lin_u,lin_c,krylov_global";

void write_csv(const RunReport& report, const std::string& path);
/// Legacy ASCII VTK with point data `c` (scalar) and `u` (vector).
void write_vtk(const SystemState& state, const QuadMesh& mesh, const std::string& path);

struct CliRequest {
  std::string benchmark = "tension";
  bool coarse = false;
  double mesh_scale = 1.0;
  SolverSettings solver;
  RunOptions options;
};

/// Parses the command line into `out`. Returns -1 when the run should
/// proceed, otherwise the exit code (0 after --help, 2 on a usage error).
int parse_cli(int argc, const char* const* argv, CliRequest& out);

/// Command-line entry point; returns the process exit code.
int cli_main(int argc, const char* const* argv);

}  // namespace pfspin
