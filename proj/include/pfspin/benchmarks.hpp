#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pfspin/fem.hpp"
#include "pfspin/mesh.hpp"
#include "pfspin/model.hpp"

namespace pfspin {

/// Prescribes u_component = rate * t on every node of a node set.
struct DirichletRule {
  std::string node_set;
  int component = 0;
  double rate = 0.0;
};

struct LoadPhase {
  double dt = 0.0;
  int steps = 0;
};

struct BenchmarkSpec {
  std::string name;
  MaterialParams material;
  double h_band = 0.0;  // finest element size
  std::function<QuadMesh()> build_mesh;
  std::vector<DirichletRule> dirichlet;
  std::vector<LoadPhase> schedule;

  /// Pseudo-times of all loading steps, optionally truncated.
  std::vector<double> load_times(int max_steps = -1) const;
  /// Replaces the constraint list by the rules evaluated at time t.
  void apply_boundary(const QuadMesh& mesh, DofMap& dofs, double t) const;
};

inline const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names{"tension", "shear", "three_point_bending", "l_shape",
                                              "asym_notched_beam"};
  return names;
}

/// Full-size parameter sets. The finest element size is l_s / (2 mesh_scale).
BenchmarkSpec benchmark_spec(const std::string& name, double mesh_scale = 1.0);
std::vector<BenchmarkSpec> benchmark_specs(double mesh_scale = 1.0);

/// Small variants for regression runs: coarser band with l_s = 2h and the
/// same schedule. γ is recomputed from the new l_s.
BenchmarkSpec coarse_benchmark(const std::string& name);

}  // namespace pfspin
