#include "pfspin/benchmarks.hpp"

#include <cmath>
#include <stdexcept>

namespace pfspin {

std::vector<double> BenchmarkSpec::load_times(int max_steps) const {
  std::vector<double> times;
  double t = 0.0;
  for (const auto& phase : schedule) {
    for (int i = 0; i < phase.steps; ++i) {
      if (max_steps >= 0 && static_cast<int>(times.size()) >= max_steps) return times;
      t += phase.dt;
      times.push_back(t);
    }
  }
  return times;
}

void BenchmarkSpec::apply_boundary(const QuadMesh& mesh, DofMap& dofs, double t) const {
  dofs.clear_constraints();
  for (const auto& rule : dirichlet) {
    const auto it = mesh.node_sets.find(rule.node_set);
    if (it == mesh.node_sets.end()) throw std::invalid_argument(name + ": unknown node set '" + rule.node_set + "'");
    for (Index n : it->second) dofs.constrain(dofs.u_dof(n, rule.component), rule.rate * t);
  }
}

namespace {

struct MeshControl {
  double h = 0.0;      // band element size
  double scale = 1.0;  // multiplies the coarse element counts
};

int coarse_count(int base, double scale) { return std::max(1, static_cast<int>(std::lround(base * scale))); }

void add_point_set(QuadMesh& mesh, const std::string& name, const Point& p) {
  mesh.node_sets[name] = {closest_node(mesh, p)};
}

QuadMesh notched_plate(const MeshControl& mc, const RefinementBand& band_shape) {
  RefinementBand band = band_shape;
  band.h = mc.h;
  const double breaks[] = {0.5};
  const int n = coarse_count(20, mc.scale);
  QuadMesh mesh = build_rect_mesh(1.0, 1.0, n, n, band, breaks, breaks);
  return cut_seam(mesh, {0.0, 0.5}, {0.5, 0.5}, "notch");
}

QuadMesh bending_beam(const MeshControl& mc, double band_half_width) {
  RefinementBand band{4.0 - band_half_width, 4.0 + band_half_width, 0.0, 2.0, mc.h};
  const double xb[] = {4.0};
  const double yb[] = {0.4};
  QuadMesh mesh = build_rect_mesh(8.0, 2.0, coarse_count(32, mc.scale), coarse_count(8, mc.scale), band, xb, yb);
  mesh = cut_seam(mesh, {4.0, 0.0}, {4.0, 0.4}, "notch");
  add_point_set(mesh, "support_left", {0.0, 0.0});
  add_point_set(mesh, "support_right", {8.0, 0.0});
  add_point_set(mesh, "load", {4.0, 2.0});
  return mesh;
}

QuadMesh l_panel(const MeshControl& mc) {
  RefinementBand band{40.0, 255.0, 240.0, 310.0, mc.h};
  const double xb[] = {250.0, 470.0};
  const double yb[] = {250.0};
  const int n = coarse_count(20, mc.scale);
  QuadMesh mesh = build_rect_mesh(500.0, 500.0, n, n, band, xb, yb);
  mesh = remove_elements(mesh, [](const Point& c) { return c.x() > 250.0 && c.y() < 250.0; });
  add_point_set(mesh, "load", {470.0, 250.0});
  return mesh;
}

QuadMesh holed_beam(const MeshControl& mc) {
  RefinementBand band{4.7, 6.6, 0.0, 5.3, mc.h};
  const double xb[] = {1.0, 5.0, 10.0, 19.0};
  const double yb[] = {1.0};
  QuadMesh mesh = build_rect_mesh(20.0, 8.0, coarse_count(40, mc.scale), coarse_count(16, mc.scale), band, xb, yb);
  const Point holes[] = {{6.0, 2.75}, {6.0, 4.75}, {6.0, 6.75}};
  mesh = remove_elements(mesh, [&holes](const Point& c) {
    for (const auto& h : holes) {
      if ((c - h).norm() < 0.25) return true;
    }
    return false;
  });
  mesh = cut_seam(mesh, {5.0, 0.0}, {5.0, 1.0}, "notch");
  add_point_set(mesh, "support_left", {1.0, 0.0});
  add_point_set(mesh, "support_right", {19.0, 0.0});
  add_point_set(mesh, "load", {10.0, 8.0});
  return mesh;
}

MaterialParams material_for(const std::string& name) {
  constexpr double tau = 1e-2;
  if (name == "tension") return MaterialParams::make(121.15, 80.77, 2.7e-3, 0.003, tau);
  if (name == "shear") return MaterialParams::make(121.15, 80.77, 2.7e-3, 0.006, tau);
  if (name == "three_point_bending") return MaterialParams::make(12.0, 8.0, 5.4e-4, 0.01, tau);
  if (name == "l_shape") return MaterialParams::make(6.16, 10.95, 8.9e-5, 2.0, tau);
  if (name == "asym_notched_beam") return MaterialParams::make(12.0, 8.0, 1e-3, 0.06, tau);
  throw std::invalid_argument("unknown benchmark '" + name + "'");
}

BenchmarkSpec make_spec(const std::string& name, const MaterialParams& mat, const MeshControl& mc, bool coarse) {
  BenchmarkSpec s;
  s.name = name;
  s.material = mat;
  s.h_band = mc.h;
  if (name == "tension") {
    const RefinementBand band = coarse ? RefinementBand{0.45, 1.0, 0.44, 0.56, 0.0}
                                       : RefinementBand{0.49, 1.0, 0.485, 0.515, 0.0};
    s.build_mesh = [mc, band] { return notched_plate(mc, band); };
    s.dirichlet = {{"bottom", 0, 0.0}, {"bottom", 1, 0.0}, {"top", 0, 0.0}, {"top", 1, 1.0}};
    s.schedule = {{5e-5, 140}};
  } else if (name == "shear") {
    const RefinementBand band = coarse ? RefinementBand{0.45, 1.0, 0.0, 0.55, 0.0}
                                       : RefinementBand{0.48, 1.0, 0.0, 0.52, 0.0};
    s.build_mesh = [mc, band] { return notched_plate(mc, band); };
    s.dirichlet = {{"bottom", 0, 0.0}, {"bottom", 1, 0.0}, {"top", 0, 1.0}, {"top", 1, 0.0}};
    s.schedule = {{1e-3, 8}, {7.5e-5, 120}};
  } else if (name == "three_point_bending") {
    const double half = coarse ? 0.3 : 0.1;
    s.build_mesh = [mc, half] { return bending_beam(mc, half); };
    s.dirichlet = {{"support_left", 0, 0.0}, {"support_left", 1, 0.0}, {"support_right", 1, 0.0}, {"load", 1, -1.0}};
    s.schedule = {{1e-3, 100}};
  } else if (name == "l_shape") {
    s.build_mesh = [mc] { return l_panel(mc); };
    s.dirichlet = {{"bottom", 0, 0.0}, {"bottom", 1, 0.0}, {"load", 1, 1.0}};
    s.schedule = {{1e-2, 20}, {1e-3, 600}};
  } else if (name == "asym_notched_beam") {
    s.build_mesh = [mc] { return holed_beam(mc); };
    s.dirichlet = {{"support_left", 0, 0.0}, {"support_left", 1, 0.0}, {"support_right", 1, 0.0}, {"load", 1, -1.0}};
    s.schedule = {{1e-3, 160}, {1e-4, 600}};
  } else {
    throw std::invalid_argument("unknown benchmark '" + name + "'");
  }
  return s;
}

}  // namespace

BenchmarkSpec benchmark_spec(const std::string& name, double mesh_scale) {
  if (!(mesh_scale > 0.0)) throw std::invalid_argument("mesh scale must be positive");
  const MaterialParams mat = material_for(name);
  return make_spec(name, mat, {mat.l_s / (2.0 * mesh_scale), mesh_scale}, false);
}

std::vector<BenchmarkSpec> benchmark_specs(double mesh_scale) {
  std::vector<BenchmarkSpec> out;
  for (const auto& n : benchmark_names()) out.push_back(benchmark_spec(n, mesh_scale));
  return out;
}

BenchmarkSpec coarse_benchmark(const std::string& name) {
  const MaterialParams base = material_for(name);
  double h = 0.0;
  if (name == "tension") {
    h = 0.01;
  } else if (name == "shear") {
    h = 0.02;
  } else if (name == "three_point_bending") {
    h = 0.05;
  } else if (name == "l_shape") {
    h = 5.0;
  } else if (name == "asym_notched_beam") {
    h = 0.1;
  }
  const MaterialParams mat = MaterialParams::make(base.lambda, base.mu, base.g_c, 2.0 * h, base.tau_irr);
  BenchmarkSpec s = make_spec(name, mat, {h, 1.0}, true);
  s.name = name + "_coarse";
  return s;
}

}  // namespace pfspin
