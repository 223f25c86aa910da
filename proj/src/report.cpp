#include <filesystem>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "pfspin/driver.hpp"

namespace pfspin {

namespace {

std::ofstream open_for_write(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.imbue(std::locale::classic());
  return out;
}

}  // namespace

void write_csv(const RunReport& report, const std::string& path) {
  auto out = open_for_write(path);
  out << kCsvHeader << '\n' << std::setprecision(17);
  for (const auto& r : report.steps) {
    out << r.step << ',' << r.time << ',' << r.energy.elastic << ',' << r.energy.fracture << ',' << r.energy.penalty
        << ',' << r.energy.total() << ',' << r.nl_global << ',' << r.nl_u << ',' << r.nl_c << ',' << r.lin_u << ','
        << r.lin_c << ',' << r.krylov_global << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_vtk(const SystemState& state, const QuadMesh& mesh, const std::string& path) {
  const Index n = mesh.num_nodes();
  if (state.U.size() != 2 * n || state.C.size() != n) throw std::invalid_argument("write_vtk: state does not match mesh");
  auto out = open_for_write(path);
  out << "# vtk DataFile Version 3.0\nphase-field state\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << std::setprecision(12);
  out << "POINTS " << n << " double\n";
  for (const auto& p : mesh.nodes) out << p.x() << ' ' << p.y() << " 0\n";
  out << "CELLS " << mesh.num_elements() << ' ' << 5 * mesh.num_elements() << '\n';
  for (const auto& q : mesh.elements) out << "4 " << q[0] << ' ' << q[1] << ' ' << q[2] << ' ' << q[3] << '\n';
  out << "CELL_TYPES " << mesh.num_elements() << '\n';
  for (Index e = 0; e < mesh.num_elements(); ++e) out << "9\n";
  out << "POINT_DATA " << n << "\nSCALARS c double 1\nLOOKUP_TABLE default\n";
  for (Index i = 0; i < n; ++i) out << state.C[i] << '\n';
  out << "VECTORS u double\n";
  for (Index i = 0; i < n; ++i) out << state.U[2 * i] << ' ' << state.U[2 * i + 1] << " 0\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace pfspin
