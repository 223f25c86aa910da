#include "pfspin/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

namespace pfspin {

namespace {

using EdgeKey = std::pair<Index, Index>;

EdgeKey edge_key(Index a, Index b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

std::map<EdgeKey, std::vector<SideRef>> edge_map(const QuadMesh& mesh) {
  std::map<EdgeKey, std::vector<SideRef>> edges;
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    for (int s = 0; s < 4; ++s) {
      const auto [a, b] = mesh.side_nodes({e, s});
      edges[edge_key(a, b)].push_back({e, s});
    }
  }
  return edges;
}

// Uniform subdivision of [x0, x1] into n pieces, appended without x0.
void append_uniform(std::vector<double>& out, double x0, double x1, Index n) {
  for (Index j = 1; j <= n; ++j) {
    out.push_back(j == n ? x1 : x0 + (x1 - x0) * static_cast<double>(j) / static_cast<double>(n));
  }
}

}  // namespace

Point QuadMesh::centroid(Index e) const {
  Point c = Point::Zero();
  for (Index n : elements[e]) c += nodes[n];
  return 0.25 * c;
}

double QuadMesh::area(Index e) const {
  const auto& q = elements[e];
  double a = 0.0;
  for (int k = 0; k < 4; ++k) {
    const Point& p = nodes[q[k]];
    const Point& r = nodes[q[(k + 1) % 4]];
    a += p.x() * r.y() - r.x() * p.y();
  }
  return 0.5 * a;
}

double QuadMesh::total_area() const {
  double a = 0.0;
  for (Index e = 0; e < num_elements(); ++e) a += area(e);
  return a;
}

std::array<Index, 2> QuadMesh::side_nodes(SideRef s) const {
  const auto& q = elements[s.element];
  return {q[s.side], q[(s.side + 1) % 4]};
}

void QuadMesh::update_sizes() {
  h_min = std::numeric_limits<double>::infinity();
  h_max = 0.0;
  for (const auto& q : elements) {
    for (int k = 0; k < 4; ++k) {
      const double len = (nodes[q[(k + 1) % 4]] - nodes[q[k]]).norm();
      h_min = std::min(h_min, len);
      h_max = std::max(h_max, len);
    }
  }
  if (elements.empty()) h_min = 0.0;
}

std::vector<double> graded_axis(double length, int n_coarse, std::optional<std::array<double, 2>> band,
                                double h_band, double growth, std::span<const double> breaks) {
  const double coarse = length / n_coarse;
  const double tol = 1e-12 * length;

  std::vector<double> knots{0.0, length};
  for (double b : breaks) {
    if (b > tol && b < length - tol) knots.push_back(b);
  }
  if (band) {
    for (double b : *band) knots.push_back(std::clamp(b, 0.0, length));
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end(), [tol](double a, double b) { return b - a <= tol; }),
              knots.end());

  auto target = [&](double x) {
    if (!band) return coarse;
    const double d = std::max({0.0, (*band)[0] - x, x - (*band)[1]});
    return std::min(coarse, h_band + (growth - 1.0) * d);
  };

  std::vector<double> grid{0.0};
  for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
    const double x0 = knots[k];
    const double x1 = knots[k + 1];
    const bool inside_band = band && x0 >= (*band)[0] - tol && x1 <= (*band)[1] + tol;
    if (!band || inside_band) {
      const double h = inside_band ? h_band : coarse;
      append_uniform(grid, x0, x1, std::max<Index>(1, static_cast<Index>(std::ceil((x1 - x0) / h - 1e-9))));
      continue;
    }
    // Equidistribute 1/target over the segment.
    constexpr int samples = 4000;
    std::vector<double> cumulative(samples + 1, 0.0);
    const double dx = (x1 - x0) / samples;
    for (int i = 0; i < samples; ++i) {
      const double xa = x0 + i * dx;
      cumulative[i + 1] = cumulative[i] + 0.5 * dx * (1.0 / target(xa) + 1.0 / target(xa + dx));
    }
    const double total = cumulative.back();
    const Index n = std::max<Index>(1, static_cast<Index>(std::ceil(total - 1e-6)));
    int i = 0;
    for (Index j = 1; j < n; ++j) {
      const double level = total * static_cast<double>(j) / static_cast<double>(n);
      while (cumulative[i + 1] < level) ++i;
      const double frac = (level - cumulative[i]) / (cumulative[i + 1] - cumulative[i]);
      grid.push_back(x0 + (i + frac) * dx);
    }
    grid.push_back(x1);
  }
  return grid;
}

QuadMesh build_rect_mesh(double width, double height, int nx, int ny, const std::optional<RefinementBand>& band,
                         std::span<const double> x_breaks, std::span<const double> y_breaks) {
  if (!(width > 0.0) || !(height > 0.0)) throw std::invalid_argument("build_rect_mesh: dimensions must be positive");
  if (nx < 1 || ny < 1) throw std::invalid_argument("build_rect_mesh: element counts must be >= 1");

  std::optional<std::array<double, 2>> bx;
  std::optional<std::array<double, 2>> by;
  double h = 0.0;
  double growth = 1.0;
  if (band) {
    if (!(band->h > 0.0) || !(band->growth >= 1.0)) throw std::invalid_argument("build_rect_mesh: invalid band");
    if (band->x_min < 0.0 || band->x_max > width || band->y_min < 0.0 || band->y_max > height ||
        band->x_min >= band->x_max || band->y_min >= band->y_max) {
      throw std::invalid_argument("build_rect_mesh: band must lie inside the rectangle");
    }
    bx = std::array{band->x_min, band->x_max};
    by = std::array{band->y_min, band->y_max};
    h = band->h;
    growth = band->growth;
  }

  const auto xs = graded_axis(width, nx, bx, h, growth, x_breaks);
  const auto ys = graded_axis(height, ny, by, h, growth, y_breaks);
  const Index cols = static_cast<Index>(xs.size()) - 1;
  const Index rows = static_cast<Index>(ys.size()) - 1;

  QuadMesh mesh;
  mesh.nodes.reserve(xs.size() * ys.size());
  for (double y : ys) {
    for (double x : xs) mesh.nodes.emplace_back(x, y);
  }
  auto id = [cols](Index i, Index j) { return j * (cols + 1) + i; };
  mesh.elements.reserve(cols * rows);
  for (Index j = 0; j < rows; ++j) {
    for (Index i = 0; i < cols; ++i) {
      mesh.elements.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }

  auto& left = mesh.node_sets["left"];
  auto& right = mesh.node_sets["right"];
  for (Index j = 0; j <= rows; ++j) {
    left.push_back(id(0, j));
    right.push_back(id(cols, j));
  }
  auto& bottom = mesh.node_sets["bottom"];
  auto& top = mesh.node_sets["top"];
  for (Index i = 0; i <= cols; ++i) {
    bottom.push_back(id(i, 0));
    top.push_back(id(i, rows));
  }
  for (Index i = 0; i < cols; ++i) {
    mesh.side_sets["bottom"].push_back({i, 0});
    mesh.side_sets["top"].push_back({(rows - 1) * cols + i, 2});
  }
  for (Index j = 0; j < rows; ++j) {
    mesh.side_sets["left"].push_back({j * cols, 3});
    mesh.side_sets["right"].push_back({j * cols + cols - 1, 1});
  }
  mesh.update_sizes();
  return mesh;
}

QuadMesh cut_seam(const QuadMesh& mesh, const Point& a, const Point& b, const std::string& name) {
  const Point d = b - a;
  const double scale = std::max(1.0, std::max(a.norm(), b.norm()));
  const double tol = 1e-10 * scale;
  if (d.norm() <= tol) return mesh;

  const bool horizontal = std::abs(d.y()) <= tol;
  const bool vertical = std::abs(d.x()) <= tol;
  if (!horizontal && !vertical) throw std::invalid_argument("cut_seam: segment is not edge-aligned");

  const double lo = horizontal ? std::min(a.x(), b.x()) : std::min(a.y(), b.y());
  const double hi = horizontal ? std::max(a.x(), b.x()) : std::max(a.y(), b.y());
  const double line = horizontal ? a.y() : a.x();
  auto on_segment = [&](const Point& p) {
    const double along = horizontal ? p.x() : p.y();
    const double across = horizontal ? p.y() : p.x();
    return std::abs(across - line) <= tol && along >= lo - tol && along <= hi + tol;
  };

  const auto edges = edge_map(mesh);
  std::set<Index> boundary_nodes;
  for (const auto& [key, refs] : edges) {
    if (refs.size() == 1) {
      boundary_nodes.insert(key.first);
      boundary_nodes.insert(key.second);
    }
  }

  QuadMesh out = mesh;
  std::set<Index> seam_nodes;
  bool any_interior = false;
  for (const auto& [key, refs] : edges) {
    if (!on_segment(mesh.nodes[key.first]) || !on_segment(mesh.nodes[key.second])) continue;
    for (const SideRef& r : refs) out.side_sets[name].push_back(r);
    if (refs.size() == 2) {
      any_interior = true;
      seam_nodes.insert(key.first);
      seam_nodes.insert(key.second);
    }
  }
  if (!any_interior) return out;

  auto is_endpoint = [&](const Point& p) { return (p - a).norm() <= tol || (p - b).norm() <= tol; };
  std::map<Index, Index> copies;
  for (Index n : seam_nodes) {
    if (is_endpoint(mesh.nodes[n]) && !boundary_nodes.contains(n)) continue;  // crack tip
    copies[n] = out.num_nodes();
    out.nodes.push_back(mesh.nodes[n]);
  }
  for (Index e = 0; e < out.num_elements(); ++e) {
    const Point c = mesh.centroid(e);
    const bool upper = horizontal ? c.y() > line : c.x() > line;
    if (!upper) continue;
    for (Index& n : out.elements[e]) {
      if (auto it = copies.find(n); it != copies.end()) n = it->second;
    }
  }
  for (auto& [set_name, ids] : out.node_sets) {
    const std::size_t original = ids.size();
    for (std::size_t k = 0; k < original; ++k) {
      if (auto it = copies.find(ids[k]); it != copies.end()) ids.push_back(it->second);
    }
  }
  std::sort(out.side_sets[name].begin(), out.side_sets[name].end());
  out.update_sizes();
  return out;
}

QuadMesh remove_elements(const QuadMesh& mesh, const std::function<bool(const Point&)>& predicate) {
  std::vector<Index> element_map(mesh.num_elements(), -1);
  Index kept = 0;
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    if (!predicate(mesh.centroid(e))) element_map[e] = kept++;
  }
  if (kept == 0) throw std::invalid_argument("remove_elements: predicate removes every element");
  if (kept == mesh.num_elements()) return mesh;

  std::vector<Index> node_map(mesh.num_nodes(), -1);
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    if (element_map[e] < 0) continue;
    for (Index n : mesh.elements[e]) node_map[n] = 0;
  }
  QuadMesh out;
  for (Index n = 0; n < mesh.num_nodes(); ++n) {
    if (node_map[n] < 0) continue;
    node_map[n] = out.num_nodes();
    out.nodes.push_back(mesh.nodes[n]);
  }
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    if (element_map[e] < 0) continue;
    auto q = mesh.elements[e];
    for (Index& n : q) n = node_map[n];
    out.elements.push_back(q);
  }

  for (const auto& [name, ids] : mesh.node_sets) {
    std::vector<Index> mapped;
    for (Index n : ids) {
      if (node_map[n] >= 0) mapped.push_back(node_map[n]);
    }
    if (!ids.empty() && mapped.empty()) {
      throw std::invalid_argument("remove_elements: node set '" + name + "' would be disconnected from the mesh");
    }
    out.node_sets[name] = std::move(mapped);
  }
  for (const auto& [name, refs] : mesh.side_sets) {
    std::vector<SideRef> mapped;
    for (const SideRef& r : refs) {
      if (element_map[r.element] >= 0) mapped.push_back({element_map[r.element], r.side});
    }
    out.side_sets[name] = std::move(mapped);
  }

  const auto edges = edge_map(mesh);
  auto& hole = out.side_sets["hole"];
  for (const auto& [key, refs] : edges) {
    if (refs.size() != 2) continue;
    const bool k0 = element_map[refs[0].element] >= 0;
    const bool k1 = element_map[refs[1].element] >= 0;
    if (k0 != k1) {
      const SideRef& r = k0 ? refs[0] : refs[1];
      hole.push_back({element_map[r.element], r.side});
    }
  }
  std::sort(hole.begin(), hole.end());

  // Connectivity through shared nodes.
  std::vector<Index> parent(out.num_elements());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<Index> owner(out.num_nodes(), -1);
  for (Index e = 0; e < out.num_elements(); ++e) {
    for (Index n : out.elements[e]) {
      if (owner[n] < 0) {
        owner[n] = e;
      } else {
        parent[find(e)] = find(owner[n]);
      }
    }
  }
  for (Index e = 1; e < out.num_elements(); ++e) {
    if (find(e) != find(0)) throw std::invalid_argument("remove_elements: removal disconnects the mesh");
  }

  out.update_sizes();
  return out;
}

std::vector<Index> nodes_near(const QuadMesh& mesh, const Point& p, double tol) {
  std::vector<Index> ids;
  for (Index n = 0; n < mesh.num_nodes(); ++n) {
    if ((mesh.nodes[n] - p).norm() <= tol) ids.push_back(n);
  }
  return ids;
}

Index closest_node(const QuadMesh& mesh, const Point& p) {
  Index best = -1;
  double dist = std::numeric_limits<double>::infinity();
  for (Index n = 0; n < mesh.num_nodes(); ++n) {
    const double d = (mesh.nodes[n] - p).squaredNorm();
    if (d < dist) {
      dist = d;
      best = n;
    }
  }
  return best;
}

void write_mesh_vtk(const QuadMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  out << "# vtk DataFile Version 3.0\npfspin mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_nodes() << " double\n";
  for (const Point& p : mesh.nodes) out << p.x() << ' ' << p.y() << " 0\n";
  out << "CELLS " << mesh.num_elements() << ' ' << 5 * mesh.num_elements() << '\n';
  for (const auto& q : mesh.elements) out << "4 " << q[0] << ' ' << q[1] << ' ' << q[2] << ' ' << q[3] << '\n';
  out << "CELL_TYPES " << mesh.num_elements() << '\n';
  for (Index e = 0; e < mesh.num_elements(); ++e) out << "9\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

void check_mesh(const QuadMesh& mesh) {
  const Index n = mesh.num_nodes();
  auto in_range = [n](Index i) { return i >= 0 && i < n; };
  const double g = 1.0 / std::sqrt(3.0);
  for (Index e = 0; e < mesh.num_elements(); ++e) {
    const auto& q = mesh.elements[e];
    for (Index i : q) {
      if (!in_range(i)) throw std::logic_error("element node index out of range");
    }
    for (double xi : {-g, g}) {
      for (double eta : {-g, g}) {
        // Bilinear map Jacobian at (xi, eta).
        const Point dxi = 0.25 * ((1 - eta) * (mesh.nodes[q[1]] - mesh.nodes[q[0]]) +
                                  (1 + eta) * (mesh.nodes[q[2]] - mesh.nodes[q[3]]));
        const Point deta = 0.25 * ((1 - xi) * (mesh.nodes[q[3]] - mesh.nodes[q[0]]) +
                                   (1 + xi) * (mesh.nodes[q[2]] - mesh.nodes[q[1]]));
        if (dxi.x() * deta.y() - dxi.y() * deta.x() <= 0.0) {
          throw std::logic_error("element " + std::to_string(e) + " has non-positive Jacobian");
        }
      }
    }
  }
  for (const auto& [name, ids] : mesh.node_sets) {
    for (Index i : ids) {
      if (!in_range(i)) throw std::logic_error("node set '" + name + "' index out of range");
    }
  }
  for (const auto& [name, refs] : mesh.side_sets) {
    for (const SideRef& r : refs) {
      if (r.element < 0 || r.element >= mesh.num_elements() || r.side < 0 || r.side > 3) {
        throw std::logic_error("side set '" + name + "' reference out of range");
      }
    }
  }
}

}  // namespace pfspin
