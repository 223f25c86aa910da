#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pfspin/types.hpp"

namespace pfspin {

using Point = Eigen::Vector2d;

/// Element-local reference to one edge. Local side k joins local nodes k and (k+1)%4.
struct SideRef {
  Index element;
  int side;

  friend bool operator==(const SideRef&, const SideRef&) = default;
  friend auto operator<=>(const SideRef&, const SideRef&) = default;
};

/// Conforming bilinear quadrilateral mesh. Element nodes are ordered counter-clockwise.
struct QuadMesh {
  std::vector<Point> nodes;
  std::vector<std::array<Index, 4>> elements;
  std::map<std::string, std::vector<Index>> node_sets;
  std::map<std::string, std::vector<SideRef>> side_sets;
  double h_min = 0.0;
  double h_max = 0.0;

  Index num_nodes() const { return static_cast<Index>(nodes.size()); }
  Index num_elements() const { return static_cast<Index>(elements.size()); }

  Point centroid(Index e) const;
  double area(Index e) const;
  double total_area() const;
  std::array<Index, 2> side_nodes(SideRef s) const;

  /// Recomputes h_min / h_max from the element edges.
  void update_sizes();
};

/// Rectangle of uniform resolution `h` embedded in a coarser grid.
/// Spacing grows geometrically by `growth` away from the band until it
/// reaches the coarse spacing width/nx (height/ny).
struct RefinementBand {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
  double h = 0.0;
  double growth = 1.3;
};

/// Structured tensor-product grid on [0,width]x[0,height].
///
/// Coordinates listed in `x_breaks` / `y_breaks` are guaranteed to be grid
/// lines, which is how notch tips, holes and supports are snapped to nodes.
/// Node sets "left", "right", "bottom", "top" and matching side sets are
/// created. Node numbering is row-major with x running fastest.
QuadMesh build_rect_mesh(double width, double height, int nx, int ny,
                         const std::optional<RefinementBand>& band = std::nullopt,
                         std::span<const double> x_breaks = {},
                         std::span<const double> y_breaks = {});

/// Grid line positions used by build_rect_mesh along one axis.
std::vector<double> graded_axis(double length, int n_coarse, std::optional<std::array<double, 2>> band,
                                double h_band, double growth, std::span<const double> breaks);

/// Splits the mesh along an edge-aligned segment. Interior edges on the
/// segment become a traction-free seam: nodes on it are duplicated, except
/// segment endpoints that lie inside the domain (crack tips). Elements above
/// (horizontal seam) or right of (vertical seam) the segment take the copies.
/// Seam faces are recorded in side set `name`.
QuadMesh cut_seam(const QuadMesh& mesh, const Point& a, const Point& b,
                  const std::string& name = "seam");

/// Deletes every element whose centroid satisfies `predicate`, drops orphan
/// nodes and compacts numbering. Newly exposed edges go to side set "hole".
QuadMesh remove_elements(const QuadMesh& mesh, const std::function<bool(const Point&)>& predicate);

/// Nodes within `tol` of point `p`.
std::vector<Index> nodes_near(const QuadMesh& mesh, const Point& p, double tol = 1e-9);
Index closest_node(const QuadMesh& mesh, const Point& p);

/// Legacy ASCII VTK unstructured grid (cell type 9).
void write_mesh_vtk(const QuadMesh& mesh, const std::string& path);

/// Throws std::logic_error if any structural invariant is violated.
void check_mesh(const QuadMesh& mesh);

}  // namespace pfspin
