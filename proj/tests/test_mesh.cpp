#include <cmath>
#include <set>

#include "doctest.h"
#include "pfspin/benchmarks.hpp"
#include "pfspin/mesh.hpp"

using namespace pfspin;

namespace {

bool same_mesh(const QuadMesh& a, const QuadMesh& b) {
  return a.nodes == b.nodes && a.elements == b.elements && a.node_sets == b.node_sets;
}

}  // namespace

TEST_CASE("structured grid counts") {
  const QuadMesh a = build_rect_mesh(1, 1, 2, 2);
  CHECK(a.num_nodes() == 9);
  CHECK(a.num_elements() == 4);

  const QuadMesh b = build_rect_mesh(1, 1, 10, 10);
  CHECK(b.h_min == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(b.h_max == doctest::Approx(0.1).epsilon(1e-12));

  const QuadMesh c = build_rect_mesh(2, 1, 4, 2);
  CHECK(c.num_nodes() == 15);
  CHECK(c.num_elements() == 8);
  CHECK(c.h_min == doctest::Approx(0.5));
  CHECK(c.h_max == doctest::Approx(0.5));
  check_mesh(c);
}

TEST_CASE("build_rect_mesh rejects bad input") {
  CHECK_THROWS_AS(build_rect_mesh(0, 1, 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(build_rect_mesh(1, -1, 2, 2), std::invalid_argument);
  CHECK_THROWS_AS(build_rect_mesh(1, 1, 0, 2), std::invalid_argument);
  CHECK_THROWS_AS(build_rect_mesh(1, 1, 2, 2, RefinementBand{0.5, 1.5, 0.0, 1.0, 0.01}), std::invalid_argument);
}

TEST_CASE("refinement band reaches its element size") {
  const RefinementBand band{0.4, 0.6, 0.45, 0.55, 0.01};
  const QuadMesh m = build_rect_mesh(1, 1, 10, 10, band);
  check_mesh(m);
  CHECK(m.h_min == doctest::Approx(0.01).epsilon(1e-9));
  CHECK(m.h_max <= 0.1 + 1e-12);
  CHECK(m.total_area() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("break lines become grid lines") {
  const double xb[] = {0.37};
  const QuadMesh m = build_rect_mesh(1, 1, 4, 4, std::nullopt, xb);
  CHECK(nodes_near(m, {0.37, 0.0}).size() == 1);
}

TEST_CASE("seam duplicates interior nodes but not the tip") {
  const QuadMesh m = build_rect_mesh(1, 1, 2, 2);
  const QuadMesh s = cut_seam(m, {0.0, 0.5}, {0.5, 0.5}, "notch");
  CHECK(s.num_nodes() == 10);
  CHECK(nodes_near(s, {0.0, 0.5}).size() == 2);
  CHECK(nodes_near(s, {0.5, 0.5}).size() == 1);
  CHECK(s.side_sets.at("notch").size() == 2);
  CHECK(s.total_area() == doctest::Approx(m.total_area()).epsilon(1e-12));
  check_mesh(s);

  // the lower and upper element at the seam no longer share the mouth node
  std::set<Index> below(s.elements[0].begin(), s.elements[0].end());
  std::set<Index> above(s.elements[2].begin(), s.elements[2].end());
  const auto copies = nodes_near(s, {0.0, 0.5});
  CHECK(below.count(copies[0]) + below.count(copies[1]) == 1);
  CHECK(above.count(copies[0]) + above.count(copies[1]) == 1);
}

TEST_CASE("degenerate seams") {
  const QuadMesh m = build_rect_mesh(1, 1, 2, 2);
  CHECK(same_mesh(cut_seam(m, {0.5, 0.5}, {0.5, 0.5}), m));

  const QuadMesh b = cut_seam(m, {0.0, 0.0}, {1.0, 0.0}, "edge");
  CHECK(same_mesh(b, m));
  CHECK(b.side_sets.count("edge") == 1);

  CHECK_THROWS_AS(cut_seam(m, {0.0, 0.0}, {0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("remove_elements") {
  const QuadMesh m = build_rect_mesh(1, 1, 4, 4);
  CHECK(same_mesh(remove_elements(m, [](const Point&) { return false; }), m));
  CHECK_THROWS_AS(remove_elements(m, [](const Point&) { return true; }), std::invalid_argument);

  const Point center(0.5, 0.5);
  const QuadMesh d = remove_elements(m, [&](const Point& c) { return (c - center).norm() < 0.3; });
  CHECK(d.num_elements() == 12);
  CHECK(d.num_nodes() == 24);  // only the center node is orphaned
  CHECK(d.side_sets.at("hole").size() == 8);
  CHECK(d.total_area() == doctest::Approx(0.75).epsilon(1e-12));
  check_mesh(d);
}

TEST_CASE("benchmark meshes are valid and deterministic") {
  for (const auto& name : benchmark_names()) {
    CAPTURE(name);
    const BenchmarkSpec spec = coarse_benchmark(name);
    const QuadMesh a = spec.build_mesh();
    const QuadMesh b = spec.build_mesh();
    check_mesh(a);
    CHECK(same_mesh(a, b));
    // grid lines snapped to notch tips and supports may sit slightly closer
    CHECK(a.h_min <= spec.h_band * (1 + 1e-9));
    CHECK(a.h_min >= 0.5 * spec.h_band);
    for (const auto& rule : spec.dirichlet) CHECK(a.node_sets.count(rule.node_set) == 1);
  }
}

TEST_CASE("benchmark mesh areas") {
  CHECK(coarse_benchmark("tension").build_mesh().total_area() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(coarse_benchmark("shear").build_mesh().total_area() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(coarse_benchmark("three_point_bending").build_mesh().total_area() == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(coarse_benchmark("l_shape").build_mesh().total_area() == doctest::Approx(187500.0).epsilon(1e-12));

  // the beam loses exactly the area of the removed stair-step holes
  const BenchmarkSpec beam = coarse_benchmark("asym_notched_beam");
  const QuadMesh m = beam.build_mesh();
  CHECK(m.total_area() < 160.0);
  CHECK(m.total_area() > 160.0 - 3.0 * M_PI * 0.25 * 0.25 * 1.5);
}
