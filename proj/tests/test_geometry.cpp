#include <cmath>
#include <vector>

#include <doctest.h>

#include "cardiograph/errors.hpp"
#include "cardiograph/geometry.hpp"

using namespace cardiograph;

TEST_CASE("structured grids enumerate nodes x-fastest") {
  const Geometry g = build_structured({3, 4}, {1.0, 1.5});
  CHECK(g.node_count() == 12);
  CHECK(g.dim == 2);
  CHECK(g.spacing[0] == doctest::Approx(0.5));
  CHECK(g.spacing[1] == doctest::Approx(0.5));
  CHECK(g.index(1, 2) == 7);
  const auto ijk = g.to_ijk(7);
  CHECK(ijk[0] == 1);
  CHECK(ijk[1] == 2);
  CHECK(g.coords[7][0] == doctest::Approx(0.5));
  CHECK(g.coords[7][1] == doctest::Approx(1.0));
  CHECK(g.coords[7][2] == 0.0);
}

TEST_CASE("3D index round-trips through to_ijk") {
  const Geometry g = build_structured({4, 3, 5}, {1.0, 1.0, 2.0});
  CHECK(g.node_count() == 60);
  CHECK(g.dim == 3);
  for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
    const auto ijk = g.to_ijk(idx);
    CHECK(g.index(ijk[0], ijk[1], ijk[2]) == idx);
  }
}

TEST_CASE("degenerate grid specs are rejected") {
  CHECK_THROWS_AS(build_structured({4}, {1.0}), Error);
  CHECK_THROWS_AS(build_structured({4, 4, 4, 4}, {1.0, 1.0, 1.0, 1.0}), Error);
  CHECK_THROWS_AS(build_structured({1, 4}, {1.0, 1.0}), Error);
  CHECK_THROWS_AS(build_structured({4, 4}, {1.0}), Error);
  CHECK_THROWS_AS(build_structured({4, 4}, {1.0, -1.0}), Error);
}

TEST_CASE("point clouds carry coordinates only") {
  const Geometry g = build_point_cloud({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, 2);
  CHECK(g.node_count() == 3);
  CHECK_FALSE(g.structured());
  CHECK(g.dims.empty());
}

TEST_CASE("a 45-degree fiber frame mixes the principal conductivities") {
  const Geometry g = build_structured({5, 5}, {1.0, 1.0});
  const FiberField f = rotated_fibers(g, M_PI / 4.0);
  const ConductivityField cond = assemble_conductivity(g, f, {2.0, 1.0, 1.0}, 1.0);
  REQUIRE(cond.node_count() == g.node_count());
  for (const auto& t : cond.tensors) {
    CHECK(t[0] == doctest::Approx(1.5).epsilon(1e-12));  // xx
    CHECK(t[1] == doctest::Approx(1.5).epsilon(1e-12));  // yy
    CHECK(t[3] == doctest::Approx(0.5).epsilon(1e-12));  // xy
  }
  CHECK(cond.effective_scale() == doctest::Approx(0.5));
}

TEST_CASE("axis-aligned fibers give a diagonal tensor") {
  const Geometry g = build_structured({4, 4}, {1.0, 1.0});
  const ConductivityField cond =
      assemble_conductivity(g, axis_fibers(g), {2e-3, 4e-4, 4e-4}, 1.0);
  for (const auto& t : cond.tensors) {
    CHECK(t[0] == doctest::Approx(2e-3));
    CHECK(t[1] == doctest::Approx(4e-4));
    CHECK(t[3] == doctest::Approx(0.0));
  }
}

TEST_CASE("rotation by pi/2 swaps the principal axes") {
  const Geometry g = build_structured({4, 4}, {1.0, 1.0});
  const ConductivityField cond =
      assemble_conductivity(g, rotated_fibers(g, M_PI / 2.0), {2.0, 0.5, 0.5}, 1.0);
  CHECK(cond.tensors[0][0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(cond.tensors[0][1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(cond.tensors[0][3] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("negative conductivities are rejected") {
  const Geometry g = build_structured({4, 4}, {1.0, 1.0});
  CHECK_THROWS_AS(assemble_conductivity(g, axis_fibers(g), {-1.0, 1.0, 1.0}, 1.0), Error);
}
