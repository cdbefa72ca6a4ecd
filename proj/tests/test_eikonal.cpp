#include <cmath>
#include <cstddef>
#include <vector>

#include <doctest.h>

#include "cardiograph/eikonal.hpp"
#include "cardiograph/errors.hpp"
#include "cardiograph/geometry.hpp"

using namespace cardiograph;

namespace {

// Isotropic conductivity sigma on an n x n unit sheet with a point source at
// the center; the exact arrival time is |x - x0| / (c0 sqrt(m)) with
// m = lambda/(1+lambda) * sigma.
std::vector<double> solve_isotropic(int n, double sigma, double c0, double* mean_abs_err) {
  const Geometry g = build_structured({n, n}, {1.0, 1.0});
  const ConductivityField cond =
      assemble_conductivity(g, axis_fibers(g), {sigma, sigma, sigma}, 1.0);
  const std::size_t src = g.index(n / 2, n / 2);
  const EikonalProblem p = make_eikonal_problem(cond, c0, {src}, {0.0});
  const std::vector<double> psi = solve_eikonal(p, g);

  const double m = cond.effective_scale() * sigma;
  const Vec3 x0 = g.coords[src];
  double err = 0.0;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const double dx = g.coords[i][0] - x0[0];
    const double dy = g.coords[i][1] - x0[1];
    const double exact = std::sqrt(dx * dx + dy * dy) / (c0 * std::sqrt(m));
    err += std::abs(psi[i] - exact);
  }
  *mean_abs_err = err / static_cast<double>(g.node_count());
  return psi;
}

}  // namespace

TEST_CASE("the metric combines conductivity with the surface ratio") {
  const Geometry g = build_structured({5, 5}, {1.0, 1.0});
  const ConductivityField cond =
      assemble_conductivity(g, axis_fibers(g), {2e-3, 4e-4, 4e-4}, 1.0);
  const EikonalProblem p = make_eikonal_problem(cond, 1.0, {0}, {0.0});
  CHECK(p.M[0][0] == doctest::Approx(0.5 * 2e-3));
  CHECK(p.M[0][1] == doctest::Approx(0.5 * 4e-4));
  CHECK(p.M[0][3] == doctest::Approx(0.0));
}

TEST_CASE("a point source reproduces the isotropic distance solution") {
  double err = 0.0;
  const std::vector<double> psi = solve_isotropic(51, 1e-3, 1.0, &err);
  const double scale = 1.0 / std::sqrt(0.5 * 1e-3);  // arrival time at unit distance
  CHECK(psi[51 * 25 + 25] == 0.0);
  CHECK(err / scale < 0.02);  // mean error per unit travel time
  // Corner arrival within a few percent of sqrt(0.5)/sqrt(m).
  const double corner_exact = std::sqrt(0.5) * scale;
  CHECK(psi[0] == doctest::Approx(corner_exact).epsilon(0.06));
}

TEST_CASE("refinement shrinks the error at first order") {
  // Exact data on a fixed-radius disk removes the point-source singularity,
  // which otherwise caps the observed rate near 0.7.
  auto disk_err = [](int n) {
    const Geometry g = build_structured({n, n}, {1.0, 1.0});
    const ConductivityField cond =
        assemble_conductivity(g, axis_fibers(g), {1e-3, 1e-3, 1e-3}, 1.0);
    const double m = cond.effective_scale() * 1e-3;
    const Vec3 x0 = g.coords[g.index(n / 2, n / 2)];
    std::vector<std::size_t> nodes;
    std::vector<double> vals;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      const double dx = g.coords[i][0] - x0[0];
      const double dy = g.coords[i][1] - x0[1];
      const double d = std::sqrt(dx * dx + dy * dy);
      if (d <= 0.1) {
        nodes.push_back(i);
        vals.push_back(d / std::sqrt(m));
      }
    }
    const std::vector<double> psi =
        solve_eikonal(make_eikonal_problem(cond, 1.0, nodes, vals), g);
    double err = 0.0;
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      const double dx = g.coords[i][0] - x0[0];
      const double dy = g.coords[i][1] - x0[1];
      err += std::abs(psi[i] - std::sqrt(dx * dx + dy * dy) / std::sqrt(m));
    }
    return err / static_cast<double>(g.node_count());
  };
  const double order = std::log2(disk_err(26) / disk_err(51));
  CHECK(order > 0.9);
}

TEST_CASE("axis propagation through an anisotropic tensor is exact") {
  const int n = 51;
  const Geometry g = build_structured({n, n}, {1.0, 1.0});
  const ConductivityField cond =
      assemble_conductivity(g, axis_fibers(g), {2e-3, 4e-4, 4e-4}, 1.0);
  const std::size_t src = g.index(n / 2, n / 2);
  const EikonalProblem p = make_eikonal_problem(cond, 1.0, {src}, {0.0});
  const std::vector<double> psi = solve_eikonal(p, g);

  const double mx = 0.5 * 2e-3;
  const double my = 0.5 * 4e-4;
  const double d = 20.0 / (n - 1.0);  // 20 cells from the source
  CHECK(psi[g.index(n / 2 + 20, n / 2)] == doctest::Approx(d / std::sqrt(mx)).epsilon(1e-6));
  CHECK(psi[g.index(n / 2, n / 2 + 20)] == doctest::Approx(d / std::sqrt(my)).epsilon(1e-6));
  // The fast (fiber) axis arrives sqrt(sigma_l / sigma_t) sooner.
  CHECK(psi[g.index(n / 2, n / 2 + 20)] / psi[g.index(n / 2 + 20, n / 2)] ==
        doctest::Approx(std::sqrt(5.0)).epsilon(1e-6));
}

TEST_CASE("several sources act as a pointwise minimum") {
  const int n = 31;
  const Geometry g = build_structured({n, n}, {1.0, 1.0});
  const ConductivityField cond =
      assemble_conductivity(g, axis_fibers(g), {1e-3, 1e-3, 1e-3}, 1.0);
  const std::size_t s1 = g.index(5, 5);
  const std::size_t s2 = g.index(25, 22);

  const std::vector<double> a =
      solve_eikonal(make_eikonal_problem(cond, 1.0, {s1}, {0.0}), g);
  const std::vector<double> b =
      solve_eikonal(make_eikonal_problem(cond, 1.0, {s2}, {0.0}), g);
  const std::vector<double> both =
      solve_eikonal(make_eikonal_problem(cond, 1.0, {s1, s2}, {0.0, 0.0}), g);
  // Extra sources can only speed arrival (monotone scheme); where the two
  // discrete fronts collide, simplex updates may mix them and undercut the
  // single-front values by O(h), so the lower bound carries slack.
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const double lo = std::min(a[i], b[i]);
    CHECK(both[i] <= lo + 1e-9);
    CHECK(both[i] >= lo * (1.0 - 0.02));
  }
}

TEST_CASE("source values shift the solution additively") {
  const int n = 21;
  const Geometry g = build_structured({n, n}, {1.0, 1.0});
  const ConductivityField cond =
      assemble_conductivity(g, axis_fibers(g), {1e-3, 1e-3, 1e-3}, 1.0);
  const std::size_t src = g.index(10, 10);
  const std::vector<double> zero =
      solve_eikonal(make_eikonal_problem(cond, 1.0, {src}, {0.0}), g);
  const std::vector<double> five =
      solve_eikonal(make_eikonal_problem(cond, 1.0, {src}, {5.0}), g);
  for (std::size_t i = 0; i < g.node_count(); ++i)
    CHECK(five[i] == doctest::Approx(zero[i] + 5.0).epsilon(1e-9));
}

TEST_CASE("calibration divides velocity by the root conductivity") {
  CHECK(calibrate_c0(0.06, 1e-3) == doctest::Approx(0.06 / std::sqrt(1e-3)));
  CHECK_THROWS_WITH_AS((void)calibrate_c0(0.0, 1e-3), doctest::Contains("NonPositiveVelocity"),
                       Error);
  CHECK_THROWS_WITH_AS((void)calibrate_c0(-1.0, 1e-3),
                       doctest::Contains("NonPositiveVelocity"), Error);
  CHECK_THROWS_AS((void)calibrate_c0(0.06, 0.0), Error);
}

TEST_CASE("problem construction validates its inputs") {
  const Geometry g = build_structured({5, 5}, {1.0, 1.0});
  const ConductivityField cond =
      assemble_conductivity(g, axis_fibers(g), {1e-3, 1e-3, 1e-3}, 1.0);
  CHECK_THROWS_AS((void)make_eikonal_problem(cond, 1.0, {}, {}), Error);
  CHECK_THROWS_AS((void)make_eikonal_problem(cond, 1.0, {0}, {0.0, 1.0}), Error);
  CHECK_THROWS_AS((void)make_eikonal_problem(cond, 0.0, {0}, {0.0}), Error);
  const EikonalProblem bad_node = make_eikonal_problem(cond, 1.0, {999}, {0.0});
  CHECK_THROWS_AS((void)solve_eikonal(bad_node, g), Error);
}
