#pragma once

#include <cstddef>
#include <vector>

#include "cardiograph/geometry.hpp"

namespace cardiograph {

// First-order anisotropic eikonal problem c0 sqrt(grad(psi)' M grad(psi)) = 1
// with Dirichlet data psi_D on a source node set. M is the scaled conductivity
// tensor lambda/(1+lambda) * D_i, so psi is the front arrival time (ms).
struct EikonalProblem {
  std::vector<std::array<double, 6>> M;  // per-node symmetric tensor, packed
  double c0 = 1.0;
  std::vector<std::size_t> source_nodes;
  std::vector<double> source_values;
};

EikonalProblem make_eikonal_problem(const ConductivityField& cond, double c0,
                                    const std::vector<std::size_t>& source_nodes,
                                    const std::vector<double>& source_values);

// Fast iterative method with Jacobi-style snapshot sweeps; the local solver
// minimizes the interpolated neighbor value plus segment travel time under the
// metric M^{-1} over simplexes of upwind axis neighbors.
std::vector<double> solve_eikonal(const EikonalProblem& p, const Geometry& geometry);

// c0 such that the planar eikonal front matches the measured monodomain speed
// along the fiber direction: c0 = velocity / sqrt(sigma_along).
double calibrate_c0(double velocity, double sigma_along);

}  // namespace cardiograph
