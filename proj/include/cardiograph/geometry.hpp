#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace cardiograph {

using Vec3 = std::array<double, 3>;

enum class GeometryKind { Structured2d, Structured3d, PointCloud };

// Spatial domain shared by all solvers. Structured grids are tensor products
// with lexicographic node order (x fastest, then y, then z); point clouds
// carry coordinates only.
struct Geometry {
  GeometryKind kind = GeometryKind::Structured2d;
  std::vector<int> dims;         // nodes per axis; empty for point clouds
  std::vector<double> extent;    // physical lengths (cm); empty for point clouds
  std::vector<double> spacing;   // extent[i] / (dims[i] - 1)
  std::vector<Vec3> coords;      // per-node coordinates (cm); z = 0 in 2D
  int dim = 2;

  std::size_t node_count() const { return coords.size(); }
  bool structured() const { return kind != GeometryKind::PointCloud; }

  std::size_t index(int i, int j, int k = 0) const {
    std::size_t nx = static_cast<std::size_t>(dims[0]);
    std::size_t ny = dims.size() > 1 ? static_cast<std::size_t>(dims[1]) : 1;
    return (static_cast<std::size_t>(k) * ny + static_cast<std::size_t>(j)) * nx +
           static_cast<std::size_t>(i);
  }

  std::array<int, 3> to_ijk(std::size_t idx) const {
    int nx = dims[0];
    int ny = dims.size() > 1 ? dims[1] : 1;
    int i = static_cast<int>(idx % nx);
    int j = static_cast<int>((idx / nx) % ny);
    int k = static_cast<int>(idx / (static_cast<std::size_t>(nx) * ny));
    return {i, j, k};
  }
};

// Per-node orthonormal frame; n3 is unused in 2D.
struct FiberField {
  std::vector<Vec3> n1, n2, n3;
  int dim = 2;

  std::size_t node_count() const { return n1.size(); }
};

// Symmetric conductivity tensor per node, packed (xx, yy, zz, xy, xz, yz),
// plus the ratio constant that scales diffusion to lambda/(1+lambda)*D_i.
struct ConductivityField {
  std::array<double, 3> sigmas{};
  double lambda = 1.0;
  std::vector<std::array<double, 6>> tensors;
  int dim = 2;

  double effective_scale() const { return lambda / (1.0 + lambda); }
  std::size_t node_count() const { return tensors.size(); }
};

Geometry build_structured(const std::vector<int>& dims, const std::vector<double>& extent);
Geometry build_point_cloud(const std::vector<Vec3>& coords, int dim);

// Uniform 2D frame rotated counterclockwise by `angle`.
FiberField rotated_fibers(const Geometry& geometry, double angle);
// Global-axis frame for any geometry (the point-cloud / 3D default).
FiberField axis_fibers(const Geometry& geometry);

ConductivityField assemble_conductivity(const Geometry& geometry, const FiberField& fibers,
                                        const std::array<double, 3>& sigmas, double lambda);

}  // namespace cardiograph
