#include "cardiograph/geometry.hpp"

#include <cmath>
#include <string>

#include "cardiograph/errors.hpp"

namespace cardiograph {

Geometry build_structured(const std::vector<int>& dims, const std::vector<double>& extent) {
  if (dims.size() != extent.size() || (dims.size() != 2 && dims.size() != 3))
    raise(errc::InvalidDims, "expected 2 or 3 axes with matching extents");
  for (std::size_t a = 0; a < dims.size(); ++a) {
    if (dims[a] < 2) raise(errc::InvalidDims, "dims[" + std::to_string(a) + "] < 2");
    if (!(extent[a] > 0.0)) raise(errc::InvalidDims, "extent[" + std::to_string(a) + "] <= 0");
  }

  Geometry g;
  g.dim = static_cast<int>(dims.size());
  g.kind = g.dim == 2 ? GeometryKind::Structured2d : GeometryKind::Structured3d;
  g.dims = dims;
  g.extent = extent;
  g.spacing.resize(dims.size());
  std::size_t n = 1;
  for (std::size_t a = 0; a < dims.size(); ++a) {
    g.spacing[a] = extent[a] / (dims[a] - 1);
    n *= static_cast<std::size_t>(dims[a]);
  }
  g.coords.resize(n);
  int nz = g.dim == 3 ? dims[2] : 1;
  std::size_t idx = 0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        g.coords[idx][0] = i * g.spacing[0];
        g.coords[idx][1] = j * g.spacing[1];
        g.coords[idx][2] = g.dim == 3 ? k * g.spacing[2] : 0.0;
        ++idx;
      }
  return g;
}

Geometry build_point_cloud(const std::vector<Vec3>& coords, int dim) {
  if (coords.empty()) raise(errc::InvalidDims, "point cloud has no coordinates");
  if (dim != 2 && dim != 3) raise(errc::InvalidDims, "point cloud dim must be 2 or 3");
  Geometry g;
  g.kind = GeometryKind::PointCloud;
  g.dim = dim;
  g.coords = coords;
  return g;
}

FiberField rotated_fibers(const Geometry& geometry, double angle) {
  if (geometry.kind != GeometryKind::Structured2d)
    raise(errc::Unsupported, "rotated_fibers requires a structured 2D geometry");
  FiberField f;
  f.dim = 2;
  double c = std::cos(angle), s = std::sin(angle);
  f.n1.assign(geometry.node_count(), Vec3{c, s, 0.0});
  f.n2.assign(geometry.node_count(), Vec3{-s, c, 0.0});
  f.n3.assign(geometry.node_count(), Vec3{0.0, 0.0, 1.0});
  return f;
}

FiberField axis_fibers(const Geometry& geometry) {
  FiberField f;
  f.dim = geometry.dim;
  f.n1.assign(geometry.node_count(), Vec3{1.0, 0.0, 0.0});
  f.n2.assign(geometry.node_count(), Vec3{0.0, 1.0, 0.0});
  f.n3.assign(geometry.node_count(), Vec3{0.0, 0.0, 1.0});
  return f;
}

ConductivityField assemble_conductivity(const Geometry& geometry, const FiberField& fibers,
                                        const std::array<double, 3>& sigmas, double lambda) {
  for (double s : sigmas)
    if (s < 0.0) raise(errc::NegativeSigma, "conductivity sigma < 0");
  if (!(lambda > 0.0)) raise(errc::ConfigError, "lambda must be positive");
  if (fibers.node_count() != geometry.node_count())
    raise(errc::GeometryMismatch, "fiber frame count differs from node count");

  ConductivityField c;
  c.sigmas = sigmas;
  c.lambda = lambda;
  c.dim = geometry.dim;
  c.tensors.resize(geometry.node_count());
  for (std::size_t p = 0; p < geometry.node_count(); ++p) {
    const Vec3* axes[3] = {&fibers.n1[p], &fibers.n2[p], &fibers.n3[p]};
    std::array<double, 6> t{};
    int naxes = geometry.dim == 3 ? 3 : 2;
    for (int a = 0; a < naxes; ++a) {
      const Vec3& n = *axes[a];
      double s = sigmas[a];
      t[0] += s * n[0] * n[0];
      t[1] += s * n[1] * n[1];
      t[2] += s * n[2] * n[2];
      t[3] += s * n[0] * n[1];
      t[4] += s * n[0] * n[2];
      t[5] += s * n[1] * n[2];
    }
    c.tensors[p] = t;
  }
  return c;
}

}  // namespace cardiograph
