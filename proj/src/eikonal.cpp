#include "cardiograph/eikonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cardiograph/errors.hpp"
#include "cardiograph/threading.hpp"

namespace cardiograph {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTol = 1e-8;

// 3x3 inverse of a packed symmetric tensor; validates positive definiteness.
std::array<double, 6> invert_spd(const std::array<double, 6>& t, int dim) {
  if (dim == 2) {
    const double det = t[0] * t[1] - t[3] * t[3];
    if (!(t[0] > 0.0) || !(det > 0.0))
      raise(errc::NotConverged, "metric tensor is not positive definite");
    return {t[1] / det, t[0] / det, 0.0, -t[3] / det, 0.0, 0.0};
  }
  const double a = t[0], b = t[1], c = t[2], d = t[3], e = t[4], f = t[5];
  const double A = b * c - f * f, B = e * f - d * c, C = d * f - b * e;
  const double det = a * A + d * B + e * C;
  if (!(a > 0.0) || !(a * b - d * d > 0.0) || !(det > 0.0))
    raise(errc::NotConverged, "metric tensor is not positive definite");
  return {A / det, (a * c - e * e) / det, (a * b - d * d) / det,
          B / det, C / det,               (d * e - a * f) / det};
}

double quad_form(const std::array<double, 6>& m, const double* r) {
  return m[0] * r[0] * r[0] + m[1] * r[1] * r[1] + m[2] * r[2] * r[2] +
         2.0 * (m[3] * r[0] * r[1] + m[4] * r[0] * r[2] + m[5] * r[1] * r[2]);
}

double bilin_form(const std::array<double, 6>& m, const double* a, const double* b) {
  return m[0] * a[0] * b[0] + m[1] * a[1] * b[1] + m[2] * a[2] * b[2] +
         m[3] * (a[0] * b[1] + a[1] * b[0]) + m[4] * (a[0] * b[2] + a[2] * b[0]) +
         m[5] * (a[1] * b[2] + a[2] * b[1]);
}

struct LocalSolver {
  const std::array<double, 6>& minv;
  double inv_c0;

  double point_update(double psi_a, const double* r0) const {
    return psi_a + inv_c0 * std::sqrt(quad_form(minv, r0));
  }

  // Two-neighbor simplex: min over t in [0,1] of
  //   (1-t) psi_a + t psi_b + |r0 - t s|_{M^-1} / c0.
  double edge_update(double psi_a, double psi_b, const double* r0, const double* s) const {
    const double a = quad_form(minv, s);
    const double b = bilin_form(minv, s, r0);
    const double c = quad_form(minv, r0);
    const double delta = psi_b - psi_a;
    double best = kInf;
    auto value = [&](double t) {
      const double q = std::max(c - 2.0 * b * t + a * t * t, 0.0);
      return psi_a + t * delta + inv_c0 * std::sqrt(q);
    };
    best = std::min(value(0.0), value(1.0));
    const double denom = a - delta * delta / (inv_c0 * inv_c0);
    const double disc = a * c - b * b;  // >= 0 by Cauchy-Schwarz
    if (denom > 0.0 && disc >= 0.0) {
      const double u = (delta / inv_c0) * std::sqrt(disc / denom);
      const double t = (b - u) / a;
      if (t > 0.0 && t < 1.0) best = std::min(best, value(t));
    }
    return best;
  }

  // Three-neighbor simplex (3D): stationary point of the interpolated value
  // plus travel time over the face triangle, with barycentric feasibility.
  double face_update(const double psi[3], const double* r0, const double* s1,
                     const double* s2) const {
    const double g11 = quad_form(minv, s1), g22 = quad_form(minv, s2);
    const double g12 = bilin_form(minv, s1, s2);
    const double h1 = bilin_form(minv, s1, r0), h2 = bilin_form(minv, s2, r0);
    const double c = quad_form(minv, r0);
    const double d1 = psi[1] - psi[0], d2 = psi[2] - psi[0];
    const double det = g11 * g22 - g12 * g12;
    if (!(det > 0.0)) return kInf;
    // t(phi) = G^-1 h - phi c0 G^-1 d, phi = |r|_{M^-1} at the optimum.
    const double t01 = (g22 * h1 - g12 * h2) / det;
    const double t02 = (g11 * h2 - g12 * h1) / det;
    const double u01 = (g22 * d1 - g12 * d2) / det / inv_c0;
    const double u02 = (g11 * d2 - g12 * d1) / det / inv_c0;
    const double num = c - (h1 * t01 + h2 * t02);
    const double den = 1.0 - (d1 * u01 + d2 * u02) / inv_c0;
    if (!(den > 0.0) || num < 0.0) return kInf;
    const double phi = std::sqrt(num / den);
    const double t1 = t01 - phi * u01;
    const double t2 = t02 - phi * u02;
    if (t1 <= 0.0 || t2 <= 0.0 || t1 + t2 >= 1.0) return kInf;
    return psi[0] + t1 * d1 + t2 * d2 + inv_c0 * phi;
  }
};

}  // namespace

EikonalProblem make_eikonal_problem(const ConductivityField& cond, double c0,
                                    const std::vector<std::size_t>& source_nodes,
                                    const std::vector<double>& source_values) {
  if (source_nodes.empty()) raise(errc::ConfigError, "eikonal source set is empty");
  if (source_nodes.size() != source_values.size())
    raise(errc::ShapeMismatch, "source node and value counts differ");
  if (!(c0 > 0.0)) raise(errc::ConfigError, "c0 must be positive");
  EikonalProblem p;
  p.c0 = c0;
  p.source_nodes = source_nodes;
  p.source_values = source_values;
  const double s = cond.effective_scale();
  p.M.resize(cond.node_count());
  for (std::size_t i = 0; i < cond.node_count(); ++i) {
    for (int k = 0; k < 6; ++k) p.M[i][k] = s * cond.tensors[i][k];
  }
  return p;
}

std::vector<double> solve_eikonal(const EikonalProblem& p, const Geometry& geometry) {
  if (!geometry.structured()) raise(errc::Unsupported, "eikonal requires a structured grid");
  const std::size_t n = geometry.node_count();
  if (p.M.size() != n) raise(errc::GeometryMismatch, "metric field size differs from node count");
  if (p.source_nodes.empty()) raise(errc::ConfigError, "eikonal source set is empty");

  const int dim = geometry.dim;
  std::vector<std::array<double, 6>> minv(n);
#pragma omp parallel for schedule(static) num_threads(threading::effective_workers())
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
    minv[i] = invert_spd(p.M[i], dim);

  std::vector<double> psi(n, kInf);
  std::vector<std::uint8_t> is_source(n, 0);
  for (std::size_t s = 0; s < p.source_nodes.size(); ++s) {
    const std::size_t node = p.source_nodes[s];
    if (node >= n) raise(errc::GeometryMismatch, "source node out of range");
    psi[node] = std::min(psi[node], p.source_values[s]);
    is_source[node] = 1;
  }

  const auto& dims = geometry.dims;
  const int nx = dims[0], ny = dims[1], nz = dim == 3 ? dims[2] : 1;
  const std::int64_t stride[3] = {1, nx, static_cast<std::int64_t>(nx) * ny};
  const auto& h = geometry.spacing;

  // Candidate value for node q from the current psi snapshot: minimum over
  // all upwind simplexes in every axis-sign orthant.
  auto local_solve = [&](std::size_t q, const std::vector<double>& field) {
    const auto ijk = geometry.to_ijk(q);
    const LocalSolver ls{minv[q], 1.0 / p.c0};
    double best = kInf;
    double r0[3], sB[3], sC[3];
    const int axdim[3] = {nx, ny, nz};
    const int sgn[2] = {-1, 1};
    // Neighbor offsets present per axis-sign choice.
    for (int da = 0; da < 2; ++da) {
      const int ia = ijk[0] + sgn[da];
      const bool okA = ia >= 0 && ia < axdim[0];
      const double psiA = okA ? field[q + sgn[da] * stride[0]] : kInf;
      double rA[3] = {sgn[da] * h[0], 0.0, 0.0};
      if (okA && psiA < kInf) best = std::min(best, ls.point_update(psiA, rA));
      for (int db = 0; db < 2; ++db) {
        const int jb = ijk[1] + sgn[db];
        const bool okB = jb >= 0 && jb < axdim[1];
        const double psiB = okB ? field[q + sgn[db] * stride[1]] : kInf;
        double rB[3] = {0.0, sgn[db] * h[1], 0.0};
        if (da == 0 && okB && psiB < kInf) best = std::min(best, ls.point_update(psiB, rB));
        // Convention: r0 = dA (offset of neighbor A), s = dA - dB, so that
        // q(t) = |dA + t (dB - dA)|^2 in the M^-1 metric.
        if (okA && okB && psiA < kInf && psiB < kInf) {
          r0[0] = rA[0]; r0[1] = 0.0; r0[2] = 0.0;
          sB[0] = rA[0] - rB[0]; sB[1] = -rB[1]; sB[2] = 0.0;
          best = std::min(best, ls.edge_update(psiA, psiB, r0, sB));
        }
        if (dim == 2) continue;
        for (int dc = 0; dc < 2; ++dc) {
          const int kc = ijk[2] + sgn[dc];
          const bool okC = kc >= 0 && kc < axdim[2];
          const double psiC = okC ? field[q + sgn[dc] * stride[2]] : kInf;
          double rC[3] = {0.0, 0.0, sgn[dc] * h[2]};
          if (da == 0 && db == 0 && okC && psiC < kInf)
            best = std::min(best, ls.point_update(psiC, rC));
          if (da == 0 && okB && okC && psiB < kInf && psiC < kInf) {
            r0[0] = 0.0; r0[1] = rB[1]; r0[2] = 0.0;
            sC[0] = 0.0; sC[1] = rB[1]; sC[2] = -rC[2];
            best = std::min(best, ls.edge_update(psiB, psiC, r0, sC));
          }
          if (okA && okC && psiA < kInf && psiC < kInf) {
            r0[0] = rA[0]; r0[1] = 0.0; r0[2] = 0.0;
            sC[0] = rA[0]; sC[1] = 0.0; sC[2] = -rC[2];
            best = std::min(best, ls.edge_update(psiA, psiC, r0, sC));
          }
          if (okA && okB && okC && psiA < kInf && psiB < kInf && psiC < kInf) {
            r0[0] = rA[0]; r0[1] = 0.0; r0[2] = 0.0;
            sB[0] = rA[0]; sB[1] = -rB[1]; sB[2] = 0.0;
            sC[0] = rA[0]; sC[1] = 0.0; sC[2] = -rC[2];
            const double vals[3] = {psiA, psiB, psiC};
            best = std::min(best, ls.face_update(vals, r0, sB, sC));
          }
        }
      }
    }
    return best;
  };

  auto neighbors = [&](std::size_t q, auto&& fn) {
    const auto ijk = geometry.to_ijk(q);
    const int axdim[3] = {nx, ny, nz};
    for (int a = 0; a < dim; ++a) {
      if (ijk[a] > 0) fn(q - stride[a]);
      if (ijk[a] + 1 < axdim[a]) fn(q + stride[a]);
    }
  };

  std::vector<std::uint8_t> active(n, 0);
  std::vector<std::size_t> list;
  for (std::size_t s = 0; s < p.source_nodes.size(); ++s)
    neighbors(p.source_nodes[s], [&](std::size_t q) {
      if (!is_source[q] && !active[q]) {
        active[q] = 1;
        list.push_back(q);
      }
    });
  std::sort(list.begin(), list.end());
  list.erase(std::unique(list.begin(), list.end()), list.end());

  std::vector<double> cand(n, 0.0);
  const std::size_t sweep_cap = 40 * static_cast<std::size_t>(nx + ny + nz) + 1000;
  std::size_t sweep = 0;
  while (!list.empty()) {
    if (++sweep > sweep_cap)
      raise(errc::NotConverged, "eikonal sweeps exceeded " + std::to_string(sweep_cap));

    // Jacobi phase: every active node reads the same psi snapshot.
    const std::int64_t m = static_cast<std::int64_t>(list.size());
#pragma omp parallel for schedule(static) num_threads(threading::effective_workers())
    for (std::int64_t li = 0; li < m; ++li) {
      const std::size_t q = list[li];
      cand[q] = std::min(psi[q], local_solve(q, psi));
    }

    std::vector<std::size_t> next;
    std::vector<std::size_t> settled;
    for (std::size_t q : list) {
      const bool converged = psi[q] < kInf && psi[q] - cand[q] < kTol;
      psi[q] = cand[q];
      if (converged) {
        active[q] = 0;
        settled.push_back(q);
      } else {
        next.push_back(q);
      }
    }
    // Wake neighbors of settled nodes whose value can still improve.
    for (std::size_t q : settled)
      neighbors(q, [&](std::size_t nb) {
        if (is_source[nb] || active[nb]) return;
        if (local_solve(nb, psi) < psi[nb] - kTol) {
          active[nb] = 1;
          next.push_back(nb);
        }
      });
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    list.swap(next);
  }

  for (std::size_t i = 0; i < n; ++i)
    if (psi[i] == kInf) raise(errc::NotConverged, "unreached node " + std::to_string(i));
  return psi;
}

double calibrate_c0(double velocity, double sigma_along) {
  if (!(velocity > 0.0)) raise(errc::NonPositiveVelocity, "velocity must be positive");
  if (!(sigma_along > 0.0)) raise(errc::ConfigError, "sigma_along must be positive");
  return velocity / std::sqrt(sigma_along);
}

}  // namespace cardiograph
