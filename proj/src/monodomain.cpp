#include "cardiograph/monodomain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cardiograph/errors.hpp"
#include "cardiograph/threading.hpp"

namespace cardiograph {

void validate_stimulus(const Stimulus& stim, std::size_t node_count) {
  if (stim.mask.size() != node_count)
    raise(errc::GeometryMismatch, "stimulus mask length differs from node count");
  if (!(stim.duration > 0.0)) raise(errc::ConfigError, "stimulus duration must be positive");
  if (std::find(stim.mask.begin(), stim.mask.end(), std::uint8_t{1}) == stim.mask.end())
    raise(errc::EmptyMask, "stimulus mask has no active node");
}

MonodomainSolver::MonodomainSolver(const Geometry& geometry, const ConductivityField& cond,
                                   const MonodomainConfig& cfg)
    : geometry_(&geometry), cfg_(cfg) {
  if (!geometry.structured()) raise(errc::Unsupported, "monodomain requires a structured grid");
  if (cond.node_count() != geometry.node_count())
    raise(errc::GeometryMismatch, "conductivity field size differs from node count");
  if (!(cfg.dt > 0.0)) raise(errc::ConfigError, "dt must be positive");
  if (!(0.0 < cfg.v_rep && cfg.v_rep <= cfg.v_act && cfg.v_act < cfg.ionic.v_p))
    raise(errc::ConfigError, "thresholds must satisfy 0 < v_rep <= v_act < v_p");
  n_ = geometry.node_count();

  const int dim = geometry.dim;
  max_neighbors_ = dim == 2 ? 8 : 18;
  nbr_index_.assign(n_ * max_neighbors_, -1);
  nbr_weight_.assign(n_ * max_neighbors_, 0.0);
  diag_.assign(n_, 0.0);

  const double s = cond.effective_scale();
  const auto& h = geometry.spacing;
  const auto& dims = geometry.dims;
  const int nx = dims[0], ny = dims[1], nz = dim == 3 ? dims[2] : 1;

  // Packed tensor component index for the (a, b) off-diagonal.
  auto cross_comp = [](int a, int b) { return a + b == 1 ? 3 : (a + b == 2 ? 4 : 5); };
  // Axis strides in lexicographic node order.
  const std::int64_t stride[3] = {1, nx, static_cast<std::int64_t>(nx) * ny};
  const int axdim[3] = {nx, ny, nz};

  std::vector<int> slot(n_, 0);
  auto add_edge = [&](std::size_t p, std::size_t q, double w) {
    // K contribution w*(e_p - e_q)(e_p - e_q)^T, scaled later by s.
    diag_[p] += w;
    diag_[q] += w;
    nbr_index_[p * max_neighbors_ + slot[p]] = static_cast<std::int64_t>(q);
    nbr_weight_[p * max_neighbors_ + slot[p]] = -w;
    ++slot[p];
    nbr_index_[q * max_neighbors_ + slot[q]] = static_cast<std::int64_t>(p);
    nbr_weight_[q * max_neighbors_ + slot[q]] = -w;
    ++slot[q];
  };

  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const int ijk[3] = {i, j, k};
        const std::size_t p = geometry.index(i, j, k);
        // Axis edges toward the positive side.
        for (int a = 0; a < dim; ++a) {
          if (ijk[a] + 1 >= axdim[a]) continue;
          const std::size_t q = p + stride[a];
          const double daa = 0.5 * (cond.tensors[p][a] + cond.tensors[q][a]);
          add_edge(p, q, daa / (h[a] * h[a]));
        }
        // Diagonal edges carrying the mixed terms: the (a, b) cross term
        // splits into +D_ab/(2 h_a h_b) along e_a+e_b and the negative of
        // that along e_a-e_b.
        for (int a = 0; a < dim; ++a)
          for (int b = a + 1; b < dim; ++b) {
            const int comp = cross_comp(a, b);
            const double inv = 1.0 / (2.0 * h[a] * h[b]);
            if (ijk[a] + 1 < axdim[a] && ijk[b] + 1 < axdim[b]) {
              const std::size_t q = p + stride[a] + stride[b];
              const double dab = 0.5 * (cond.tensors[p][comp] + cond.tensors[q][comp]);
              if (dab != 0.0) add_edge(p, q, dab * inv);
            }
            if (ijk[a] + 1 < axdim[a] && ijk[b] - 1 >= 0) {
              const std::size_t q = p + stride[a] - stride[b];
              const double dab = 0.5 * (cond.tensors[p][comp] + cond.tensors[q][comp]);
              if (dab != 0.0) add_edge(p, q, -dab * inv);
            }
          }
      }

  const double mass = cfg_.chi * cfg_.c_m / cfg_.dt;
  inv_diag_.resize(n_);
  for (std::size_t p = 0; p < n_; ++p) {
    diag_[p] = mass + s * diag_[p];
    for (int t = 0; t < max_neighbors_; ++t) nbr_weight_[p * max_neighbors_ + t] *= s;
    inv_diag_[p] = 1.0 / diag_[p];
  }
}

void MonodomainSolver::apply_system(const std::vector<double>& x, std::vector<double>& y) const {
  const std::int64_t m = max_neighbors_;
#pragma omp parallel for schedule(static) num_threads(threading::effective_workers())
  for (std::int64_t p = 0; p < static_cast<std::int64_t>(n_); ++p) {
    double acc = diag_[p] * x[p];
    const std::int64_t* idx = &nbr_index_[p * m];
    const double* w = &nbr_weight_[p * m];
    for (std::int64_t t = 0; t < m; ++t)
      if (idx[t] >= 0) acc += w[t] * x[idx[t]];
    y[p] = acc;
  }
}

int MonodomainSolver::cg_solve(std::vector<double>& x, const std::vector<double>& b) const {
  const std::size_t n = n_;
  double bnorm2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) bnorm2 += b[i] * b[i];
  // Long-quiescent tissue decays v toward denormals; once bnorm2 is this
  // small, tol2 below would underflow to an unreachable 0, and the solution
  // itself (|x| <= ||b|| dt / (chi c_m)) is far beneath roundoff of any
  // physical voltage. Snap to rest instead of iterating.
  if (bnorm2 <= 1e-280) {
    std::fill(x.begin(), x.end(), 0.0);
    return 0;
  }
  const double tol2 = cfg_.cg_tol * cfg_.cg_tol * bnorm2;

  static thread_local std::vector<double> r, z, p, ap;
  r.resize(n);
  z.resize(n);
  p.resize(n);
  ap.resize(n);

  apply_system(x, ap);
  double rr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = b[i] - ap[i];
    rr += r[i] * r[i];
  }
  if (rr <= tol2) return 0;

  double rz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = inv_diag_[i] * r[i];
    p[i] = z[i];
    rz += r[i] * z[i];
  }

  const std::size_t cap = 10 * n;
  for (std::size_t it = 1; it <= cap; ++it) {
    apply_system(p, ap);
    double pap = 0.0;
    for (std::size_t i = 0; i < n; ++i) pap += p[i] * ap[i];
    const double alpha = rz / pap;
    rr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
      rr += r[i] * r[i];
    }
    if (rr <= tol2) return static_cast<int>(it);
    double rz_next = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = inv_diag_[i] * r[i];
      rz_next += r[i] * z[i];
    }
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  raise(errc::LinearSolveDiverged, "CG exceeded " + std::to_string(cap) + " iterations");
}

void MonodomainSolver::step(std::vector<double>& v, std::vector<double>& w, double t,
                            const Stimulus& stim) const {
  if (v.size() != n_ || w.size() != n_)
    raise(errc::ShapeMismatch, "state fields sized differently from geometry");
  if (stim.mask.size() != n_)
    raise(errc::GeometryMismatch, "stimulus mask length differs from node count");

  const double mass = cfg_.chi * cfg_.c_m / cfg_.dt;
  const bool stim_on = stim.intensity != 0.0 && t < stim.duration;
  static thread_local std::vector<double> rhs;
  rhs.resize(n_);
  const IonicParams& ion = cfg_.ionic;
#pragma omp parallel for schedule(static) num_threads(threading::effective_workers())
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n_); ++i) {
    double iapp = stim_on && stim.mask[i] ? stim.intensity : 0.0;
    rhs[i] = mass * v[i] - ionic_current(v[i], w[i], ion) + iapp;
    w[i] += cfg_.dt * recovery_rhs(v[i], w[i], ion);
  }
  cg_solve(v, rhs);
}

TimeMaps MonodomainSolver::simulate(const Stimulus& stim) const {
  return simulate(stim, Snapshot{}, 0.0);
}

TimeMaps MonodomainSolver::simulate(const Stimulus& stim, const Snapshot& snapshot,
                                    double snapshot_every_ms) const {
  validate_stimulus(stim, n_);

  std::vector<double> v(n_, cfg_.v0), w(n_, cfg_.w0);
  std::vector<double> v_prev(n_);
  TimeMaps maps;
  maps.activation.assign(n_, -1.0);
  maps.repolarization.assign(n_, -1.0);
  maps.valid.assign(n_, 0);

  const int steps = static_cast<int>(std::ceil(cfg_.t_end / cfg_.dt));
  const int snap_stride =
      snapshot && snapshot_every_ms > 0.0
          ? std::max(1, static_cast<int>(std::llround(snapshot_every_ms / cfg_.dt)))
          : 0;
  if (snapshot) snapshot(0, 0.0, v);

  for (int k = 0; k < steps; ++k) {
    const double t = k * cfg_.dt;
    v_prev = v;
    step(v, w, t, stim);
    const double t_next = t + cfg_.dt;

    double vmax = 0.0;
#pragma omp parallel for schedule(static) reduction(max : vmax) \
    num_threads(threading::effective_workers())
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n_); ++i) {
      const double a = v_prev[i], b = v[i];
      if (a < cfg_.v_act && b >= cfg_.v_act && maps.activation[i] < 0.0)
        maps.activation[i] = t + cfg_.dt * (cfg_.v_act - a) / (b - a);
      if (a >= cfg_.v_rep && b < cfg_.v_rep)
        maps.repolarization[i] = t + cfg_.dt * (a - cfg_.v_rep) / (a - b);
      vmax = std::max(vmax, b);
    }

    if (snap_stride && (k + 1) % snap_stride == 0) snapshot(k + 1, t_next, v);

    // Once the whole field is below v_rep after the pulse, no node can climb
    // back above it (the reaction is strictly restorative below threshold),
    // so no further crossings of either level are possible.
    if (cfg_.early_exit && t_next > stim.duration && vmax < 0.999 * cfg_.v_rep) break;
  }

  std::size_t activated = 0;
  for (std::size_t i = 0; i < n_; ++i) {
    if (maps.activation[i] >= 0.0) ++activated;
    maps.valid[i] = maps.activation[i] >= 0.0 && maps.repolarization[i] > maps.activation[i];
  }
  if (activated < static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n_))))
    raise(errc::NoActivation, "only " + std::to_string(activated) + " of " + std::to_string(n_) +
                                  " nodes activated before t_end");
  return maps;
}

double MonodomainSolver::planar_velocity(int axis, double intensity) const {
  if (axis < 0 || axis >= geometry_->dim) raise(errc::ConfigError, "axis out of range");

  Stimulus stim;
  stim.mask.assign(n_, 0);
  stim.intensity = intensity;
  for (std::size_t p = 0; p < n_; ++p)
    if (geometry_->to_ijk(p)[axis] == 0) stim.mask[p] = 1;

  TimeMaps maps = simulate(stim);

  // Least-squares fit of activation time against the axis coordinate over the
  // middle 60% of the domain; the front is planar so all nodes contribute.
  const double lo = 0.2 * geometry_->extent[axis], hi = 0.8 * geometry_->extent[axis];
  double sx = 0, st = 0, sxx = 0, sxt = 0, m = 0;
  for (std::size_t p = 0; p < n_; ++p) {
    const double x = geometry_->coords[p][axis];
    if (x < lo || x > hi || maps.activation[p] < 0.0) continue;
    sx += x;
    st += maps.activation[p];
    sxx += x * x;
    sxt += x * maps.activation[p];
    m += 1.0;
  }
  if (m < 2.0) raise(errc::NoActivation, "too few activated nodes for a velocity fit");
  const double slope = (m * sxt - sx * st) / (m * sxx - sx * sx);
  if (!(slope > 0.0)) raise(errc::NonPositiveVelocity, "activation front is not advancing");
  return 1.0 / slope;
}

}  // namespace cardiograph
