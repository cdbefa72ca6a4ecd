#include "cardiograph/fno.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <limits>

#include "cardiograph/epds.hpp"
#include "cardiograph/errors.hpp"
#include "cardiograph/fft.hpp"
#include "cardiograph/rng.hpp"
#include "cardiograph/version.hpp"

#ifdef CARDIOGRAPH_HAVE_VECTOR_ERF
#include <immintrin.h>
extern "C" {
__m512d _ZGVeN8v_erf(__m512d);
__m512d _ZGVeN8v_exp(__m512d);
}
#endif

namespace cardiograph {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

using MapMat = Eigen::Map<Eigen::MatrixXd>;
using CMapMat = Eigen::Map<const Eigen::MatrixXd>;
using MapCx = Eigen::Map<Eigen::MatrixXcd>;
using CMapCx = Eigen::Map<const Eigen::MatrixXcd>;

// z = u * Phi(u) with Phi the standard normal CDF.
void gelu_forward(const double* u, double* z, std::size_t n) {
  std::size_t i = 0;
#ifdef CARDIOGRAPH_HAVE_VECTOR_ERF
  for (; i + 8 <= n; i += 8) {
    const __m512d vu = _mm512_loadu_pd(u + i);
    const __m512d e = _ZGVeN8v_erf(_mm512_mul_pd(vu, _mm512_set1_pd(kInvSqrt2)));
    const __m512d phi =
        _mm512_mul_pd(_mm512_set1_pd(0.5), _mm512_add_pd(_mm512_set1_pd(1.0), e));
    _mm512_storeu_pd(z + i, _mm512_mul_pd(vu, phi));
  }
#endif
  for (; i < n; ++i) {
    const double cdf = 0.5 * (1.0 + std::erf(u[i] * kInvSqrt2));
    z[i] = u[i] * cdf;
  }
}

// du = dz * (Phi(u) + u * phi(u)).
void gelu_backward(const double* u, const double* dz, double* du, std::size_t n) {
  std::size_t i = 0;
#ifdef CARDIOGRAPH_HAVE_VECTOR_ERF
  for (; i + 8 <= n; i += 8) {
    const __m512d vu = _mm512_loadu_pd(u + i);
    const __m512d e = _ZGVeN8v_erf(_mm512_mul_pd(vu, _mm512_set1_pd(kInvSqrt2)));
    const __m512d cdf =
        _mm512_mul_pd(_mm512_set1_pd(0.5), _mm512_add_pd(_mm512_set1_pd(1.0), e));
    const __m512d ex = _ZGVeN8v_exp(
        _mm512_mul_pd(_mm512_set1_pd(-0.5), _mm512_mul_pd(vu, vu)));
    const __m512d pdf = _mm512_mul_pd(ex, _mm512_set1_pd(kInvSqrt2Pi));
    const __m512d slope = _mm512_fmadd_pd(vu, pdf, cdf);
    _mm512_storeu_pd(du + i, _mm512_mul_pd(_mm512_loadu_pd(dz + i), slope));
  }
#endif
  for (; i < n; ++i) {
    const double cdf = 0.5 * (1.0 + std::erf(u[i] * kInvSqrt2));
    const double pdf = std::exp(-0.5 * u[i] * u[i]) * kInvSqrt2Pi;
    du[i] = dz[i] * (cdf + u[i] * pdf);
  }
}

struct ModeSlot {
  std::size_t spec_idx = 0;
  double weight = 2.0;  // 1 on last-axis self-mirror planes
};

struct ModePlan {
  std::vector<int> fdims;  // grid axes reversed: slowest first, x last
  std::vector<ModeSlot> slots;
  std::size_t real_count = 0;
  std::size_t spec_count = 0;
};

// Retained modes per layer; grid-independent.
std::size_t kept_count(const std::vector<int>& modes) {
  if (modes.empty()) return 0;
  std::size_t n = static_cast<std::size_t>(modes[0]);
  for (std::size_t a = 1; a < modes.size(); ++a) n *= 2 * static_cast<std::size_t>(modes[a]);
  return n;
}

// Full-axis kept entry t in [0, 2m) -> spectrum bin.
int full_axis_bin(int t, int n, int m) { return t < m ? t : n - 2 * m + t; }

ModePlan build_mode_plan(const std::vector<int>& grid_dims, const std::vector<int>& modes) {
  const std::size_t rank = grid_dims.size();
  if (rank < 1 || rank > 3) raise(errc::InvalidDims, "grids must be 1D, 2D, or 3D");
  if (modes.size() != rank)
    raise(errc::ShapeMismatch, "mode list rank differs from grid rank");
  for (std::size_t a = 0; a < rank; ++a) {
    if (grid_dims[a] < 1) raise(errc::InvalidDims, "grid lengths must be positive");
    if (modes[a] < 1) raise(errc::ModeOverflow, "mode counts must be at least 1");
  }
  if (modes[0] > grid_dims[0] / 2 + 1)
    raise(errc::ModeOverflow, "axis 0 keeps " + std::to_string(modes[0]) + " modes but " +
                                  std::to_string(grid_dims[0]) + " nodes store only " +
                                  std::to_string(grid_dims[0] / 2 + 1));
  for (std::size_t a = 1; a < rank; ++a)
    if (grid_dims[a] < 2 * modes[a] - 1)
      raise(errc::ModeOverflow, "axis " + std::to_string(a) + " needs at least " +
                                    std::to_string(2 * modes[a] - 1) + " nodes for " +
                                    std::to_string(modes[a]) + " modes");

  ModePlan plan;
  plan.fdims.assign(grid_dims.rbegin(), grid_dims.rend());
  plan.real_count = fft::real_size(plan.fdims);
  plan.spec_count = fft::spec_size(plan.fdims);

  const int nx = grid_dims[0];
  const int mx = modes[0];
  const int sx = nx / 2 + 1;
  const int ny = rank > 1 ? grid_dims[1] : 1;
  const int my = rank > 1 ? modes[1] : 0;
  const int nz = rank > 2 ? grid_dims[2] : 1;
  const int mz = rank > 2 ? modes[2] : 0;

  plan.slots.reserve(kept_count(modes));
  const int tz_count = rank > 2 ? 2 * mz : 1;
  const int ty_count = rank > 1 ? 2 * my : 1;
  for (int tz = 0; tz < tz_count; ++tz) {
    const int bz = rank > 2 ? full_axis_bin(tz, nz, mz) : 0;
    for (int ty = 0; ty < ty_count; ++ty) {
      const int by = rank > 1 ? full_axis_bin(ty, ny, my) : 0;
      for (int kx = 0; kx < mx; ++kx) {
        ModeSlot s;
        s.spec_idx = (static_cast<std::size_t>(bz) * static_cast<std::size_t>(ny) +
                      static_cast<std::size_t>(by)) *
                         static_cast<std::size_t>(sx) +
                     static_cast<std::size_t>(kx);
        s.weight = (kx == 0 || (nx % 2 == 0 && kx == nx / 2)) ? 1.0 : 2.0;
        plan.slots.push_back(s);
      }
    }
  }
  return plan;
}

// Scratch shared by forward/backward; grows monotonically, so steady-state
// training never reallocates.
struct Scratch {
  std::vector<std::complex<double>> spec_in, spec_out, gathered, ghat, ybuf;
  std::vector<double> sbuf, dz, du, dh, gbuf, dout;
  std::vector<std::vector<double>> z, u;
  std::vector<std::vector<std::complex<double>>> xhat;
  std::vector<double> h;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

void ensure(std::vector<double>& v, std::size_t n) {
  if (v.size() < n) v.resize(n);
}
void ensure(std::vector<std::complex<double>>& v, std::size_t n) {
  if (v.size() < n) v.resize(n);
}

// out = irfft(scatter(R_s . gather(rfft(x)))); with `adjoint` the per-mode
// matrices act as their conjugate transposes (the input-gradient map).
// `keep_gathered` receives the gathered input spectrum; `ghat` doubles as the
// gathered spectrum buffer so the backward pass can reuse rfft(dU).
void spectral_apply(const double* x, int channels, std::size_t batch, const ModePlan& plan,
                    const std::complex<double>* r, bool adjoint, double* out,
                    std::complex<double>* gathered_out) {
  Scratch& ws = scratch();
  const std::size_t cb = static_cast<std::size_t>(channels) * batch;
  const std::size_t jc = plan.spec_count;
  const std::size_t w = static_cast<std::size_t>(channels);
  const std::size_t nslots = plan.slots.size();

  ensure(ws.spec_in, cb * jc);
  ensure(ws.spec_out, cb * jc);
  ensure(ws.ybuf, w * batch);

  fft::rfft(plan.fdims, cb, x, ws.spec_in.data());

  std::complex<double>* gath = gathered_out;
  if (gath == nullptr) {
    ensure(ws.gathered, nslots * w * batch);
    gath = ws.gathered.data();
  }
  for (std::size_t c = 0; c < w; ++c)
    for (std::size_t b = 0; b < batch; ++b) {
      const std::complex<double>* row = ws.spec_in.data() + (c * batch + b) * jc;
      std::complex<double>* dst = gath + b * w + c;
      for (std::size_t s = 0; s < nslots; ++s) dst[s * w * batch] = row[plan.slots[s].spec_idx];
    }

  std::fill(ws.spec_out.begin(), ws.spec_out.begin() + static_cast<std::ptrdiff_t>(cb * jc),
            std::complex<double>(0.0, 0.0));
  MapCx y(ws.ybuf.data(), static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(batch));
  for (std::size_t s = 0; s < nslots; ++s) {
    CMapCx rm(r + s * w * w, static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(w));
    CMapCx xs(gath + s * w * batch, static_cast<Eigen::Index>(w),
              static_cast<Eigen::Index>(batch));
    if (adjoint)
      y.noalias() = rm.adjoint() * xs;
    else
      y.noalias() = rm * xs;
    const std::size_t idx = plan.slots[s].spec_idx;
    for (std::size_t c = 0; c < w; ++c)
      for (std::size_t b = 0; b < batch; ++b)
        ws.spec_out[(c * batch + b) * jc + idx] += y(static_cast<Eigen::Index>(c),
                                                     static_cast<Eigen::Index>(b));
  }

  fft::irfft(plan.fdims, cb, ws.spec_out.data(), out);
}

void add_bias(double* t, const double* bias, std::size_t channels, std::size_t cols) {
  for (std::size_t c = 0; c < channels; ++c) {
    double* row = t + c * cols;
    const double bc = bias[c];
    for (std::size_t j = 0; j < cols; ++j) row[j] += bc;
  }
}

void activation_forward(FnoActivation act, const double* u, double* z, std::size_t n) {
  if (act == FnoActivation::Gelu)
    gelu_forward(u, z, n);
  else if (z != u)
    std::copy(u, u + n, z);
}

void activation_backward(FnoActivation act, const double* u, const double* dz, double* du,
                         std::size_t n) {
  if (act == FnoActivation::Gelu)
    gelu_backward(u, dz, du, n);
  else if (du != dz)
    std::copy(dz, dz + n, du);
}

struct ForwardPlan {
  ModePlan modes;
  std::size_t j = 0;   // nodes
  std::size_t bj = 0;  // batch * nodes
};

ForwardPlan make_forward_plan(const FnoParams& p, std::size_t x_size, std::size_t batch,
                              const std::vector<int>& grid_dims) {
  if (p.layers < 1 || p.width < 1 || p.q_hidden < 1 || p.in_ch < 1)
    raise(errc::ConfigError, "network dimensions must be positive");
  if (batch == 0) raise(errc::TooSmall, "batch must be non-empty");
  if (p.values.size() != p.value_count())
    raise(errc::ShapeMismatch, "parameter vector length disagrees with the architecture");
  ForwardPlan fp;
  fp.modes = build_mode_plan(grid_dims, p.modes);
  fp.j = fp.modes.real_count;
  fp.bj = batch * fp.j;
  if (x_size != static_cast<std::size_t>(p.in_ch) * fp.bj)
    raise(errc::ShapeMismatch, "input tensor is not (channels, batch, nodes)");
  return fp;
}

// Runs the network; when `train` is set, stashes per-layer inputs,
// preactivations, and gathered spectra for the reverse pass.
void run_forward(const FnoParams& p, const double* x, std::size_t batch, const ForwardPlan& fp,
                 bool train, std::vector<double>& out) {
  Scratch& ws = scratch();
  const std::size_t w = static_cast<std::size_t>(p.width);
  const std::size_t qh = static_cast<std::size_t>(p.q_hidden);
  const std::size_t bj = fp.bj;
  const std::size_t t_layers = static_cast<std::size_t>(p.layers);
  const std::size_t nslots = fp.modes.slots.size();
  const double* vals = p.values.data();

  ws.z.resize(t_layers + 1);
  if (train) {
    ws.u.resize(t_layers);
    ws.xhat.resize(t_layers);
  }
  for (auto& v : ws.z) ensure(v, w * bj);
  ensure(ws.h, qh * bj);
  ensure(ws.sbuf, w * bj);
  out.resize(bj);

  // Lift: z0 = P x + pb.
  {
    CMapMat xm(x, static_cast<Eigen::Index>(bj), p.in_ch);
    CMapMat pm(vals + p.off_p(), p.in_ch, p.width);
    MapMat z0(ws.z[0].data(), static_cast<Eigen::Index>(bj), p.width);
    z0.noalias() = xm * pm;
    add_bias(ws.z[0].data(), vals + p.off_pb(), w, bj);
  }

  for (std::size_t t = 0; t < t_layers; ++t) {
    double* zin = ws.z[t].data();
    double* ubuf;
    if (train) {
      ensure(ws.u[t], w * bj);
      ubuf = ws.u[t].data();
    } else {
      ubuf = ws.z[t + 1].data();  // reuse the next slot as preactivation storage
    }

    std::complex<double>* keep = nullptr;
    if (train) {
      ensure(ws.xhat[t], nslots * w * batch);
      keep = ws.xhat[t].data();
    }
    spectral_apply(zin, p.width, batch, fp.modes,
                   reinterpret_cast<const std::complex<double>*>(vals + p.off_r(static_cast<int>(t))),
                   false, ws.sbuf.data(), keep);

    CMapMat zm(zin, static_cast<Eigen::Index>(bj), p.width);
    CMapMat wm(vals + p.off_w(static_cast<int>(t)), p.width, p.width);
    MapMat um(ubuf, static_cast<Eigen::Index>(bj), p.width);
    um.noalias() = zm * wm;
    {
      const double* s = ws.sbuf.data();
      for (std::size_t i = 0; i < w * bj; ++i) ubuf[i] += s[i];
    }
    add_bias(ubuf, vals + p.off_b(static_cast<int>(t)), w, bj);
    activation_forward(p.activation, ubuf, ws.z[t + 1].data(), w * bj);
  }

  // Projection: out = Q2 act(Q1 z_T + q1b) + q2b.
  {
    CMapMat ztm(ws.z[t_layers].data(), static_cast<Eigen::Index>(bj), p.width);
    CMapMat q1m(vals + p.off_q1(), p.width, p.q_hidden);
    MapMat hm(ws.h.data(), static_cast<Eigen::Index>(bj), p.q_hidden);
    hm.noalias() = ztm * q1m;
    add_bias(ws.h.data(), vals + p.off_q1b(), qh, bj);

    ensure(ws.gbuf, qh * bj);
    activation_forward(p.activation, ws.h.data(), ws.gbuf.data(), qh * bj);

    CMapMat gm(ws.gbuf.data(), static_cast<Eigen::Index>(bj), p.q_hidden);
    CMapMat q2m(vals + p.off_q2(), p.q_hidden, 1);
    MapMat om(out.data(), static_cast<Eigen::Index>(bj), 1);
    om.noalias() = gm * q2m;
    const double q2b = vals[p.off_q2b()];
    for (std::size_t i = 0; i < bj; ++i) out[i] += q2b;
  }
}

// Loss and its gradient wrt predictions; mean over batch of relative L2.
double loss_and_dout(const double* pred, const double* target, std::size_t batch, std::size_t j,
                     double* dout) {
  double acc = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* pb = pred + b * j;
    const double* yb = target + b * j;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < j; ++i) {
      const double d = pb[i] - yb[i];
      num += d * d;
      den += yb[i] * yb[i];
    }
    if (den == 0.0) raise(errc::ZeroTarget, "target sample " + std::to_string(b) + " is all zero");
    const double nn = std::sqrt(num), nd = std::sqrt(den);
    acc += nn / nd;
    if (dout != nullptr) {
      double* db = dout + b * j;
      if (nn == 0.0) {
        std::fill(db, db + j, 0.0);
      } else {
        const double scale = 1.0 / (static_cast<double>(batch) * nn * nd);
        for (std::size_t i = 0; i < j; ++i) db[i] = scale * (pb[i] - yb[i]);
      }
    }
  }
  return acc / static_cast<double>(batch);
}

void run_backward(const FnoParams& p, const double* x, std::size_t batch, const ForwardPlan& fp,
                  FnoParams* grads) {
  Scratch& ws = scratch();
  const std::size_t w = static_cast<std::size_t>(p.width);
  const std::size_t qh = static_cast<std::size_t>(p.q_hidden);
  const std::size_t bj = fp.bj;
  const std::size_t j = fp.j;
  const std::size_t t_layers = static_cast<std::size_t>(p.layers);
  const std::size_t nslots = fp.modes.slots.size();
  const double* vals = p.values.data();
  double* gv = grads->values.data();

  ensure(ws.dh, qh * bj);
  ensure(ws.dz, w * bj);
  ensure(ws.du, w * bj);

  // Projection backward. gbuf still holds act(h) from the forward pass.
  {
    CMapMat gm(ws.gbuf.data(), static_cast<Eigen::Index>(bj), p.q_hidden);
    Eigen::Map<const Eigen::VectorXd> doutv(ws.dout.data(), static_cast<Eigen::Index>(bj));
    Eigen::Map<Eigen::VectorXd> gq2(gv + p.off_q2(), p.q_hidden);
    gq2.noalias() = gm.transpose() * doutv;
    gv[p.off_q2b()] = doutv.sum();

    MapMat dgm(ws.dh.data(), static_cast<Eigen::Index>(bj), p.q_hidden);  // dG, then dH in place
    CMapMat q2row(vals + p.off_q2(), 1, p.q_hidden);
    dgm.noalias() = doutv * q2row;
    activation_backward(p.activation, ws.h.data(), ws.dh.data(), ws.dh.data(), qh * bj);

    CMapMat ztm(ws.z[t_layers].data(), static_cast<Eigen::Index>(bj), p.width);
    MapMat gq1(gv + p.off_q1(), p.width, p.q_hidden);
    gq1.noalias() = ztm.transpose() * dgm;
    Eigen::Map<Eigen::VectorXd> gq1b(gv + p.off_q1b(), p.q_hidden);
    gq1b = dgm.colwise().sum().transpose();

    CMapMat q1m(vals + p.off_q1(), p.width, p.q_hidden);
    MapMat dzm(ws.dz.data(), static_cast<Eigen::Index>(bj), p.width);
    dzm.noalias() = dgm * q1m.transpose();
  }

  for (std::size_t ti = t_layers; ti-- > 0;) {
    const int t = static_cast<int>(ti);
    activation_backward(p.activation, ws.u[ti].data(), ws.dz.data(), ws.du.data(), w * bj);

    MapMat dum(ws.du.data(), static_cast<Eigen::Index>(bj), p.width);
    Eigen::Map<Eigen::VectorXd> gb(gv + p.off_b(t), p.width);
    gb = dum.colwise().sum().transpose();

    CMapMat zm(ws.z[ti].data(), static_cast<Eigen::Index>(bj), p.width);
    MapMat gw(gv + p.off_w(t), p.width, p.width);
    gw.noalias() = zm.transpose() * dum;

    // Input gradient of the spectral path (modes act by conjugate transpose);
    // ghat receives rfft(dU) gathered on the retained modes for the R grads.
    ensure(ws.ghat, nslots * w * batch);
    spectral_apply(ws.du.data(), p.width, batch, fp.modes,
                   reinterpret_cast<const std::complex<double>*>(vals + p.off_r(t)), true,
                   ws.sbuf.data(), ws.ghat.data());

    std::complex<double>* gr =
        reinterpret_cast<std::complex<double>*>(gv + p.off_r(t));
    const std::complex<double>* xh = ws.xhat[ti].data();
    for (std::size_t s = 0; s < nslots; ++s) {
      CMapCx gs(ws.ghat.data() + s * w * batch, static_cast<Eigen::Index>(w),
                static_cast<Eigen::Index>(batch));
      CMapCx xs(xh + s * w * batch, static_cast<Eigen::Index>(w),
                static_cast<Eigen::Index>(batch));
      MapCx grm(gr + s * w * w, static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(w));
      grm.noalias() = (fp.modes.slots[s].weight / static_cast<double>(j)) *
                      (gs * xs.adjoint());
    }

    CMapMat wm(vals + p.off_w(t), p.width, p.width);
    MapMat dzm(ws.dz.data(), static_cast<Eigen::Index>(bj), p.width);
    dzm.noalias() = dum * wm.transpose();
    {
      double* d = ws.dz.data();
      const double* s = ws.sbuf.data();
      for (std::size_t i = 0; i < w * bj; ++i) d[i] += s[i];
    }
  }

  // Lift backward.
  {
    CMapMat xm(x, static_cast<Eigen::Index>(bj), p.in_ch);
    MapMat dzm(ws.dz.data(), static_cast<Eigen::Index>(bj), p.width);
    MapMat gp(gv + p.off_p(), p.in_ch, p.width);
    gp.noalias() = xm.transpose() * dzm;
    Eigen::Map<Eigen::VectorXd> gpb(gv + p.off_pb(), p.width);
    gpb = dzm.colwise().sum().transpose();
  }
}

nlohmann::json params_meta(const FnoParams& p) {
  nlohmann::json meta;
  meta["kind"] = "fno_model";
  meta["in_ch"] = p.in_ch;
  meta["width"] = p.width;
  meta["layers"] = p.layers;
  meta["q_hidden"] = p.q_hidden;
  meta["modes"] = p.modes;
  meta["activation"] = p.activation == FnoActivation::Gelu ? "gelu" : "identity";
  meta["tool_version"] = kToolVersion;
  return meta;
}

}  // namespace

std::size_t FnoParams::n_kept() const { return kept_count(modes); }

std::size_t FnoParams::off_pb() const {
  return off_p() + static_cast<std::size_t>(width) * static_cast<std::size_t>(in_ch);
}
std::size_t FnoParams::off_w(int t) const {
  const std::size_t w = static_cast<std::size_t>(width);
  const std::size_t per_layer = w * w + w + 2 * n_kept() * w * w;
  return off_pb() + w + static_cast<std::size_t>(t) * per_layer;
}
std::size_t FnoParams::off_b(int t) const {
  const std::size_t w = static_cast<std::size_t>(width);
  return off_w(t) + w * w;
}
std::size_t FnoParams::off_r(int t) const {
  const std::size_t w = static_cast<std::size_t>(width);
  return off_b(t) + w;
}
std::size_t FnoParams::off_q1() const { return off_w(layers); }
std::size_t FnoParams::off_q1b() const {
  return off_q1() + static_cast<std::size_t>(q_hidden) * static_cast<std::size_t>(width);
}
std::size_t FnoParams::off_q2() const { return off_q1b() + static_cast<std::size_t>(q_hidden); }
std::size_t FnoParams::off_q2b() const { return off_q2() + static_cast<std::size_t>(q_hidden); }
std::size_t FnoParams::value_count() const { return off_q2b() + 1; }

std::size_t fno_param_count(const FnoParams& p) {
  const std::size_t w = static_cast<std::size_t>(p.width);
  return p.value_count() - static_cast<std::size_t>(p.layers) * p.n_kept() * w * w;
}

int fno_in_channels(const Geometry& g) {
  if (!g.structured()) raise(errc::Unsupported, "operator inputs need a structured grid");
  return 1 + g.dim;
}

FnoParams fno_init(int in_ch, const FnoConfig& cfg, std::uint64_t seed) {
  if (in_ch < 1) raise(errc::ConfigError, "in_ch must be positive");
  if (cfg.layers < 1 || cfg.width < 1 || cfg.q_hidden < 1)
    raise(errc::ConfigError, "network dimensions must be positive");
  for (int m : cfg.modes)
    if (m < 1) raise(errc::ModeOverflow, "mode counts must be at least 1");

  FnoParams p;
  p.in_ch = in_ch;
  p.width = cfg.width;
  p.layers = cfg.layers;
  p.q_hidden = cfg.q_hidden;
  p.modes = cfg.modes;
  p.activation = cfg.activation;
  p.values.assign(p.value_count(), 0.0);

  rng::Counter rc(seed, rng::kInitStream, 0);
  auto kaiming = [&](std::size_t off, std::size_t count, int fan_in) {
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < count; ++i) p.values[off + i] = std_dev * rc.normal();
  };
  const std::size_t w = static_cast<std::size_t>(cfg.width);
  kaiming(p.off_p(), w * static_cast<std::size_t>(in_ch), in_ch);
  const double r_std = 1.0 / static_cast<double>(cfg.width);
  for (int t = 0; t < cfg.layers; ++t) {
    kaiming(p.off_w(t), w * w, cfg.width);
    const std::size_t roff = p.off_r(t);
    for (std::size_t i = 0; i < 2 * p.n_kept() * w * w; ++i)
      p.values[roff + i] = r_std * rc.normal();
  }
  kaiming(p.off_q1(), static_cast<std::size_t>(cfg.q_hidden) * w, cfg.width);
  kaiming(p.off_q2(), static_cast<std::size_t>(cfg.q_hidden), cfg.q_hidden);
  return p;
}

std::vector<double> fno_featurize(const std::vector<std::uint8_t>& mask, const Geometry& g) {
  const int in_ch = fno_in_channels(g);
  const std::size_t n = g.node_count();
  if (mask.size() != n) raise(errc::GeometryMismatch, "mask length differs from node count");
  std::vector<double> out(static_cast<std::size_t>(in_ch) * n);
  for (std::size_t i = 0; i < n; ++i) out[i] = mask[i] ? 1.0 : 0.0;
  for (int a = 0; a < g.dim; ++a) {
    double* ch = out.data() + static_cast<std::size_t>(1 + a) * n;
    const double inv = g.extent[static_cast<std::size_t>(a)] > 0.0
                           ? 1.0 / g.extent[static_cast<std::size_t>(a)]
                           : 0.0;
    for (std::size_t i = 0; i < n; ++i) ch[i] = g.coords[i][static_cast<std::size_t>(a)] * inv;
  }
  return out;
}

std::vector<double> spectral_conv(const std::vector<double>& x, int channels, std::size_t batch,
                                  const std::vector<int>& grid_dims, const std::vector<int>& modes,
                                  const std::vector<double>& r) {
  if (channels < 1) raise(errc::ConfigError, "channels must be positive");
  if (batch == 0) raise(errc::TooSmall, "batch must be non-empty");
  ModePlan plan = build_mode_plan(grid_dims, modes);
  const std::size_t w = static_cast<std::size_t>(channels);
  if (r.size() != 2 * plan.slots.size() * w * w)
    raise(errc::ShapeMismatch, "spectral weights do not match modes x channels^2");
  if (x.size() != w * batch * plan.real_count)
    raise(errc::ShapeMismatch, "input tensor is not (channels, batch, nodes)");
  std::vector<double> out(x.size());
  spectral_apply(x.data(), channels, batch, plan,
                 reinterpret_cast<const std::complex<double>*>(r.data()), false, out.data(),
                 nullptr);
  return out;
}

std::vector<double> fno_forward(const FnoParams& p, const std::vector<double>& x,
                                std::size_t batch, const std::vector<int>& grid_dims) {
  const ForwardPlan fp = make_forward_plan(p, x.size(), batch, grid_dims);
  std::vector<double> out;
  run_forward(p, x.data(), batch, fp, false, out);
  return out;
}

double fno_loss(const std::vector<double>& pred, const std::vector<double>& target,
                std::size_t batch) {
  if (batch == 0) raise(errc::TooSmall, "batch must be non-empty");
  if (pred.size() != target.size() || pred.size() % batch != 0)
    raise(errc::ShapeMismatch, "prediction and target shapes disagree");
  return loss_and_dout(pred.data(), target.data(), batch, pred.size() / batch, nullptr);
}

double fno_loss_and_grad(const FnoParams& p, const std::vector<double>& x,
                         const std::vector<double>& target, std::size_t batch,
                         const std::vector<int>& grid_dims, FnoParams* grads) {
  const ForwardPlan fp = make_forward_plan(p, x.size(), batch, grid_dims);
  if (target.size() != fp.bj)
    raise(errc::ShapeMismatch, "target tensor is not (batch, nodes)");

  grads->in_ch = p.in_ch;
  grads->width = p.width;
  grads->layers = p.layers;
  grads->q_hidden = p.q_hidden;
  grads->modes = p.modes;
  grads->activation = p.activation;
  grads->values.assign(p.value_count(), 0.0);

  Scratch& ws = scratch();
  std::vector<double> pred;
  run_forward(p, x.data(), batch, fp, true, pred);
  ensure(ws.dout, fp.bj);
  const double loss =
      loss_and_dout(pred.data(), target.data(), batch, fp.j, ws.dout.data());
  run_backward(p, x.data(), batch, fp, grads);
  return loss;
}

FnoTrainResult fno_train(const Dataset& ds, const Split& split, const FnoConfig& cfg) {
  if (!ds.geometry.structured()) raise(errc::Unsupported, "training needs a structured grid");
  if (split.train.empty()) raise(errc::TooSmall, "training split is empty");
  if (cfg.batch < 1) raise(errc::ConfigError, "batch size must be positive");
  if (cfg.epochs < 0) raise(errc::ConfigError, "epochs must be non-negative");
  const std::vector<std::vector<double>>* target_rows = nullptr;
  if (cfg.target == "activation")
    target_rows = &ds.activation;
  else if (cfg.target == "repolarization")
    target_rows = &ds.repolarization;
  else
    raise(errc::ConfigError, "unknown training target '" + cfg.target + "'");
  for (std::size_t idx : split.train)
    if (idx >= ds.size()) raise(errc::ShapeMismatch, "split index out of range");
  for (std::size_t idx : split.test)
    if (idx >= ds.size()) raise(errc::ShapeMismatch, "split index out of range");

  const Geometry& g = ds.geometry;
  const std::size_t j = g.node_count();
  const int in_ch = fno_in_channels(g);
  if (static_cast<int>(cfg.modes.size()) != g.dim)
    raise(errc::ShapeMismatch, "mode list rank differs from grid rank");

  // Coordinate channels are shared by every sample; featurize once.
  std::vector<double> coord_ch(static_cast<std::size_t>(in_ch - 1) * j);
  {
    const std::vector<double> one = fno_featurize(ds.inputs[split.train[0]], g);
    std::copy(one.begin() + static_cast<std::ptrdiff_t>(j), one.end(), coord_ch.begin());
  }

  const std::size_t bsz = static_cast<std::size_t>(cfg.batch);
  auto assemble = [&](const std::vector<std::size_t>& ids, std::size_t lo, std::size_t hi,
                      std::vector<double>& x, std::vector<double>& y) {
    const std::size_t b = hi - lo;
    x.resize(static_cast<std::size_t>(in_ch) * b * j);
    y.resize(b * j);
    for (std::size_t k = 0; k < b; ++k) {
      const std::size_t s = ids[lo + k];
      const std::vector<std::uint8_t>& mask = ds.inputs[s];
      double* m = x.data() + k * j;
      for (std::size_t i = 0; i < j; ++i) m[i] = mask[i] ? 1.0 : 0.0;
      for (int c = 1; c < in_ch; ++c)
        std::copy(coord_ch.begin() + static_cast<std::ptrdiff_t>((c - 1) * j),
                  coord_ch.begin() + static_cast<std::ptrdiff_t>(c * j),
                  x.begin() + static_cast<std::ptrdiff_t>((static_cast<std::size_t>(c) * b + k) * j));
      std::copy((*target_rows)[s].begin(), (*target_rows)[s].end(),
                y.begin() + static_cast<std::ptrdiff_t>(k * j));
    }
  };

  auto eval_split = [&](const FnoParams& params, const std::vector<std::size_t>& ids) {
    double acc = 0.0;
    std::vector<double> x, y;
    for (std::size_t lo = 0; lo < ids.size(); lo += bsz) {
      const std::size_t hi = std::min(ids.size(), lo + bsz);
      assemble(ids, lo, hi, x, y);
      const std::vector<double> pred = fno_forward(params, x, hi - lo, g.dims);
      acc += fno_loss(pred, y, hi - lo) * static_cast<double>(hi - lo);
    }
    return acc / static_cast<double>(ids.size());
  };

  FnoTrainResult res;
  res.params = fno_init(in_ch, cfg, cfg.seed);
  FnoParams current = res.params;
  FnoParams grads;
  std::vector<double> m(current.values.size(), 0.0), v(current.values.size(), 0.0);
  double lr = cfg.lr0;
  double best = std::numeric_limits<double>::infinity();
  res.best_test = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t adam_t = 0;

  std::vector<std::size_t> order = split.train;
  std::vector<double> xb, yb;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng::Counter shuf(cfg.seed, rng::kShuffleStream, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuf.below(i)]);

    double train_acc = 0.0;
    for (std::size_t lo = 0; lo < order.size(); lo += bsz) {
      const std::size_t hi = std::min(order.size(), lo + bsz);
      assemble(order, lo, hi, xb, yb);
      const double loss = fno_loss_and_grad(current, xb, yb, hi - lo, g.dims, &grads);
      if (!std::isfinite(loss))
        raise(errc::NonFinite, "non-finite training loss at epoch " + std::to_string(epoch));
      train_acc += loss * static_cast<double>(hi - lo);

      ++adam_t;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam_t));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam_t));
      double* theta = current.values.data();
      const double* gr = grads.values.data();
      for (std::size_t i = 0; i < current.values.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gr[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gr[i] * gr[i];
        theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.eps);
      }
    }
    const double train_loss = train_acc / static_cast<double>(order.size());

    double test_loss = std::numeric_limits<double>::quiet_NaN();
    if (!split.test.empty()) test_loss = eval_split(current, split.test);
    res.history.push_back({epoch, train_loss, test_loss, lr});

    if (split.test.empty()) {
      res.params = current;
    } else if (test_loss >= best) {
      lr = std::max(lr * cfg.plateau_factor, cfg.min_lr);
    } else {
      best = test_loss;
      res.best_test = best;
      res.params = current;
    }
  }
  return res;
}

void save_fno(const FnoParams& p, const nlohmann::json& extra_meta, const std::string& path) {
  if (p.values.size() != p.value_count())
    raise(errc::ShapeMismatch, "parameter vector length disagrees with the architecture");
  epds::Container c;
  c.meta = params_meta(p);
  for (const auto& [key, value] : extra_meta.items()) c.meta[key] = value;

  const std::size_t w = static_cast<std::size_t>(p.width);
  const std::size_t qh = static_cast<std::size_t>(p.q_hidden);
  const std::size_t nk = p.n_kept();
  auto slice = [&](std::size_t off, std::size_t count) {
    return std::vector<double>(p.values.begin() + static_cast<std::ptrdiff_t>(off),
                               p.values.begin() + static_cast<std::ptrdiff_t>(off + count));
  };
  c.add("P", {w, static_cast<std::size_t>(p.in_ch)}, slice(p.off_p(), w * static_cast<std::size_t>(p.in_ch)));
  c.add("Pb", {w}, slice(p.off_pb(), w));
  for (int t = 0; t < p.layers; ++t) {
    const std::string n = std::to_string(t);
    c.add("W" + n, {w, w}, slice(p.off_w(t), w * w));
    c.add("b" + n, {w}, slice(p.off_b(t), w));
    std::vector<double> re(nk * w * w), im(nk * w * w);
    const double* r = p.values.data() + p.off_r(t);
    for (std::size_t i = 0; i < nk * w * w; ++i) {
      re[i] = r[2 * i];
      im[i] = r[2 * i + 1];
    }
    c.add("R" + n + "_re", {nk, w, w}, std::move(re));
    c.add("R" + n + "_im", {nk, w, w}, std::move(im));
  }
  c.add("Q1", {qh, w}, slice(p.off_q1(), qh * w));
  c.add("Q1b", {qh}, slice(p.off_q1b(), qh));
  c.add("Q2", {1, qh}, slice(p.off_q2(), qh));
  c.add("Q2b", {1}, slice(p.off_q2b(), 1));
  epds::write_container(c, path);
}

FnoParams load_fno(const std::string& path, nlohmann::json* meta_out) {
  const epds::Container c = epds::read_container(path);
  if (!c.meta.contains("kind") || c.meta["kind"] != "fno_model")
    raise(errc::IoError, "'" + path + "' is not an operator-model container");

  FnoParams p;
  p.in_ch = c.meta.at("in_ch").get<int>();
  p.width = c.meta.at("width").get<int>();
  p.layers = c.meta.at("layers").get<int>();
  p.q_hidden = c.meta.at("q_hidden").get<int>();
  p.modes = c.meta.at("modes").get<std::vector<int>>();
  p.activation = c.meta.at("activation").get<std::string>() == "identity"
                     ? FnoActivation::Identity
                     : FnoActivation::Gelu;
  if (p.in_ch < 1 || p.width < 1 || p.layers < 1 || p.q_hidden < 1 || p.modes.empty())
    raise(errc::IoError, "stored architecture metadata is invalid");
  p.values.assign(p.value_count(), 0.0);

  const std::size_t w = static_cast<std::size_t>(p.width);
  const std::size_t nk = p.n_kept();
  auto pull = [&](const std::string& name, std::size_t off, std::size_t count) {
    const epds::Array& a = c.at(name);
    if (a.data.size() != count)
      raise(errc::ShapeMismatch, "array '" + name + "' does not match the architecture");
    std::copy(a.data.begin(), a.data.end(),
              p.values.begin() + static_cast<std::ptrdiff_t>(off));
  };
  pull("P", p.off_p(), w * static_cast<std::size_t>(p.in_ch));
  pull("Pb", p.off_pb(), w);
  for (int t = 0; t < p.layers; ++t) {
    const std::string n = std::to_string(t);
    pull("W" + n, p.off_w(t), w * w);
    pull("b" + n, p.off_b(t), w);
    const epds::Array& re = c.at("R" + n + "_re");
    const epds::Array& im = c.at("R" + n + "_im");
    if (re.data.size() != nk * w * w || im.data.size() != nk * w * w)
      raise(errc::ShapeMismatch, "array 'R" + n + "' does not match the architecture");
    double* r = p.values.data() + p.off_r(t);
    for (std::size_t i = 0; i < nk * w * w; ++i) {
      r[2 * i] = re.data[i];
      r[2 * i + 1] = im.data[i];
    }
  }
  const std::size_t qh = static_cast<std::size_t>(p.q_hidden);
  pull("Q1", p.off_q1(), qh * w);
  pull("Q1b", p.off_q1b(), qh);
  pull("Q2", p.off_q2(), qh);
  pull("Q2b", p.off_q2b(), 1);
  if (meta_out != nullptr) *meta_out = c.meta;
  return p;
}

}  // namespace cardiograph
