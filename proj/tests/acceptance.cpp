// Acceptance harness: one numbered check per run, one PASS/FAIL line on
// stdout, exit 0/1. Criterion 0 builds the shared dataset fixture used by
// the data-dependent checks.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <CLI11.hpp>

#include "cardiograph/dataset.hpp"
#include "cardiograph/eikonal.hpp"
#include "cardiograph/epds.hpp"
#include "cardiograph/errors.hpp"
#include "cardiograph/eval.hpp"
#include "cardiograph/fft.hpp"
#include "cardiograph/fno.hpp"
#include "cardiograph/geometry.hpp"
#include "cardiograph/kol.hpp"
#include "cardiograph/monodomain.hpp"
#include "cardiograph/rng.hpp"

using namespace cardiograph;
namespace fs = std::filesystem;
using cplx = std::complex<double>;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmtg(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ------------------------------------------------------------------ fixture

constexpr int kFixtureGrid = 64;
constexpr std::size_t kFixtureSamples = 250;
constexpr std::uint64_t kFixtureSeed = 7;

fs::path fixture_path(const fs::path& work) { return work / "dataset.epds"; }

Dataset make_fixture() {
  const Geometry g = build_structured({kFixtureGrid, kFixtureGrid}, {1.0, 1.0});
  const ConductivityField cond =
      assemble_conductivity(g, rotated_fibers(g, 0.0), {2e-3, 4e-4, 4e-4}, 1.0);
  const MonodomainConfig mc;
  const StimulusParams sp;
  return generate(kFixtureSamples, g, cond, mc, sp, kFixtureSeed);
}

Outcome criterion_0(const fs::path& work) {
  fs::create_directories(work);
  const fs::path path = fixture_path(work);
  if (fs::exists(path)) {
    const Dataset d = load_dataset(path.string());
    if (d.size() == kFixtureSamples && d.meta.value("seed", std::uint64_t{0}) == kFixtureSeed)
      return {true, "fixture cached (" + std::to_string(d.size()) + " samples, 64x64, seed 7)"};
  }
  const double t0 = now_s();
  const Dataset d = make_fixture();
  save_dataset(d, path.string());
  return {true, "fixture generated in " + fmtg(now_s() - t0) + " s (250 samples, 64x64, seed 7)"};
}

Dataset load_fixture(const fs::path& work) {
  const fs::path path = fixture_path(work);
  if (!fs::exists(path))
    raise(errc::IoError, "fixture missing; run --criterion 0 first: " + path.string());
  return load_dataset(path.string());
}

// Stacks the requested per-node maps side by side as regression columns.
std::vector<double> stack_targets(const Dataset& d, const std::vector<std::size_t>& ids,
                                  bool activation, bool repolarization) {
  const std::size_t nodes = d.geometry.node_count();
  const std::size_t cols = nodes * (static_cast<std::size_t>(activation) +
                                    static_cast<std::size_t>(repolarization));
  std::vector<double> t(ids.size() * cols);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    double* row = t.data() + k * cols;
    if (activation) {
      std::copy(d.activation[ids[k]].begin(), d.activation[ids[k]].end(), row);
      row += nodes;
    }
    if (repolarization)
      std::copy(d.repolarization[ids[k]].begin(), d.repolarization[ids[k]].end(), row);
  }
  return t;
}

std::vector<std::vector<std::uint8_t>> gather_masks(const Dataset& d,
                                                    const std::vector<std::size_t>& ids) {
  std::vector<std::vector<std::uint8_t>> m;
  m.reserve(ids.size());
  for (std::size_t id : ids) m.push_back(d.inputs[id]);
  return m;
}

// Mean over samples of per-map relative L2. Column block `block` selects the
// map when several were fit jointly.
double kol_map_error(const KolModel& m, const Dataset& d, const std::vector<std::size_t>& ids,
                     const std::vector<std::vector<double>>& truth, std::size_t block) {
  const std::size_t nodes = d.geometry.node_count();
  double acc = 0.0;
  for (std::size_t id : ids) {
    const std::vector<double> pred = predict_kol(m, d.inputs[id]);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) {
      const double p = pred[block * nodes + i];
      const double t = truth[id][i];
      num += (p - t) * (p - t);
      den += t * t;
    }
    acc += std::sqrt(num / den);
  }
  return acc / static_cast<double>(ids.size());
}

// ------------------------------------------------------- criteria 1-3 (KOL)

Outcome criterion_1(const fs::path& work) {
  const double t0 = now_s();
  const Dataset d = load_fixture(work);
  const Split split = split_80_20(d.size(), d.meta.value("seed", kFixtureSeed));
  const std::vector<std::vector<std::uint8_t>> masks = gather_masks(d, split.train);
  const std::vector<double> targets = stack_targets(d, split.train, true, true);
  const std::size_t nodes = d.geometry.node_count();

  double worst = 0.0;
  std::string worst_name = "-";
  std::ostringstream rows;
  bool pass = true;
  for (const std::string& name : kernel_preset_names()) {
    try {
      const KolModel m =
          fit_kol(kernel_preset(name), masks, targets, 2 * nodes, d.geometry, 1e-10);
      const double ea = kol_map_error(m, d, split.train, d.activation, 0);
      const double er = kol_map_error(m, d, split.train, d.repolarization, 1);
      rows << " " << name << "=" << fmtg(std::max(ea, er));
      if (std::max(ea, er) > worst) {
        worst = std::max(ea, er);
        worst_name = name;
      }
      if (!(ea < 1e-8 && er < 1e-8)) pass = false;
    } catch (const Error& e) {
      rows << " " << name << "=unfit(" << errc_name(e.code()) << ")";
      pass = false;
      worst_name = name;
    }
  }
  const double wall = now_s() - t0;
  if (wall > 60.0) pass = false;
  return {pass, "train rel_l2 per preset:" + rows.str() + "; worst " + worst_name + "=" +
                    fmtg(worst) + " (bound 1e-8); wall " + fmtg(wall) + " s (bound 60)"};
}

Outcome criterion_2(const fs::path& work) {
  const double t0 = now_s();
  const Dataset d = load_fixture(work);
  const Split split = split_80_20(d.size(), d.meta.value("seed", kFixtureSeed));
  const std::vector<std::vector<std::uint8_t>> masks = gather_masks(d, split.train);
  const std::vector<double> targets = stack_targets(d, split.train, true, false);
  const std::size_t nodes = d.geometry.node_count();

  auto test_error = [&](const std::string& name) {
    const KolModel m = fit_kol(kernel_preset(name), masks, targets, nodes, d.geometry, 1e-10);
    return kol_map_error(m, d, split.test, d.activation, 0);
  };

  const double iq4 = test_error("iq4");
  double best_other = std::numeric_limits<double>::infinity();
  std::string best_name = "-";
  std::ostringstream rows;
  for (const std::string name : {"rbf1", "rbf2", "rbf3", "ntk1", "ntk2", "ntk3"}) {
    double e = std::numeric_limits<double>::infinity();
    try {
      e = test_error(name);
      rows << " " << name << "=" << fmtg(e);
    } catch (const Error& err) {
      rows << " " << name << "=unfit(" << errc_name(err.code()) << ")";
    }
    if (e < best_other) {
      best_other = e;
      best_name = name;
    }
  }
  const double wall = now_s() - t0;
  const bool pass = iq4 <= 0.1 * best_other && wall < 600.0;
  return {pass, "test rel_l2: iq4=" + fmtg(iq4) + " vs" + rows.str() + "; best other " +
                    best_name + "=" + fmtg(best_other) + ", ratio=" + fmtg(iq4 / best_other) +
                    " (bound 0.1); wall " + fmtg(wall) + " s"};
}

Outcome criterion_3(const fs::path& work) {
  const Dataset d = load_fixture(work);
  const Split split = split_80_20(d.size(), d.meta.value("seed", kFixtureSeed));
  const std::vector<double> targets = stack_targets(d, split.train, true, true);
  const std::size_t nodes = d.geometry.node_count();
  const KolModel m = fit_kol(kernel_preset("iq4"), gather_masks(d, split.train), targets,
                             2 * nodes, d.geometry, 1e-10);
  const double ea = kol_map_error(m, d, split.test, d.activation, 0);
  const double er = kol_map_error(m, d, split.test, d.repolarization, 1);
  return {ea < 2e-2 && er < 1e-2, "iq4 test rel_l2: activation=" + fmtg(ea) +
                                      " (bound 2e-2), repolarization=" + fmtg(er) +
                                      " (bound 1e-2)"};
}

// ------------------------------------------------------- criteria 4-6 (FNO)

Outcome criterion_4(const fs::path& work) {
  const double t0 = now_s();
  const Dataset d = load_fixture(work);
  const Split split = split_80_20(d.size(), d.meta.value("seed", kFixtureSeed));

  FnoConfig cfg;  // width 32, layers 4, modes {16, 4}, batch 20, lr0 1e-3,
                  // plateau 0.95, min_lr 1e-6: the default architecture
  cfg.epochs = 300;
  cfg.target = "activation";
  cfg.seed = kFixtureSeed;
  const FnoTrainResult res = fno_train(d, split, cfg);

  std::vector<double> envelope;
  double best = std::numeric_limits<double>::infinity();
  for (const FnoHistoryRow& row : res.history)
    if (row.test_loss < best) {
      best = row.test_loss;
      envelope.push_back(best);
    }
  bool strict = envelope.size() >= 2;
  for (std::size_t i = 1; i < envelope.size(); ++i)
    if (!(envelope[i] < envelope[i - 1])) strict = false;

  const double wall = now_s() - t0;
  const bool pass = res.best_test < 5e-2 && strict && wall < 1800.0;
  return {pass, "best test rel_l2=" + fmtg(res.best_test) + " (bound 5e-2) after " +
                    std::to_string(res.history.size()) + " epochs; " +
                    std::to_string(envelope.size()) +
                    " strictly-decreasing best-loss improvements; wall " + fmtg(wall) +
                    " s (bound 1800)"};
}

Outcome criterion_5(const fs::path&) {
  const FnoConfig cfg;
  const FnoParams p = fno_init(3, cfg, 0);
  const std::size_t count = fno_param_count(p);
  const double rel = std::abs(static_cast<double>(count) - 532000.0) / 532000.0;
  return {rel <= 0.05, "default 2D config has " + std::to_string(count) +
                           " trainable parameters; |rel - 532k|=" + fmtg(rel) +
                           " (bound 0.05)"};
}

Outcome criterion_6(const fs::path&) {
  const double t0 = now_s();
  FnoConfig cfg;
  cfg.width = 6;
  cfg.layers = 2;
  cfg.q_hidden = 8;
  cfg.modes = {4, 3};
  const FnoParams p = fno_init(3, cfg, 2);
  const std::vector<int> grid = {16, 16};
  const std::size_t batch = 2;
  const std::size_t j = 256;

  std::vector<double> x(3 * batch * j), y(batch * j);
  rng::Counter rx(31, 4), ry(32, 4);
  for (double& v : x) v = rx.uniform(-1.0, 1.0);
  for (double& v : y) v = 5.0 + 10.0 * ry.uniform(0.0, 1.0);

  FnoParams grads;
  (void)fno_loss_and_grad(p, x, y, batch, grid, &grads);

  const std::size_t w = static_cast<std::size_t>(p.width);
  const std::size_t qh = static_cast<std::size_t>(p.q_hidden);
  std::vector<std::pair<std::string, std::pair<std::size_t, std::size_t>>> blocks = {
      {"P", {p.off_p(), 3 * w}},
      {"Pb", {p.off_pb(), w}},
      {"Q1", {p.off_q1(), qh * w}},
      {"Q1b", {p.off_q1b(), qh}},
      {"Q2", {p.off_q2(), qh}},
      {"Q2b", {p.off_q2b(), 1}},
  };
  for (int t = 0; t < p.layers; ++t) {
    const std::string n = std::to_string(t);
    blocks.push_back({"W" + n, {p.off_w(t), w * w}});
    blocks.push_back({"b" + n, {p.off_b(t), w}});
    blocks.push_back({"R" + n, {p.off_r(t), 2 * p.n_kept() * w * w}});
  }

  bool pass = true;
  double worst = 0.0;
  std::string worst_block;
  std::ostringstream rows;
  FnoParams probe = p;
  for (const auto& [name, range] : blocks) {
    double block_worst = 0.0;
    for (std::size_t i = range.first; i < range.first + range.second; ++i) {
      const double theta = p.values[i];
      const double eps = 1e-6 * std::max(1.0, std::abs(theta));
      probe.values[i] = theta + eps;
      const double fp = fno_loss(fno_forward(probe, x, batch, grid), y, batch);
      probe.values[i] = theta - eps;
      const double fm = fno_loss(fno_forward(probe, x, batch, grid), y, batch);
      probe.values[i] = theta;
      const double fd = (fp - fm) / (2.0 * eps);
      const double scale = std::max({std::abs(fd), std::abs(grads.values[i]), 1e-3});
      block_worst = std::max(block_worst, std::abs(fd - grads.values[i]) / scale);
    }
    rows << " " << name << "=" << fmtg(block_worst);
    if (block_worst > worst) {
      worst = block_worst;
      worst_block = name;
    }
    if (!(block_worst < 1e-4)) pass = false;
  }
  const double wall = now_s() - t0;
  if (wall > 60.0) pass = false;
  return {pass, "16x16 micro-model max rel err per block:" + rows.str() + "; worst " +
                    worst_block + "=" + fmtg(worst) + " (bound 1e-4); wall " + fmtg(wall) +
                    " s"};
}

// ---------------------------------------------------- criterion 7 (spectra)

std::size_t flat_index(const std::vector<int>& dims, const std::vector<int>& idx) {
  // x fastest, like the node ordering.
  std::size_t f = 0;
  for (std::size_t a = dims.size(); a-- > 0;)
    f = f * static_cast<std::size_t>(dims[a]) + static_cast<std::size_t>(idx[a]);
  return f;
}

// Full complex DFT with e^{-2 pi i k.j/n}, O(J^2).
std::vector<cplx> naive_dft(const std::vector<double>& x, const std::vector<int>& dims) {
  const std::size_t rank = dims.size();
  std::size_t j_total = 1;
  for (int n : dims) j_total *= static_cast<std::size_t>(n);
  std::vector<cplx> out(j_total);
  std::vector<int> k(rank), jj(rank);
  for (std::size_t kf = 0; kf < j_total; ++kf) {
    std::size_t rem = kf;
    for (std::size_t a = 0; a < rank; ++a) {
      k[a] = static_cast<int>(rem % static_cast<std::size_t>(dims[a]));
      rem /= static_cast<std::size_t>(dims[a]);
    }
    cplx acc = 0.0;
    for (std::size_t jf = 0; jf < j_total; ++jf) {
      rem = jf;
      double phase = 0.0;
      for (std::size_t a = 0; a < rank; ++a) {
        jj[a] = static_cast<int>(rem % static_cast<std::size_t>(dims[a]));
        rem /= static_cast<std::size_t>(dims[a]);
        phase -= 2.0 * M_PI * k[a] * jj[a] / dims[a];
      }
      acc += x[jf] * std::polar(1.0, phase);
    }
    out[kf] = acc;
  }
  return out;
}

Outcome criterion_7(const fs::path&) {
  const std::vector<std::vector<int>> dim_sets = {{64}, {8, 6}, {7, 5}, {4, 4, 4}};
  double worst = 0.0;
  std::ostringstream rows;
  std::uint64_t seed = 100;
  for (const std::vector<int>& dims : dim_sets) {
    std::size_t j_total = 1;
    for (int n : dims) j_total *= static_cast<std::size_t>(n);
    std::vector<double> x(j_total);
    rng::Counter rnd(seed++, 4);
    for (double& v : x) v = rnd.uniform(-1.0, 1.0);

    std::vector<int> fdims(dims.rbegin(), dims.rend());
    const std::size_t sx = static_cast<std::size_t>(dims[0]) / 2 + 1;
    const std::size_t spec_n = j_total / static_cast<std::size_t>(dims[0]) * sx;

    std::vector<cplx> spec(spec_n);
    fft::rfft(fdims, 1, x.data(), spec.data());
    const std::vector<cplx> full = naive_dft(x, dims);

    // rfft equals the low-x half of the full DFT.
    double err_dft = 0.0;
    std::vector<int> idx(dims.size());
    for (std::size_t f = 0; f < j_total; ++f) {
      std::size_t rem = f;
      for (std::size_t a = 0; a < dims.size(); ++a) {
        idx[a] = static_cast<int>(rem % static_cast<std::size_t>(dims[a]));
        rem /= static_cast<std::size_t>(dims[a]);
      }
      if (idx[0] >= static_cast<int>(sx)) continue;
      std::size_t srow = 0;
      for (std::size_t a = dims.size(); a-- > 1;)
        srow = srow * static_cast<std::size_t>(dims[a]) + static_cast<std::size_t>(idx[a]);
      err_dft = std::max(err_dft,
                         std::abs(spec[srow * sx + static_cast<std::size_t>(idx[0])] - full[f]));
    }

    // Round trip back to the samples.
    std::vector<double> back(j_total);
    fft::irfft(fdims, 1, spec.data(), back.data());
    double err_rt = 0.0;
    for (std::size_t i = 0; i < j_total; ++i) err_rt = std::max(err_rt, std::abs(back[i] - x[i]));

    // Parseval with self-mirror x-bins counted once, all others twice.
    double sum_x2 = 0.0;
    for (double v : x) sum_x2 += v * v;
    double sum_spec = 0.0;
    for (std::size_t r = 0; r < spec_n / sx; ++r)
      for (std::size_t kx = 0; kx < sx; ++kx) {
        const bool self = kx == 0 || (dims[0] % 2 == 0 && kx == static_cast<std::size_t>(dims[0]) / 2);
        sum_spec += (self ? 1.0 : 2.0) * std::norm(spec[r * sx + kx]);
      }
    const double err_parseval =
        std::abs(sum_spec / static_cast<double>(j_total) - sum_x2) / sum_x2;

    worst = std::max({worst, err_dft, err_rt, err_parseval});
    rows << " J=" << j_total << ":dft=" << fmtg(err_dft) << ",rt=" << fmtg(err_rt)
         << ",parseval=" << fmtg(err_parseval);
  }

  // Identity-weight truncation equals the naive low-pass projection.
  const std::vector<std::vector<int>> conv_dims = {{64}, {8, 6}, {4, 4, 4}};
  const std::vector<std::vector<int>> conv_modes = {{10}, {3, 2}, {2, 2, 2}};
  for (std::size_t c = 0; c < conv_dims.size(); ++c) {
    const std::vector<int>& dims = conv_dims[c];
    const std::vector<int>& modes = conv_modes[c];
    std::size_t j_total = 1;
    for (int n : dims) j_total *= static_cast<std::size_t>(n);
    std::vector<double> x(j_total);
    rng::Counter rnd(seed++, 4);
    for (double& v : x) v = rnd.uniform(-1.0, 1.0);

    std::size_t slots = static_cast<std::size_t>(modes[0]);
    for (std::size_t a = 1; a < modes.size(); ++a) slots *= 2 * static_cast<std::size_t>(modes[a]);
    std::vector<double> r(2 * slots, 0.0);
    for (std::size_t s = 0; s < slots; ++s) r[2 * s] = 1.0;
    const std::vector<double> ours = spectral_conv(x, 1, 1, dims, modes, r);

    // Project onto the kept slots the way the inverse transform reconstructs
    // them: each slot lands at its bin and Hermitian mirror, at half weight on
    // the self-mirror x-planes (paired slots there restore full weight, bins
    // whose in-plane mirror is dropped stay halved).
    const int rank = static_cast<int>(dims.size());
    const int mx = modes[0];
    const int ty_count = rank > 1 ? 2 * modes[1] : 1;
    const int tz_count = rank > 2 ? 2 * modes[2] : 1;
    auto full_bin = [](int t, int n, int m) { return t < m ? t : n - 2 * m + t; };
    const std::vector<cplx> spec_full = naive_dft(x, dims);
    std::vector<cplx> full(j_total, 0.0);
    for (int tz = 0; tz < tz_count; ++tz)
      for (int ty = 0; ty < ty_count; ++ty)
        for (int kx = 0; kx < mx; ++kx) {
          std::vector<int> kk(dims.size(), 0);
          kk[0] = kx;
          if (rank > 1) kk[1] = full_bin(ty, dims[1], modes[1]);
          if (rank > 2) kk[2] = full_bin(tz, dims[2], modes[2]);
          const bool self = kx == 0 || (dims[0] % 2 == 0 && kx == dims[0] / 2);
          const double wgt = self ? 0.5 : 1.0;
          const cplx y = spec_full[flat_index(dims, kk)];
          full[flat_index(dims, kk)] += wgt * y;
          for (std::size_t a = 0; a < kk.size(); ++a) kk[a] = (dims[a] - kk[a]) % dims[a];
          full[flat_index(dims, kk)] += wgt * std::conj(y);
        }
    double err_lp = 0.0;
    for (std::size_t jf = 0; jf < j_total; ++jf) {
      std::size_t rem = jf;
      std::vector<int> jj(dims.size());
      for (std::size_t a = 0; a < dims.size(); ++a) {
        jj[a] = static_cast<int>(rem % static_cast<std::size_t>(dims[a]));
        rem /= static_cast<std::size_t>(dims[a]);
      }
      cplx acc = 0.0;
      std::vector<int> kk(dims.size());
      for (std::size_t kf = 0; kf < j_total; ++kf) {
        if (std::norm(full[kf]) == 0.0) continue;
        rem = kf;
        double phase = 0.0;
        for (std::size_t a = 0; a < dims.size(); ++a) {
          kk[a] = static_cast<int>(rem % static_cast<std::size_t>(dims[a]));
          rem /= static_cast<std::size_t>(dims[a]);
          phase += 2.0 * M_PI * kk[a] * jj[a] / dims[a];
        }
        acc += full[kf] * std::polar(1.0, phase);
      }
      err_lp = std::max(err_lp, std::abs(acc.real() / static_cast<double>(j_total) - ours[jf]));
    }
    worst = std::max(worst, err_lp);
    rows << " lowpass(J=" << j_total << ")=" << fmtg(err_lp);
  }

  return {worst < 1e-10, "max deviation vs naive DFT oracles " + fmtg(worst) +
                             " (bound 1e-10):" + rows.str()};
}

// --------------------------------------------------- criteria 8-9 (eikonal)

Outcome criterion_8(const fs::path&) {
  // Unit metric: sigma (2,2,2) with lambda 1 gives M = I, c0 = 1.
  auto unit_problem = [](const Geometry& g) {
    return assemble_conductivity(g, axis_fibers(g), {2.0, 2.0, 2.0}, 1.0);
  };

  // Point source at the center of a 101^2 grid.
  const int n0 = 101;
  const Geometry g0 = build_structured({n0, n0}, {1.0, 1.0});
  const std::size_t center = g0.index(n0 / 2, n0 / 2);
  const EikonalProblem p0 = make_eikonal_problem(unit_problem(g0), 1.0, {center}, {0.0});
  const std::vector<double> psi0 = solve_eikonal(p0, g0);
  double maxerr = 0.0;
  for (std::size_t i = 0; i < g0.node_count(); ++i) {
    const double dx = g0.coords[i][0] - g0.coords[center][0];
    const double dy = g0.coords[i][1] - g0.coords[center][1];
    maxerr = std::max(maxerr, std::abs(psi0[i] - std::sqrt(dx * dx + dy * dy)));
  }
  const double h0 = 1.0 / (n0 - 1);

  // Convergence order from three refinements. The source is a radius-0.1 disk
  // carrying exact arrival times; seeding a single node instead caps the
  // observed order near 0.7 because the corner singularity of the distance
  // function dominates the refinement error.
  std::vector<double> errs, hs;
  for (int n : {51, 101, 201}) {
    const Geometry g = build_structured({n, n}, {1.0, 1.0});
    const Vec3 c = g.coords[g.index(n / 2, n / 2)];
    std::vector<std::size_t> src;
    std::vector<double> vals;
    std::vector<double> exact(g.node_count());
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      const double dx = g.coords[i][0] - c[0];
      const double dy = g.coords[i][1] - c[1];
      exact[i] = std::sqrt(dx * dx + dy * dy);
      if (exact[i] <= 0.1) {
        src.push_back(i);
        vals.push_back(exact[i]);
      }
    }
    const EikonalProblem p = make_eikonal_problem(unit_problem(g), 1.0, src, vals);
    const std::vector<double> psi = solve_eikonal(p, g);
    double err = 0.0;
    for (std::size_t i = 0; i < g.node_count(); ++i)
      err = std::max(err, std::abs(psi[i] - exact[i]));
    errs.push_back(err);
    hs.push_back(1.0 / (n - 1));
  }
  // Least-squares slope of log err vs log h.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < errs.size(); ++i) {
    const double lx = std::log(hs[i]), ly = std::log(errs[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double k = static_cast<double>(errs.size());
  const double order = (k * sxy - sx * sy) / (k * sxx - sx * sx);

  const bool pass = maxerr <= 2.0 * h0 && order >= 0.8;
  return {pass, "point-source max err " + fmtg(maxerr) + " vs 2h=" + fmtg(2.0 * h0) +
                    " on 101^2; disk-source errors {" + fmtg(errs[0]) + ", " + fmtg(errs[1]) +
                    ", " + fmtg(errs[2]) + "} -> order " + fmtg(order) + " (bound 0.8)"};
}

Outcome criterion_9(const fs::path&) {
  const int n = 64;
  const Geometry g = build_structured({n, n}, {1.0, 1.0});
  const ConductivityField cond =
      assemble_conductivity(g, axis_fibers(g), {2e-3, 2e-3, 2e-3}, 1.0);
  const MonodomainConfig mc;
  const MonodomainSolver solver(g, cond, mc);

  const double v = solver.planar_velocity(0);
  const double c0 = calibrate_c0(v, cond.effective_scale() * 2e-3);

  Stimulus stim;
  stim.mask.assign(g.node_count(), 0);
  const Vec3 cc = g.coords[g.index(n / 2, n / 2)];
  std::vector<std::size_t> src;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const double dx = g.coords[i][0] - cc[0];
    const double dy = g.coords[i][1] - cc[1];
    if (std::sqrt(dx * dx + dy * dy) <= 0.08) {
      stim.mask[i] = 1;
      src.push_back(i);
    }
  }
  const TimeMaps maps = solver.simulate(stim);

  // Both solvers start from the same Dirichlet data: the reaction-diffusion
  // activation times on the stimulated nodes. A pure eikonal model has no
  // notion of the pulse-driven depolarization delay inside the source.
  std::vector<double> vals(src.size());
  for (std::size_t k = 0; k < src.size(); ++k) vals[k] = maps.activation[src[k]];
  const EikonalProblem p = make_eikonal_problem(cond, c0, src, vals);
  const std::vector<double> psi = solve_eikonal(p, g);

  std::vector<double> truth, pred;
  for (std::size_t i = 0; i < g.node_count(); ++i)
    if (maps.valid[i]) {
      truth.push_back(maps.activation[i]);
      pred.push_back(psi[i]);
    }
  const double rl2 = rel_l2(pred, truth, truth.size());
  const double dis = pearson_dissimilarity(pred, truth);
  return {dis < 0.05 && rl2 < 0.1,
          "calibrated c0=" + fmtg(c0) + " from v=" + fmtg(v) + "; pearson dissimilarity " +
              fmtg(dis) + " (bound 0.05), rel_l2 " + fmtg(rl2) + " (bound 0.1) over " +
              std::to_string(truth.size()) + " nodes"};
}

// ------------------------------------------------ criteria 10-11 (datasets)

Outcome criterion_10(const fs::path& work) {
  const Dataset d = load_fixture(work);
  std::size_t valid_nodes = 0, violations = 0;
  for (std::size_t s = 0; s < d.size(); ++s)
    for (std::size_t i = 0; i < d.valid[s].size(); ++i)
      if (d.valid[s][i]) {
        ++valid_nodes;
        if (!(d.repolarization[s][i] > d.activation[s][i])) ++violations;
      }

  // Resting tissue with no stimulus must not move at all.
  const Geometry g = build_structured({kFixtureGrid, kFixtureGrid}, {1.0, 1.0});
  const ConductivityField cond =
      assemble_conductivity(g, rotated_fibers(g, 0.0), {2e-3, 4e-4, 4e-4}, 1.0);
  const MonodomainConfig mc;
  const MonodomainSolver solver(g, cond, mc);
  std::vector<double> v(g.node_count(), mc.v0), w(g.node_count(), mc.w0);
  Stimulus none;
  none.mask.assign(g.node_count(), 0);
  none.intensity = 0.0;
  for (int step = 0; step < 400; ++step)
    solver.step(v, w, step * mc.dt, none);
  double drift = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    drift = std::max({drift, std::abs(v[i] - mc.v0), std::abs(w[i] - mc.w0)});

  const bool pass = violations == 0 && drift <= 1e-14;
  return {pass, "repolarization > activation at " + std::to_string(valid_nodes) +
                    " valid nodes across 250 samples (" + std::to_string(violations) +
                    " violations); zero-stimulus drift after 400 steps " + fmtg(drift) +
                    " (bound 1e-14)"};
}

Outcome criterion_11(const fs::path& work) {
  const Dataset d = load_fixture(work);
  const Split split = split_80_20(d.size(), d.meta.value("seed", kFixtureSeed));
  const std::size_t nodes = d.geometry.node_count();
  const KolModel m = fit_kol(kernel_preset("iq4"), gather_masks(d, split.train),
                             stack_targets(d, split.train, true, true), 2 * nodes, d.geometry,
                             1e-10);

  const ConductivityField cond = assemble_conductivity(
      d.geometry, rotated_fibers(d.geometry, 0.0),
      {d.meta["sigma"][0].get<double>(), d.meta["sigma"][1].get<double>(),
       d.meta["sigma"][2].get<double>()},
      d.meta.value("lambda", 1.0));
  MonodomainConfig mc;
  mc.dt = d.meta.value("dt", mc.dt);
  mc.t_end = d.meta.value("t_end", mc.t_end);
  const MonodomainSolver solver(d.geometry, cond, mc);
  Stimulus stim;
  stim.mask = d.inputs[0];
  stim.intensity = d.meta.value("intensity", 100.0);
  stim.duration = d.meta.value("duration", 1.0);

  const BenchResult mono = bench([&] { (void)solver.simulate(stim); }, 1);
  const BenchResult sur = bench([&] { (void)predict_kol(m, stim.mask); }, 5);
  const double speedup = mono.per_call_seconds / sur.per_call_seconds;
  return {speedup >= 50.0, "monodomain " + fmtg(mono.per_call_seconds) + " s vs kol predict " +
                               fmtg(sur.per_call_seconds) + " s -> speedup " + fmtg(speedup) +
                               "x (bound 50x)"};
}

// ------------------------------------------- criteria 12-13 (reproducibility)

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) raise(errc::IoError, "cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_12(const fs::path& work) {
  const fs::path cli = fs::canonical("/proc/self/exe").parent_path() / "cardiograph";
  if (!fs::exists(cli)) return {false, "cli binary not found at " + cli.string()};
  const fs::path dir = work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);

  std::ofstream(dir / "config.json")
      << R"({"geometry": {"dims": [32, 32]},)"
      << R"( "fno": {"width": 8, "modes": [4, 3], "layers": 2, "epochs": 3, "batch": 3}})";

  auto run = [&](const std::string& args) {
    const std::string cmd = cli.string() + " " + args + " >> " + (dir / "log.txt").string() +
                            " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  const std::string common = " --deterministic --seed 123 --config " +
                             (dir / "config.json").string() + " --out-dir " + dir.string();

  for (const char* tag : {"a", "b"}) {
    if (run("generate --n 6" + common + " --out " + (dir / (std::string("ds_") + tag + ".epds")).string()) != 0)
      return {false, "generate run failed; see " + (dir / "log.txt").string()};
    if (run("train fno --data " + (dir / (std::string("ds_") + tag + ".epds")).string() + common +
            " --out " + (dir / (std::string("fno_") + tag + ".epds")).string() + " --history " +
            (dir / (std::string("hist_") + tag + ".csv")).string()) != 0)
      return {false, "train run failed; see " + (dir / "log.txt").string()};
  }

  const bool ds_same = slurp(dir / "ds_a.epds") == slurp(dir / "ds_b.epds");
  const bool hist_same = slurp(dir / "hist_a.csv") == slurp(dir / "hist_b.csv");
  const bool model_same = slurp(dir / "fno_a.epds") == slurp(dir / "fno_b.epds");
  return {ds_same && hist_same && model_same,
          std::string("seed 123 + --deterministic twice: dataset bytes ") +
              (ds_same ? "identical" : "DIFFER") + ", loss history bytes " +
              (hist_same ? "identical" : "DIFFER") + ", model bytes " +
              (model_same ? "identical" : "DIFFER")};
}

Outcome criterion_13(const fs::path& work) {
  fs::create_directories(work);
  epds::Container c;
  c.meta["kind"] = "probe";
  c.meta["note"] = "serialization acceptance";
  std::vector<double> a(17);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::sin(static_cast<double>(i)) * 1e3;
  c.add("alpha", {17}, a);
  c.add("beta", {4, 3}, std::vector<double>(12, -2.5));
  c.add("gamma", {2, 2, 2}, {0.0, 1.0, -1.0, 1e-300, 1e300, 3.14, -0.0, 42.0});

  const fs::path f1 = work / "ser_1.epds";
  const fs::path f2 = work / "ser_2.epds";
  epds::write_container(c, f1.string());
  const epds::Container back = epds::read_container(f1.string());
  epds::write_container(back, f2.string());
  const std::string bytes = slurp(f1);
  const bool round_trip = bytes == slurp(f2);

  // Every possible single-byte corruption must be rejected on read.
  const fs::path bad = work / "ser_bad.epds";
  std::size_t undetected = 0;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    std::string mutated = bytes;
    mutated[i] = static_cast<char>(mutated[i] ^ 0x20);
    std::ofstream(bad, std::ios::binary) << mutated;
    try {
      (void)epds::read_container(bad.string());
      ++undetected;
    } catch (const Error&) {
    }
  }
  return {round_trip && undetected == 0,
          "write-read-write round trip " + std::string(round_trip ? "byte-identical" : "DIFFERS") +
              "; " + std::to_string(bytes.size()) + " single-byte corruptions, " +
              std::to_string(undetected) + " undetected"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int criterion = -1;
  std::string work;
  app.add_option("--criterion", criterion, "criterion number (0 prepares the fixture)")
      ->required();
  app.add_option("--work", work, "scratch/fixture directory")->required();
  CLI11_PARSE(app, argc, argv);

  using Fn = Outcome (*)(const fs::path&);
  const std::map<int, Fn> table = {
      {0, criterion_0},  {1, criterion_1},  {2, criterion_2},  {3, criterion_3},
      {4, criterion_4},  {5, criterion_5},  {6, criterion_6},  {7, criterion_7},
      {8, criterion_8},  {9, criterion_9},  {10, criterion_10}, {11, criterion_11},
      {12, criterion_12}, {13, criterion_13},
  };
  const auto it = table.find(criterion);
  if (it == table.end()) {
    std::fprintf(stderr, "unknown criterion %d\n", criterion);
    return 2;
  }
  Outcome o;
  try {
    o = it->second(fs::path(work));
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("criterion %d: %s — %s\n", criterion, o.pass ? "PASS" : "FAIL", o.detail.c_str());
  return o.pass ? 0 : 1;
}
