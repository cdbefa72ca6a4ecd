#include "cardiograph/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cardiograph/epds.hpp"
#include "cardiograph/errors.hpp"
#include "cardiograph/rng.hpp"
#include "cardiograph/version.hpp"

namespace cardiograph {

namespace {

void validate_radius_range(const StimulusParams& sp) {
  if (!(sp.radius_lo > 0.0) || !(sp.radius_hi < 0.5) || sp.radius_lo > sp.radius_hi)
    raise(errc::ConfigError, "radius range must satisfy 0 < lo <= hi < 0.5");
}

}  // namespace

Stimulus sample_stimulus(std::uint64_t seed, std::uint64_t counter, const Geometry& g,
                         const StimulusParams& sp) {
  if (!g.structured()) raise(errc::Unsupported, "stimulus sampling needs a structured grid");
  validate_radius_range(sp);

  double min_extent = g.extent[0], max_spacing = g.spacing[0];
  for (int a = 1; a < g.dim; ++a) {
    min_extent = std::min(min_extent, g.extent[a]);
    max_spacing = std::max(max_spacing, g.spacing[a]);
  }

  rng::Counter rng(seed, rng::kStimulusStream, counter);
  const double r = (sp.radius_lo + (sp.radius_hi - sp.radius_lo) * rng.uniform()) * min_extent;
  if (r < max_spacing)
    raise(errc::EmptyMask, "stimulus radius " + std::to_string(r) +
                               " is below the grid spacing " + std::to_string(max_spacing));
  Vec3 center{0.0, 0.0, 0.0};
  for (int a = 0; a < g.dim; ++a) center[a] = r + rng.uniform() * (g.extent[a] - 2.0 * r);

  Stimulus stim;
  stim.intensity = sp.intensity;
  stim.duration = sp.duration;
  stim.mask.assign(g.node_count(), 0);
  const double r2 = r * r;
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    double d2 = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      const double dx = g.coords[i][a] - center[a];
      d2 += dx * dx;
    }
    if (d2 <= r2) stim.mask[i] = 1;
  }
  return stim;
}

Dataset generate(std::size_t n_samples, const Geometry& g, const ConductivityField& cond,
                 const MonodomainConfig& cfg, const StimulusParams& sp, std::uint64_t seed) {
  if (n_samples < 1) raise(errc::TooSmall, "dataset needs at least one sample");

  Dataset d;
  d.geometry = g;
  d.inputs.resize(n_samples);
  d.activation.resize(n_samples);
  d.repolarization.resize(n_samples);
  d.valid.resize(n_samples);

  MonodomainSolver solver(g, cond, cfg);
  for (std::size_t i = 0; i < n_samples; ++i) {
    try {
      Stimulus stim = sample_stimulus(seed, i, g, sp);
      TimeMaps maps = solver.simulate(stim);
      d.inputs[i] = std::move(stim.mask);
      d.activation[i] = std::move(maps.activation);
      d.repolarization[i] = std::move(maps.repolarization);
      d.valid[i] = std::move(maps.valid);
    } catch (const Error& e) {
      std::string what = e.what();
      const std::string prefix = std::string(errc_name(e.code())) + ": ";
      if (what.rfind(prefix, 0) == 0) what = what.substr(prefix.size());
      raise(e.code(), "sample " + std::to_string(i) + ": " + what);
    }
  }

  d.meta["kind"] = "dataset";
  d.meta["seed"] = seed;
  d.meta["n_samples"] = n_samples;
  d.meta["radius_lo"] = sp.radius_lo;
  d.meta["radius_hi"] = sp.radius_hi;
  d.meta["intensity"] = sp.intensity;
  d.meta["duration"] = sp.duration;
  d.meta["dt"] = cfg.dt;
  d.meta["t_end"] = cfg.t_end;
  d.meta["sigma"] = {cond.sigmas[0], cond.sigmas[1], cond.sigmas[2]};
  d.meta["lambda"] = cond.lambda;
  d.meta["tool_version"] = kToolVersion;
  return d;
}

Split split_80_20(std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 5) raise(errc::TooSmall, "split needs at least 5 samples");
  std::vector<std::size_t> order(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) order[i] = i;
  rng::Counter rng(seed, rng::kShuffleStream, 0);
  for (std::size_t i = n_samples - 1; i > 0; --i)
    std::swap(order[i], order[rng.below(i + 1)]);

  const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(n_samples)));
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

void save_dataset(const Dataset& d, const std::string& path) {
  const std::size_t n_samples = d.size();
  if (n_samples == 0) raise(errc::TooSmall, "refusing to save an empty dataset");
  if (!d.geometry.structured()) raise(errc::Unsupported, "only structured datasets are saved");
  const std::size_t n = d.geometry.node_count();

  epds::Container c;
  c.meta["dataset"] = d.meta;
  nlohmann::json geo;
  geo["dims"] = std::vector<int>(d.geometry.dims.begin(), d.geometry.dims.end());
  geo["extent"] = std::vector<double>(d.geometry.extent.begin(),
                                      d.geometry.extent.begin() + d.geometry.dim);
  c.meta["geometry"] = geo;

  auto pack_u8 = [&](const std::vector<std::vector<std::uint8_t>>& rows) {
    std::vector<double> flat(n_samples * n);
    for (std::size_t i = 0; i < n_samples; ++i) {
      if (rows[i].size() != n) raise(errc::ShapeMismatch, "row length differs from node count");
      for (std::size_t j = 0; j < n; ++j) flat[i * n + j] = rows[i][j];
    }
    return flat;
  };
  auto pack_f64 = [&](const std::vector<std::vector<double>>& rows) {
    std::vector<double> flat(n_samples * n);
    for (std::size_t i = 0; i < n_samples; ++i) {
      if (rows[i].size() != n) raise(errc::ShapeMismatch, "row length differs from node count");
      std::copy(rows[i].begin(), rows[i].end(), flat.begin() + static_cast<std::ptrdiff_t>(i * n));
    }
    return flat;
  };

  c.add("inputs", {n_samples, n}, pack_u8(d.inputs));
  c.add("activation", {n_samples, n}, pack_f64(d.activation));
  c.add("repolarization", {n_samples, n}, pack_f64(d.repolarization));
  c.add("valid", {n_samples, n}, pack_u8(d.valid));
  epds::write_container(c, path);
}

Dataset load_dataset(const std::string& path) {
  const epds::Container c = epds::read_container(path);
  if (!c.meta.contains("geometry") || !c.meta.contains("dataset"))
    raise(errc::IoError, "'" + path + "' is not a dataset container");

  Dataset d;
  d.meta = c.meta["dataset"];
  const auto dims = c.meta["geometry"]["dims"].get<std::vector<int>>();
  const auto extent = c.meta["geometry"]["extent"].get<std::vector<double>>();
  d.geometry = build_structured(dims, extent);
  const std::size_t n = d.geometry.node_count();

  const auto unpack = [&](const std::string& name) {
    const epds::Array& a = c.at(name);
    if (a.dims.size() != 2 || a.dims[1] != n)
      raise(errc::ShapeMismatch, "array '" + name + "' does not match the geometry");
    return &a;
  };
  const epds::Array* inputs = unpack("inputs");
  const epds::Array* act = unpack("activation");
  const epds::Array* rep = unpack("repolarization");
  const epds::Array* valid = unpack("valid");
  const std::size_t n_samples = inputs->dims[0];
  if (n_samples < 1) raise(errc::TooSmall, "dataset has no samples");
  if (act->dims[0] != n_samples || rep->dims[0] != n_samples || valid->dims[0] != n_samples)
    raise(errc::ShapeMismatch, "array sample counts differ");

  d.inputs.resize(n_samples);
  d.activation.resize(n_samples);
  d.repolarization.resize(n_samples);
  d.valid.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    d.inputs[i].resize(n);
    d.valid[i].resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      d.inputs[i][j] = inputs->data[i * n + j] != 0.0 ? 1 : 0;
      d.valid[i][j] = valid->data[i * n + j] != 0.0 ? 1 : 0;
    }
    d.activation[i].assign(act->data.begin() + static_cast<std::ptrdiff_t>(i * n),
                           act->data.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
    d.repolarization[i].assign(rep->data.begin() + static_cast<std::ptrdiff_t>(i * n),
                               rep->data.begin() + static_cast<std::ptrdiff_t>((i + 1) * n));
  }
  return d;
}

}  // namespace cardiograph
