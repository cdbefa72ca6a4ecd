#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <vector>

#include <doctest.h>

#include "cardiograph/dataset.hpp"
#include "cardiograph/epds.hpp"
#include "cardiograph/errors.hpp"
#include "cardiograph/geometry.hpp"

using namespace cardiograph;
namespace fs = std::filesystem;

namespace {

Geometry grid64() { return build_structured({64, 64}, {1.0, 1.0}); }

StimulusParams default_params() { return StimulusParams{}; }

}  // namespace

TEST_CASE("stimulus sampling is a pure function of seed and counter") {
  const Geometry g = grid64();
  const StimulusParams sp = default_params();
  const Stimulus a = sample_stimulus(7, 3, g, sp);
  const Stimulus b = sample_stimulus(7, 3, g, sp);
  CHECK(a.mask == b.mask);
  const Stimulus c = sample_stimulus(7, 4, g, sp);
  CHECK(a.mask != c.mask);
  const Stimulus d = sample_stimulus(8, 3, g, sp);
  CHECK(a.mask != d.mask);
}

TEST_CASE("mask size tracks the disk area") {
  const Geometry g = grid64();
  const StimulusParams sp = default_params();  // radius 0.05 of a unit sheet
  const double h = g.spacing[0];
  const double expected = M_PI * 0.05 * 0.05 / (h * h);
  for (std::uint64_t k = 0; k < 20; ++k) {
    const Stimulus s = sample_stimulus(11, k, g, sp);
    const auto count = static_cast<double>(
        std::count(s.mask.begin(), s.mask.end(), std::uint8_t{1}));
    CHECK(count > 0.8 * expected);
    CHECK(count < 1.2 * expected);
  }
}

TEST_CASE("masks are compact disks away from the boundary") {
  const Geometry g = grid64();
  const StimulusParams sp = default_params();
  for (std::uint64_t k = 0; k < 10; ++k) {
    const Stimulus s = sample_stimulus(13, k, g, sp);
    double cx = 0.0, cy = 0.0, n = 0.0;
    for (std::size_t i = 0; i < g.node_count(); ++i)
      if (s.mask[i]) {
        cx += g.coords[i][0];
        cy += g.coords[i][1];
        n += 1.0;
      }
    cx /= n;
    cy /= n;
    // The disk center stays one radius from each wall, so the whole disk
    // fits inside the sheet; nodes cluster within the radius of the centroid.
    const double pad = 0.05 - g.spacing[0];
    CHECK(cx > pad);
    CHECK(cx < 1.0 - pad);
    CHECK(cy > pad);
    CHECK(cy < 1.0 - pad);
    for (std::size_t i = 0; i < g.node_count(); ++i)
      if (s.mask[i]) {
        const double dx = g.coords[i][0] - cx;
        const double dy = g.coords[i][1] - cy;
        CHECK(std::sqrt(dx * dx + dy * dy) < 0.05 + 2.0 * g.spacing[0]);
      }
  }
}

TEST_CASE("a radius below the grid spacing cannot produce a mask") {
  const Geometry g = build_structured({16, 16}, {1.0, 1.0});
  CHECK_THROWS_WITH_AS((void)sample_stimulus(1, 0, g, default_params()),
                       doctest::Contains("EmptyMask"), Error);
}

TEST_CASE("the 80/20 split covers every sample exactly once") {
  const Split s10 = split_80_20(10, 5);
  CHECK(s10.train.size() == 8);
  CHECK(s10.test.size() == 2);
  const Split s2000 = split_80_20(2000, 5);
  CHECK(s2000.train.size() == 1600);
  CHECK(s2000.test.size() == 400);
  const Split s5 = split_80_20(5, 5);
  CHECK(s5.train.size() == 4);
  CHECK(s5.test.size() == 1);

  std::set<std::size_t> all(s10.train.begin(), s10.train.end());
  all.insert(s10.test.begin(), s10.test.end());
  CHECK(all.size() == 10);
  CHECK(*all.rbegin() == 9);
}

TEST_CASE("splits are seeded and deterministic") {
  const Split a = split_80_20(100, 3);
  const Split b = split_80_20(100, 3);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  const Split c = split_80_20(100, 4);
  CHECK(a.train != c.train);
}

TEST_CASE("generation simulates, flags validity, and orders the maps") {
  const Geometry g = build_structured({24, 24}, {1.0, 1.0});
  const ConductivityField cond =
      assemble_conductivity(g, axis_fibers(g), {2e-3, 4e-4, 4e-4}, 1.0);
  StimulusParams sp;
  sp.radius_lo = 0.08;
  sp.radius_hi = 0.12;
  const Dataset d = generate(3, g, cond, MonodomainConfig{}, sp, 17);

  CHECK(d.size() == 3);
  CHECK(d.meta["kind"] == "dataset");
  CHECK(d.meta["seed"] == 17);
  CHECK(d.meta["n_samples"] == 3);
  for (std::size_t s = 0; s < d.size(); ++s) {
    REQUIRE(d.inputs[s].size() == g.node_count());
    REQUIRE(d.activation[s].size() == g.node_count());
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      if (d.valid[s][i]) {
        CHECK(d.activation[s][i] >= 0.0);
        CHECK(d.repolarization[s][i] > d.activation[s][i]);
      } else {
        CHECK(d.activation[s][i] == -1.0);
      }
    }
  }
  // Different draws stimulate different places.
  CHECK(d.inputs[0] != d.inputs[1]);
}

TEST_CASE("datasets survive a save/load round trip") {
  const Geometry g = build_structured({24, 24}, {1.0, 1.0});
  const ConductivityField cond =
      assemble_conductivity(g, axis_fibers(g), {2e-3, 4e-4, 4e-4}, 1.0);
  StimulusParams sp;
  sp.radius_lo = 0.1;
  sp.radius_hi = 0.1;
  const Dataset d = generate(2, g, cond, MonodomainConfig{}, sp, 23);

  const fs::path dir = fs::temp_directory_path() / "cardiograph_dataset_tests";
  fs::create_directories(dir);
  const std::string path = (dir / "ds.epds").string();
  save_dataset(d, path);
  const Dataset r = load_dataset(path);

  CHECK(r.size() == d.size());
  CHECK(r.geometry.dims == d.geometry.dims);
  CHECK(r.geometry.extent == d.geometry.extent);
  CHECK(r.meta == d.meta);
  for (std::size_t s = 0; s < d.size(); ++s) {
    CHECK(r.inputs[s] == d.inputs[s]);
    CHECK(r.activation[s] == d.activation[s]);
    CHECK(r.repolarization[s] == d.repolarization[s]);
    CHECK(r.valid[s] == d.valid[s]);
  }
}

TEST_CASE("loading a non-dataset container fails cleanly") {
  const fs::path dir = fs::temp_directory_path() / "cardiograph_dataset_tests";
  fs::create_directories(dir);
  const std::string path = (dir / "not_ds.epds").string();
  epds::Container c;
  c.meta["kind"] = "something_else";
  c.add("x", {1}, {1.0});
  epds::write_container(c, path);
  CHECK_THROWS_AS((void)load_dataset(path), Error);
}
