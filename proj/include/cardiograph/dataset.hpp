#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cardiograph/geometry.hpp"
#include "cardiograph/monodomain.hpp"

namespace cardiograph {

struct Dataset {
  Geometry geometry;
  std::vector<std::vector<std::uint8_t>> inputs;
  std::vector<std::vector<double>> activation;
  std::vector<std::vector<double>> repolarization;
  std::vector<std::vector<std::uint8_t>> valid;
  nlohmann::json meta = nlohmann::json::object();

  std::size_t size() const { return inputs.size(); }
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct StimulusParams {
  // Radius as a fraction of the shortest extent; the pulse region is a disk
  // (2D) or ball (3D) kept at least one radius away from every boundary.
  double radius_lo = 0.05;
  double radius_hi = 0.05;
  double intensity = 100.0;
  double duration = 1.0;
};

// Deterministic: (seed, counter) fully determine the mask.
Stimulus sample_stimulus(std::uint64_t seed, std::uint64_t counter, const Geometry& g,
                         const StimulusParams& sp);

Dataset generate(std::size_t n_samples, const Geometry& g, const ConductivityField& cond,
                 const MonodomainConfig& cfg, const StimulusParams& sp, std::uint64_t seed);

Split split_80_20(std::size_t n_samples, std::uint64_t seed);

void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace cardiograph
