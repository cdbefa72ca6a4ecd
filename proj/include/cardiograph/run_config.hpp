#pragma once

#include <string>

#include <json.hpp>

#include "cardiograph/dataset.hpp"
#include "cardiograph/geometry.hpp"
#include "cardiograph/kol.hpp"
#include "cardiograph/monodomain.hpp"

namespace cardiograph {

// Full default run configuration; every recognized key appears here with its
// default value, so this document doubles as the config schema.
nlohmann::json default_run_config();

// Defaults deep-merged with the optional file and then with `overrides`
// (same shape as the config). Unknown keys anywhere raise ConfigError with
// the offending dotted path; values must match the default's JSON type.
nlohmann::json load_run_config(const std::string& path, const nlohmann::json& overrides);

// FNV-1a 64-bit hash of the canonical (sorted-key) dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

// Typed views into a merged config document.
Geometry geometry_from(const nlohmann::json& config);
ConductivityField conductivity_from(const nlohmann::json& config, const Geometry& g);
MonodomainConfig monodomain_from(const nlohmann::json& config);
StimulusParams stimulus_from(const nlohmann::json& config);
KernelSpec kernel_spec_from(const nlohmann::json& config);

}  // namespace cardiograph
