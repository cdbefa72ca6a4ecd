#include "cardiograph/run_config.hpp"

#include <cstdint>
#include <fstream>

#include "cardiograph/errors.hpp"

namespace cardiograph {

namespace {

bool same_kind(const nlohmann::json& a, const nlohmann::json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

// Checks `user` against the schema document and overlays it, path by path.
void merge_checked(nlohmann::json& base, const nlohmann::json& user, const std::string& path) {
  if (!user.is_object()) {
    if (!same_kind(base, user))
      raise(errc::ConfigError, "config value at '" + path + "' has the wrong type");
    base = user;
    return;
  }
  if (!base.is_object())
    raise(errc::ConfigError, "config value at '" + path + "' has the wrong type");
  for (const auto& [key, value] : user.items()) {
    const std::string child = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) raise(errc::ConfigError, "unknown config key '" + child + "'");
    merge_checked(base[key], value, child);
  }
}

}  // namespace

nlohmann::json default_run_config() {
  nlohmann::json c;
  c["seed"] = 0;
  c["geometry"] = {
      {"dims", {64, 64}},
      {"extent", {1.0, 1.0}},
      {"sigma", {2e-3, 4e-4, 4e-4}},
      {"lambda", 1.0},
      {"fiber_angle", 0.0},
  };
  c["monodomain"] = {
      {"chi", 1.0},
      {"c_m", 1.0},
      {"dt", 0.05},
      {"t_end", 600.0},
      {"cg_tol", 1e-8},
      {"v_act", 20.0},
      {"v_rep", 10.0},
      {"early_exit", true},
      {"ionic",
       {{"G", 1.5},
        {"eta1", 4.4},
        {"eta2", 0.012},
        {"eta3", 1.0},
        {"v_th", 13.0},
        {"v_p", 100.0}}},
  };
  c["stimulus"] = {
      {"radius_lo", 0.05},
      {"radius_hi", 0.05},
      {"intensity", 100.0},
      {"duration", 1.0},
  };
  c["kol"] = {
      {"preset", "iq4"},
      {"reg", 1e-10},
      {"target", "both"},
  };
  c["fno"] = {
      {"width", 32},
      {"modes", {16, 4}},
      {"layers", 4},
      {"epochs", 300},
      {"lr", 1e-3},
      {"batch", 20},
      {"plateau_factor", 0.95},
      {"min_lr", 1e-6},
      {"activation", "gelu"},
      {"target", "activation"},
  };
  c["eval"] = {
      {"bins", 20},
      {"outlier_threshold", 0.04},
  };
  c["paths"] = {
      {"out_dir", "."},
  };
  return c;
}

nlohmann::json load_run_config(const std::string& path, const nlohmann::json& overrides) {
  nlohmann::json merged = default_run_config();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) raise(errc::IoError, "cannot open config file '" + path + "'");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      raise(errc::ConfigError, "config file '" + path + "' is not valid JSON: " + e.what());
    }
    merge_checked(merged, doc, "");
  }
  if (!overrides.is_null()) merge_checked(merged, overrides, "");
  return merged;
}

std::string config_hash(const nlohmann::json& config) {
  const std::string dump = config.dump();
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001B3ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

Geometry geometry_from(const nlohmann::json& config) {
  const auto& g = config.at("geometry");
  return build_structured(g.at("dims").get<std::vector<int>>(),
                          g.at("extent").get<std::vector<double>>());
}

ConductivityField conductivity_from(const nlohmann::json& config, const Geometry& g) {
  const auto& geo = config.at("geometry");
  const auto sig = geo.at("sigma").get<std::vector<double>>();
  if (sig.size() != 3) raise(errc::ConfigError, "geometry.sigma must have three entries");
  const double angle = geo.at("fiber_angle").get<double>();
  if (g.dim != 2 && angle != 0.0)
    raise(errc::ConfigError, "geometry.fiber_angle is only supported on 2D grids");
  const FiberField fibers = g.dim == 2 ? rotated_fibers(g, angle) : axis_fibers(g);
  return assemble_conductivity(g, fibers, {sig[0], sig[1], sig[2]},
                               geo.at("lambda").get<double>());
}

MonodomainConfig monodomain_from(const nlohmann::json& config) {
  const auto& m = config.at("monodomain");
  MonodomainConfig cfg;
  cfg.chi = m.at("chi").get<double>();
  cfg.c_m = m.at("c_m").get<double>();
  cfg.dt = m.at("dt").get<double>();
  cfg.t_end = m.at("t_end").get<double>();
  cfg.cg_tol = m.at("cg_tol").get<double>();
  cfg.v_act = m.at("v_act").get<double>();
  cfg.v_rep = m.at("v_rep").get<double>();
  cfg.early_exit = m.at("early_exit").get<bool>();
  const auto& ion = m.at("ionic");
  cfg.ionic.G = ion.at("G").get<double>();
  cfg.ionic.eta1 = ion.at("eta1").get<double>();
  cfg.ionic.eta2 = ion.at("eta2").get<double>();
  cfg.ionic.eta3 = ion.at("eta3").get<double>();
  cfg.ionic.v_th = ion.at("v_th").get<double>();
  cfg.ionic.v_p = ion.at("v_p").get<double>();
  return cfg;
}

StimulusParams stimulus_from(const nlohmann::json& config) {
  const auto& s = config.at("stimulus");
  StimulusParams sp;
  sp.radius_lo = s.at("radius_lo").get<double>();
  sp.radius_hi = s.at("radius_hi").get<double>();
  sp.intensity = s.at("intensity").get<double>();
  sp.duration = s.at("duration").get<double>();
  return sp;
}

KernelSpec kernel_spec_from(const nlohmann::json& config) {
  return kernel_preset(config.at("kol").at("preset").get<std::string>());
}

}  // namespace cardiograph
