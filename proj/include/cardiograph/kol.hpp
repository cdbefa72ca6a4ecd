#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cardiograph/geometry.hpp"

namespace cardiograph {

enum class KernelFamily { RBF, IQ, NTK };
enum class NtkActivation { Relu, Sigmoid };

struct KernelSpec {
  KernelFamily family = KernelFamily::IQ;
  double rbf_sigma = 1.0;
  double iq_sigma1 = 1e-4;
  double iq_sigma2 = 1e-1;
  int ntk_depth = 3;
  NtkActivation ntk_activation = NtkActivation::Sigmoid;
  std::string preset_name;
};

// Named presets: iq1..iq5, rbf1..rbf3, ntk1..ntk3.
KernelSpec kernel_preset(const std::string& name);
const std::vector<std::string>& kernel_preset_names();

Vec3 centroid(const std::vector<std::uint8_t>& mask, const Geometry& g);

// Symmetric kernel value. RBF and IQ act on the Euclidean distance between
// mask centroids; NTK is the infinite-width limit kernel evaluated on whole
// masks scaled by 1/sqrt(n).
double kernel_eval(const KernelSpec& spec, const std::vector<std::uint8_t>& a1,
                   const std::vector<std::uint8_t>& a2, const Geometry& g);

struct KolModel {
  KernelSpec spec;
  Geometry geometry;
  double reg = 1e-10;
  std::size_t out_cols = 0;
  std::vector<std::vector<std::uint8_t>> train_masks;
  std::vector<Vec3> train_centroids;
  std::vector<double> alphas;  // n_train x out_cols, row-major

  std::size_t n_train() const { return train_masks.size(); }
};

std::vector<double> kol_gram(const KernelSpec& spec,
                             const std::vector<std::vector<std::uint8_t>>& masks,
                             const Geometry& g);

// Assembles the Gram matrix, factors (S + reg I) by Cholesky, and solves for
// all target columns at once. targets is n_train x out_cols row-major; any
// per-node maps to be learned jointly are stacked side by side as columns.
KolModel fit_kol(const KernelSpec& spec, std::vector<std::vector<std::uint8_t>> masks,
                 const std::vector<double>& targets, std::size_t out_cols, const Geometry& g,
                 double reg = 1e-10);

// Closed-form prediction: sum_j S(mask, A_j) alpha_j, length out_cols.
std::vector<double> predict_kol(const KolModel& m, const std::vector<std::uint8_t>& mask);

// Bilinear (2D) / trilinear (3D) sampling of a per-node field at an arbitrary
// point; coordinates are clamped to the domain box.
double interpolate_at(const std::vector<double>& field, const Geometry& g, const Vec3& x);

void save_kol(const KolModel& m, const std::string& path,
              const nlohmann::json& extra_meta = nlohmann::json::object());
KolModel load_kol(const std::string& path, nlohmann::json* meta_out = nullptr);

}  // namespace cardiograph
