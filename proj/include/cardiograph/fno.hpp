#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cardiograph/dataset.hpp"
#include "cardiograph/geometry.hpp"

namespace cardiograph {

enum class FnoActivation { Gelu, Identity };

struct FnoConfig {
  int width = 32;
  int layers = 4;
  int q_hidden = 128;
  std::vector<int> modes = {16, 4};  // kept modes per axis, x first
  FnoActivation activation = FnoActivation::Gelu;
  double lr0 = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch = 20;
  int epochs = 300;
  double plateau_factor = 0.95;
  double min_lr = 1e-6;
  std::string target = "activation";  // or "repolarization"
  std::uint64_t seed = 0;
};

// All trainable blocks concatenated into one flat vector, in order
// P, Pb, then per layer (W, b, R), then Q1, Q1b, Q2, Q2b.  Spectral weights
// R are stored as interleaved (re, im) pairs, one width x width column-major
// complex matrix per retained mode; the mode enumeration is grid-independent
// so a trained model evaluates at any resolution.
struct FnoParams {
  int in_ch = 3;
  int width = 32;
  int layers = 4;
  int q_hidden = 128;
  std::vector<int> modes;
  FnoActivation activation = FnoActivation::Gelu;
  std::vector<double> values;

  std::size_t n_kept() const;      // retained modes per layer
  std::size_t value_count() const; // length of `values` (complex as two reals)

  std::size_t off_p() const { return 0; }
  std::size_t off_pb() const;
  std::size_t off_w(int t) const;
  std::size_t off_b(int t) const;
  std::size_t off_r(int t) const;
  std::size_t off_q1() const;
  std::size_t off_q1b() const;
  std::size_t off_q2() const;
  std::size_t off_q2b() const;
};

// Trainable scalars, counting each complex spectral coefficient once.
std::size_t fno_param_count(const FnoParams& p);

// Kaiming-normal P/W/Q (std sqrt(2/fan_in)), zero biases, complex spectral
// weights with componentwise std 1/width. Draws come from the init substream.
FnoParams fno_init(int in_ch, const FnoConfig& cfg, std::uint64_t seed);

int fno_in_channels(const Geometry& g);

// Channel-major (in_ch, J) sample encoding: the mask followed by one
// coordinate channel per axis normalized to [0, 1].
std::vector<double> fno_featurize(const std::vector<std::uint8_t>& mask, const Geometry& g);

// x is channel-major (channels, batch, J); grid_dims lists nodes per axis, x
// first, J = prod(grid_dims). r holds one interleaved-complex channels^2
// matrix per retained mode. Truncated FFT -> per-mode matrix multiply ->
// inverse FFT; output is real with the same shape as x.
std::vector<double> spectral_conv(const std::vector<double>& x, int channels, std::size_t batch,
                                  const std::vector<int>& grid_dims, const std::vector<int>& modes,
                                  const std::vector<double>& r);

// Full network: lift -> `layers` spectral/local blocks (activation after every
// block) -> two-stage projection. Returns (batch, J) predictions.
std::vector<double> fno_forward(const FnoParams& p, const std::vector<double>& x,
                                std::size_t batch, const std::vector<int>& grid_dims);

// Mean over the batch of ||pred_b - target_b|| / ||target_b||.
double fno_loss(const std::vector<double>& pred, const std::vector<double>& target,
                std::size_t batch);

// Forward + reverse pass; fills `grads` (same layout as p) and returns the
// loss. Gradients are exact up to roundoff.
double fno_loss_and_grad(const FnoParams& p, const std::vector<double>& x,
                         const std::vector<double>& target, std::size_t batch,
                         const std::vector<int>& grid_dims, FnoParams* grads);

struct FnoHistoryRow {
  int epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double lr = 0.0;
};

struct FnoTrainResult {
  FnoParams params;  // best-test checkpoint (initialization when epochs == 0)
  std::vector<FnoHistoryRow> history;
  double best_test = 0.0;
};

// Adam over shuffled mini-batches; after each epoch the learning rate decays
// by plateau_factor (floored at min_lr) whenever the test loss failed to
// improve on the best seen, and improving epochs update the checkpoint.
FnoTrainResult fno_train(const Dataset& ds, const Split& split, const FnoConfig& cfg);

void save_fno(const FnoParams& p, const nlohmann::json& extra_meta, const std::string& path);
FnoParams load_fno(const std::string& path, nlohmann::json* meta_out = nullptr);

}  // namespace cardiograph
