#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "osqa/dsp.hpp"
#include "osqa/rng.hpp"

namespace osqa {

struct Dense {
  std::vector<double> w;  // rows x cols, row-major
  std::vector<double> b;  // rows
  std::size_t rows = 0;
  std::size_t cols = 0;
};

// Fully connected network: ReLU hidden stack, sigmoid mask head and
// exponential variance head, both in the mel domain. Doubles as the container
// for gradients and Adam moments (same shapes throughout).
struct NetworkParams {
  std::vector<Dense> hidden;
  Dense mask_head;
  Dense var_head;

  std::size_t input_dim() const { return hidden.empty() ? mask_head.cols : hidden.front().cols; }
  std::size_t output_dim() const { return mask_head.rows; }
};

struct TrainHyper {
  double c_sigma = 1e-4;       // variance floor
  double dropout_in = 0.2;
  double dropout_hidden = 0.5;
  double l2 = 1e-4;
  double step_size = 1e-4;
};

struct MaskPosterior {
  std::vector<double> mask_mel;  // in (0, 1)
  std::vector<double> var_mel;   // >= c_sigma
  std::vector<double> mask_lin;  // clamped to [0, 1]
  std::vector<double> var_lin;   // lower-clamped at c_sigma
};

struct ForwardCache {
  std::vector<std::vector<double>> layer_inputs;  // post-dropout input to each hidden layer + heads
  std::vector<std::vector<double>> preacts;       // hidden pre-activations
  std::vector<std::vector<double>> dropmul;       // dropout multipliers on hidden outputs (empty if disabled)
  std::vector<double> mask_mel;
  std::vector<double> var_mel;
};

struct AdamState {
  NetworkParams m;
  NetworkParams v;
  std::uint64_t t = 0;
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct CheckpointMeta {
  int context = 5;      // Q
  int frame_len = 512;
  int hop = 256;
  int sample_rate = 16000;
  double c_sigma = 1e-4;
  std::string note;
};

NetworkParams init_params(std::size_t input_dim, const std::vector<std::size_t>& hidden_dims,
                          std::size_t output_dim, std::uint64_t seed);

NetworkParams zeros_like(const NetworkParams& p);

// Forward pass for one feature frame. Dropout (inverted scaling) is applied
// only when a generator is provided. The linear-domain views are derived via
// the filterbank pseudo-inverse with the contract clamps.
MaskPosterior forward(const NetworkParams& params, std::span<const double> x,
                      const TrainHyper& hyper, const MelFilterbank& fb,
                      Rng* dropout_rng = nullptr, ForwardCache* cache = nullptr);

// Reverse-mode gradients given head gradients w.r.t. mask_mel and var_mel.
// Adds the L2 term 2 * l2 * W on every weight matrix. Accumulates into grads.
void backward(const NetworkParams& params, const ForwardCache& cache,
              std::span<const double> d_mask_mel, std::span<const double> d_var_mel,
              const TrainHyper& hyper, NetworkParams& grads, double scale = 1.0);

// Chains linear-domain head gradients back to the mel heads through the
// pseudo-inverse; entries where the [0,1] / c_sigma clamps engaged get zero.
void head_grads_from_linear(const MelFilterbank& fb, const MaskPosterior& post, double c_sigma,
                            std::span<const double> d_mask_lin, std::span<const double> d_var_lin,
                            std::vector<double>& d_mask_mel, std::vector<double>& d_var_mel);

AdamState make_adam(const NetworkParams& params, double alpha);

void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state);

void axpy_params(NetworkParams& acc, const NetworkParams& g, double scale);

std::vector<std::uint8_t> save_checkpoint(const NetworkParams& params, const FeatureStats& stats,
                                          const CheckpointMeta& meta);

struct Checkpoint {
  NetworkParams params;
  FeatureStats stats;
  CheckpointMeta meta;
};

Checkpoint load_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint_file(const std::string& path, const NetworkParams& params,
                          const FeatureStats& stats, const CheckpointMeta& meta);
Checkpoint load_checkpoint_file(const std::string& path);

}  // namespace osqa
