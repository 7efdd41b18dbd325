#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "osqa/pipeline.hpp"
#include "osqa/rng.hpp"

namespace osqa {

struct PGConfig {
  int num_samples = 20;           // K
  int utterances_per_update = 10; // I
  double epsilon = 0.05;          // per-bin exploration probability
  double lambda = 0.05;           // mask-delta clip
  double step_size = 1e-6;
  std::uint64_t seed = 0;
  int updates = 100;
  // Hyperbolic step decay: update u runs at step_size / (1 + u / step_decay).
  // 0 disables the schedule and keeps the step constant.
  double step_decay = 0.0;
};

struct ScoredCandidate {
  MaskMatrix mask;
  Spectrogram output;
  double raw_score = std::numeric_limits<double>::quiet_NaN();  // Z
  double adv_score = std::numeric_limits<double>::quiet_NaN();  // B
};

// Black-box utterance score. The enhanced waveform is the istft of the
// enhanced spectrogram; reference signals come from the utterance.
using ScoreFn =
    std::function<double(const Spectrogram& enhanced, const Waveform& enhanced_wav,
                         const TrainUtterance& utt)>;

// Draws K candidate masks/outputs from the per-bin complex Gaussian posterior:
// sample, PSA re-projection, epsilon-greedy MAP substitution, delta clipping.
// Scores are left unset.
std::vector<ScoredCandidate> sample_output_candidates(const std::vector<MaskPosterior>& post,
                                                      const Spectrogram& X, const PGConfig& cfg,
                                                      Rng& rng);

// B_k = Z_k - mean(Z); the output sums to zero up to rounding.
std::vector<double> baseline_subtract(const std::vector<double>& raw_scores);

// Score-weighted log-likelihood gradient for one utterance (a gradient to
// ASCEND): sum_k (B_k / (K T)) sum_tau  d/dTheta ln p(S_hat^k_tau | X_tau).
// Candidate outputs are fixed labels; gradients flow only through the heads.
NetworkParams pg_utterance_grads(const std::vector<ScoredCandidate>& candidates,
                                 const std::vector<MaskPosterior>& post,
                                 const std::vector<ForwardCache>& caches, const Spectrogram& X,
                                 const MelFilterbank& fb, const NetworkParams& params,
                                 const TrainHyper& hyper);

struct UpdateLog {
  int update = 0;
  double map_score = 0.0;        // mean raw score of the MAP-mask output
  double cand_score = 0.0;       // mean raw score over all candidates
  double b_variance = 0.0;       // mean per-utterance variance of B
  double mse = 0.0;              // mean complex-plane MSE of MAP output vs clean
  double seconds = 0.0;
  double max_abs_b_sum = 0.0;    // max_i |sum_k B_k| over the batch
};

// One policy-gradient update over a batch of utterances. On scorer failure the
// exception propagates and parameters are left untouched.
UpdateLog pg_update_step(const std::vector<const TrainUtterance*>& batch, NetworkParams& params,
                         const MelFilterbank& fb, const TrainHyper& hyper, AdamState& adam,
                         const ScoreFn& scorer, const PGConfig& cfg, Rng& rng, int update_index);

}  // namespace osqa
