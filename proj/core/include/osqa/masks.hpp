#pragma once

#include "osqa/dsp.hpp"

namespace osqa {

// Real T-F mask with every gain in [0, 1]. Same frame-major layout as
// Spectrogram: gains[t * num_bins + w].
struct MaskMatrix {
  std::vector<double> gains;
  std::size_t num_bins = 0;
  std::size_t num_frames = 0;

  double& at(std::size_t w, std::size_t t) { return gains[t * num_bins + w]; }
  double at(std::size_t w, std::size_t t) const { return gains[t * num_bins + w]; }
};

struct PostProcessConfig {
  double g_min = 0.158;  // -16 dB
  double beta = 0.3;
};

// Ideal ratio mask |S| / (|S| + |N|); bins where both magnitudes vanish map to 0.
MaskMatrix compute_irm(const Spectrogram& S, const Spectrogram& N);

// Phase sensitive spectrum approximation, clamped to [0, 1]; |X| = 0 bins map to 0.
MaskMatrix compute_psa(const Spectrogram& S, const Spectrogram& X);

// Per-bin PSA gain for a single complex pair.
double psa_gain(std::complex<double> s, std::complex<double> x);

Spectrogram apply_mask(const MaskMatrix& G, const Spectrogram& X);

// Flooring followed by causal first-order smoothing; the first frame is
// floored but passes through unsmoothed.
MaskMatrix postprocess_mask(const MaskMatrix& G, const PostProcessConfig& cfg);

}  // namespace osqa
