#include "osqa/masks.hpp"

#include <cmath>
#include <stdexcept>

namespace osqa {

namespace {
void check_shapes(std::size_t bins_a, std::size_t frames_a, std::size_t bins_b, std::size_t frames_b) {
  if (bins_a != bins_b || frames_a != frames_b) throw std::invalid_argument("shape mismatch");
}
}  // namespace

MaskMatrix compute_irm(const Spectrogram& S, const Spectrogram& N) {
  check_shapes(S.num_bins, S.num_frames, N.num_bins, N.num_frames);
  MaskMatrix G;
  G.num_bins = S.num_bins;
  G.num_frames = S.num_frames;
  G.gains.resize(S.bins.size());
  for (std::size_t i = 0; i < S.bins.size(); ++i) {
    double s = std::abs(S.bins[i]);
    double n = std::abs(N.bins[i]);
    G.gains[i] = (s + n > 0.0) ? s / (s + n) : 0.0;
  }
  return G;
}

double psa_gain(std::complex<double> s, std::complex<double> x) {
  double px = std::norm(x);
  if (px == 0.0) return 0.0;
  // |S|/|X| * cos(theta_S - theta_X) == Re(S conj(X)) / |X|^2
  double g = (s.real() * x.real() + s.imag() * x.imag()) / px;
  if (g < 0.0) g = 0.0;
  if (g > 1.0) g = 1.0;
  return g;
}

MaskMatrix compute_psa(const Spectrogram& S, const Spectrogram& X) {
  check_shapes(S.num_bins, S.num_frames, X.num_bins, X.num_frames);
  MaskMatrix G;
  G.num_bins = S.num_bins;
  G.num_frames = S.num_frames;
  G.gains.resize(S.bins.size());
  for (std::size_t i = 0; i < S.bins.size(); ++i) G.gains[i] = psa_gain(S.bins[i], X.bins[i]);
  return G;
}

Spectrogram apply_mask(const MaskMatrix& G, const Spectrogram& X) {
  check_shapes(G.num_bins, G.num_frames, X.num_bins, X.num_frames);
  Spectrogram out = X;
  for (std::size_t i = 0; i < out.bins.size(); ++i) out.bins[i] *= G.gains[i];
  return out;
}

MaskMatrix postprocess_mask(const MaskMatrix& G, const PostProcessConfig& cfg) {
  if (cfg.g_min < 0.0 || cfg.g_min > 1.0 || cfg.beta < 0.0 || cfg.beta > 1.0) {
    throw std::invalid_argument("invalid post-process config");
  }
  MaskMatrix out = G;
  for (double& g : out.gains) g = std::max(cfg.g_min, g);
  for (std::size_t t = 1; t < out.num_frames; ++t) {
    for (std::size_t w = 0; w < out.num_bins; ++w) {
      out.at(w, t) = cfg.beta * out.at(w, t) + (1.0 - cfg.beta) * out.at(w, t - 1);
    }
  }
  return out;
}

}  // namespace osqa
