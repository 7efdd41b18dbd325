#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

namespace osqa {

struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;
};

// One-sided complex spectrogram. Storage is frame-major: bin (w, t) lives at
// bins[t * num_bins + w].
struct Spectrogram {
  std::vector<std::complex<double>> bins;
  std::size_t num_bins = 0;   // Omega = frame_len / 2 + 1
  std::size_t num_frames = 0; // T
  int frame_len = 0;
  int hop = 0;
  int sample_rate = 16000;

  std::complex<double>& at(std::size_t w, std::size_t t) { return bins[t * num_bins + w]; }
  const std::complex<double>& at(std::size_t w, std::size_t t) const { return bins[t * num_bins + w]; }
  const std::complex<double>* frame(std::size_t t) const { return bins.data() + t * num_bins; }
  std::complex<double>* frame(std::size_t t) { return bins.data() + t * num_bins; }
};

// Triangular mel filterbank (HTK scale) together with its ridge-regularized
// pseudo-inverse. forward is bands x bins row-major, inverse is bins x bands.
struct MelFilterbank {
  std::vector<double> forward;
  std::vector<double> inverse;
  std::size_t bands = 0;
  std::size_t bins = 0;
};

struct FeatureFrame {
  std::vector<double> values;  // length (2Q+1) * bands
  std::size_t frame_index = 0;
};

struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> std;  // entries floored at 1e-8
};

// STFT with a periodic square-root Hann analysis window. frame_len must be a
// power of two and hop must equal frame_len / 2.
Spectrogram stft(const Waveform& w, int frame_len, int hop);

// Weighted overlap-add synthesis with the matching square-root Hann window.
// Output length is (T - 1) * hop + frame_len.
Waveform istft(const Spectrogram& spec);

MelFilterbank make_mel_filterbank(std::size_t bands, int frame_len, int sample_rate);

std::vector<double> mel_project(const MelFilterbank& fb, const std::vector<double>& v);

std::vector<double> mel_reconstruct(const MelFilterbank& fb, const std::vector<double>& m,
                                    double clamp_lo, std::optional<double> clamp_hi);

std::vector<FeatureFrame> make_features(const Spectrogram& spec, const MelFilterbank& fb,
                                        int context, const FeatureStats* stats);

// In-place radix-2 FFT helpers, exposed for tests and scorers.
void fft(std::vector<std::complex<double>>& a, bool inverse);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

}  // namespace osqa
