#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "osqa/dsp.hpp"

namespace osqa {

struct Utterance {
  Waveform clean;    // S
  Waveform noise;    // scaled N
  Waveform mixture;  // X = S + scaled N
  double snr_db = 0.0;
  std::string id;
};

struct ManifestEntry {
  std::string id;
  std::string clean_path;
  std::string noise_path;
  double snr_db = 0.0;
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;
  int sample_rate = 16000;
};

// 16-bit PCM mono RIFF/WAVE only; no silent resampling. expected_rate == 0
// accepts any rate.
Waveform load_wav(const std::string& path, int expected_rate = 0);
void save_wav(const std::string& path, const Waveform& w);

// Scales the noise to the requested SNR, mixes in the time domain, and jointly
// peak-normalizes the triple by 1 / max(1, peak).
Utterance mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db);

// Deterministic speech-like tone complex (3 harmonics, raised-cosine AM) and
// lowpass-filtered Gaussian noise.
std::pair<Waveform, Waveform> synth_utterance(std::uint64_t seed, double duration_s,
                                              int sample_rate);

CorpusManifest load_manifest(const std::string& path);

CorpusManifest generate_corpus(int n, std::uint64_t seed, const std::vector<double>& snrs,
                               const std::string& out_dir, double duration_s = 2.0,
                               int sample_rate = 16000);

// Resolves a manifest entry into waveforms and the SNR-controlled mixture.
Utterance load_utterance(const ManifestEntry& e, int sample_rate);

std::string manifest_path_for(const std::string& out_dir);

}  // namespace osqa
