#pragma once

#include <memory>
#include <string>

#include "osqa/data.hpp"

namespace osqa {

struct ScoreRequest {
  const Waveform* enhanced = nullptr;
  const Waveform* clean = nullptr;
  const Waveform* mixture = nullptr;
};

// Affine score normalization with clamping, e.g. the PESQ/STOI-style mappings
// onto [0, 100].
struct ScoreScale {
  double gain = 1.0;
  double offset = 0.0;
  double lo = 0.0;
  double hi = 100.0;
};

// Signal-to-distortion ratio in dB, capped at +60 for near-zero distortion.
double sdr_score(const ScoreRequest& req);

// Intelligibility proxy in [0, 1]: mean positive Pearson correlation between
// clean and enhanced mel-envelope segments (16 band groups, 30-frame segments
// with 50% hop). Not the published STOI.
double band_correlation_score(const ScoreRequest& req);

double scale_score(double z, const ScoreScale& scale);

double mix_scores(double z1, double z2, double gamma);

// Line-protocol client for out-of-process scorers (PESQ/STOI binaries behind a
// shim). Spawns `command` once; each call persists the three waveforms as WAV
// into a fresh temp directory, writes
//   SCORE <enhanced_path> <clean_path> <mixture_path>\n
// to the child's stdin and expects "OK <decimal>\n" or "ERR <message>\n".
// Serial per instance.
class ExternalScorer {
 public:
  explicit ExternalScorer(const std::string& command, double timeout_s = 30.0);
  ~ExternalScorer();
  ExternalScorer(const ExternalScorer&) = delete;
  ExternalScorer& operator=(const ExternalScorer&) = delete;

  double score(const ScoreRequest& req);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace osqa
