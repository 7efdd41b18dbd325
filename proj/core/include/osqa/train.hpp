#pragma once

#include <iosfwd>

#include "osqa/policy.hpp"
#include "osqa/scorers.hpp"

namespace osqa {

enum class TrainMode { Ml, Mmse };

struct SupervisedConfig {
  TrainMode mode = TrainMode::Ml;
  int updates = 0;               // 0: run until early stopping
  double step_size = 1e-4;
  double step_threshold = 1e-7;  // stop when the halving schedule drops below this
  std::uint64_t seed = 0;
  bool dropout = true;
  int log_every = 10;
};

// Per-utterance full-batch supervised training (ML complex-Gaussian or
// PSA-MMSE objective). One update consumes one utterance; the step size is
// halved whenever an epoch fails to improve the mean loss. Writes CSV progress
// lines to `log` when given. Returns the number of updates performed.
int train_supervised(const std::vector<TrainUtterance>& utts, NetworkParams& params,
                     const MelFilterbank& fb, const TrainHyper& hyper,
                     const SupervisedConfig& cfg, std::ostream* log);

// Runs cfg.updates policy-gradient steps, cycling the utterance list in
// batches of cfg.utterances_per_update. Logs one CSV line per update.
std::vector<UpdateLog> train_policy_gradient(const std::vector<TrainUtterance>& utts,
                                             NetworkParams& params, const MelFilterbank& fb,
                                             const TrainHyper& hyper, const ScoreFn& scorer,
                                             const PGConfig& cfg, std::ostream* log);

// Production score adapter: synthesizes nothing itself, crops the references
// to the enhanced waveform's length and applies `raw` + optional scaling.
ScoreFn make_waveform_scorer(std::function<double(const ScoreRequest&)> raw);

}  // namespace osqa
