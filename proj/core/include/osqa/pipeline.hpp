#pragma once

#include <vector>

#include "osqa/data.hpp"
#include "osqa/masks.hpp"
#include "osqa/nn.hpp"

namespace osqa {

// One utterance lifted into the training domain: spectrograms of mixture and
// clean target plus the network input features.
struct TrainUtterance {
  Utterance audio;
  Spectrogram X;  // mixture
  Spectrogram S;  // clean
  std::vector<FeatureFrame> feats;
};

TrainUtterance prepare_utterance(const Utterance& u, const MelFilterbank& fb, int frame_len,
                                 int hop, int context, const FeatureStats* stats);

// Per-dimension mean/std over all frames of all utterances; std floored at 1e-8.
FeatureStats compute_feature_stats(const std::vector<TrainUtterance>& utts);

void apply_feature_stats(std::vector<TrainUtterance>& utts, const FeatureStats& stats);

// MAP-mask inference for one utterance: forward every frame without dropout
// and collect the linear-domain mask.
MaskMatrix map_mask(const TrainUtterance& utt, const NetworkParams& params,
                    const TrainHyper& hyper, const MelFilterbank& fb);

}  // namespace osqa
