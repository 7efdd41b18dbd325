#include "osqa/pipeline.hpp"

#include <cmath>
#include <stdexcept>

namespace osqa {

TrainUtterance prepare_utterance(const Utterance& u, const MelFilterbank& fb, int frame_len,
                                 int hop, int context, const FeatureStats* stats) {
  TrainUtterance t;
  t.audio = u;
  t.X = stft(u.mixture, frame_len, hop);
  t.S = stft(u.clean, frame_len, hop);
  t.feats = make_features(t.X, fb, context, stats);
  return t;
}

FeatureStats compute_feature_stats(const std::vector<TrainUtterance>& utts) {
  if (utts.empty() || utts.front().feats.empty()) {
    throw std::invalid_argument("no frames for feature statistics");
  }
  const std::size_t dim = utts.front().feats.front().values.size();
  FeatureStats st;
  st.mean.assign(dim, 0.0);
  st.std.assign(dim, 0.0);
  std::size_t count = 0;
  for (const auto& u : utts) {
    for (const auto& f : u.feats) {
      for (std::size_t d = 0; d < dim; ++d) st.mean[d] += f.values[d];
      ++count;
    }
  }
  for (double& m : st.mean) m /= static_cast<double>(count);
  for (const auto& u : utts) {
    for (const auto& f : u.feats) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double dv = f.values[d] - st.mean[d];
        st.std[d] += dv * dv;
      }
    }
  }
  for (double& s : st.std) s = std::max(1e-8, std::sqrt(s / static_cast<double>(count)));
  return st;
}

void apply_feature_stats(std::vector<TrainUtterance>& utts, const FeatureStats& stats) {
  for (auto& u : utts) {
    for (auto& f : u.feats) {
      if (f.values.size() != stats.mean.size()) {
        throw std::invalid_argument("feature stats dimension mismatch");
      }
      for (std::size_t d = 0; d < f.values.size(); ++d) {
        f.values[d] = (f.values[d] - stats.mean[d]) / stats.std[d];
      }
    }
  }
}

MaskMatrix map_mask(const TrainUtterance& utt, const NetworkParams& params,
                    const TrainHyper& hyper, const MelFilterbank& fb) {
  MaskMatrix m;
  m.num_bins = utt.X.num_bins;
  m.num_frames = utt.X.num_frames;
  m.gains.resize(m.num_bins * m.num_frames);
  for (std::size_t t = 0; t < m.num_frames; ++t) {
    MaskPosterior post = forward(params, utt.feats[t].values, hyper, fb);
    for (std::size_t w = 0; w < m.num_bins; ++w) m.at(w, t) = post.mask_lin[w];
  }
  return m;
}

}  // namespace osqa
