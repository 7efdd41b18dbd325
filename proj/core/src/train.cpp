#include "osqa/train.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "osqa/likelihood.hpp"

namespace osqa {

int train_supervised(const std::vector<TrainUtterance>& utts, NetworkParams& params,
                     const MelFilterbank& fb, const TrainHyper& hyper,
                     const SupervisedConfig& cfg, std::ostream* log) {
  if (utts.empty()) throw std::invalid_argument("no training utterances");

  Rng dropout_rng(cfg.seed);
  AdamState adam = make_adam(params, cfg.step_size);
  double step = cfg.step_size;
  double best_epoch_loss = std::numeric_limits<double>::infinity();
  double epoch_loss = 0.0;
  std::size_t epoch_pos = 0;
  int update = 0;

  if (log) *log << "update,loss,step_size\n";

  while (true) {
    if (cfg.updates > 0 && update >= cfg.updates) break;
    if (step < cfg.step_threshold) {
      if (log) *log << "# early stop: step size " << step << " below threshold\n";
      break;
    }

    const TrainUtterance& utt = utts[epoch_pos];
    const std::size_t T = utt.X.num_frames;
    NetworkParams grads = zeros_like(params);
    double loss = 0.0;
    ForwardCache cache;
    std::vector<double> d_mask_mel, d_var_mel;
    for (std::size_t t = 0; t < T; ++t) {
      MaskPosterior post = forward(params, utt.feats[t].values, hyper, fb,
                                   cfg.dropout ? &dropout_rng : nullptr, &cache);
      std::span<const std::complex<double>> sf(utt.S.frame(t), utt.S.num_bins);
      std::span<const std::complex<double>> xf(utt.X.frame(t), utt.X.num_bins);
      FrameLikelihoodGrad g = cfg.mode == TrainMode::Ml
                                  ? ml_loss_and_head_grads(sf, xf, post)
                                  : psa_mmse_loss_and_head_grads(sf, xf, post);
      loss += g.loss / static_cast<double>(T);
      head_grads_from_linear(fb, post, hyper.c_sigma, g.d_mask_lin, g.d_var_lin, d_mask_mel,
                             d_var_mel);
      backward(params, cache, d_mask_mel, d_var_mel, hyper, grads, 1.0 / static_cast<double>(T));
    }
    adam.alpha = step;
    adam_step(params, grads, adam);

    ++update;
    epoch_loss += loss;
    if (log && (update % cfg.log_every == 0 || update == 1)) {
      *log << update << "," << loss << "," << step << "\n";
    }

    if (++epoch_pos == utts.size()) {
      epoch_pos = 0;
      epoch_loss /= static_cast<double>(utts.size());
      if (epoch_loss >= best_epoch_loss) {
        step *= 0.5;
        if (log) *log << "# step halved to " << step << " after epoch loss " << epoch_loss << "\n";
      } else {
        best_epoch_loss = epoch_loss;
      }
      epoch_loss = 0.0;
    }
  }
  return update;
}

std::vector<UpdateLog> train_policy_gradient(const std::vector<TrainUtterance>& utts,
                                             NetworkParams& params, const MelFilterbank& fb,
                                             const TrainHyper& hyper, const ScoreFn& scorer,
                                             const PGConfig& cfg, std::ostream* log) {
  if (utts.empty()) throw std::invalid_argument("no training utterances");
  Rng rng(cfg.seed);
  AdamState adam = make_adam(params, cfg.step_size);
  std::vector<UpdateLog> logs;
  logs.reserve(static_cast<std::size_t>(cfg.updates));

  if (log) *log << "update,map_score,cand_score,b_variance,mse,seconds\n";

  std::size_t pos = 0;
  for (int u = 0; u < cfg.updates; ++u) {
    std::vector<const TrainUtterance*> batch;
    for (int i = 0; i < cfg.utterances_per_update; ++i) {
      batch.push_back(&utts[pos]);
      pos = (pos + 1) % utts.size();
    }
    if (cfg.step_decay > 0.0) adam.alpha = cfg.step_size / (1.0 + u / cfg.step_decay);
    UpdateLog rec = pg_update_step(batch, params, fb, hyper, adam, scorer, cfg, rng, u);
    if (log) {
      *log << rec.update << "," << rec.map_score << "," << rec.cand_score << ","
           << rec.b_variance << "," << rec.mse << "," << rec.seconds << "\n";
    }
    logs.push_back(rec);
  }
  return logs;
}

ScoreFn make_waveform_scorer(std::function<double(const ScoreRequest&)> raw) {
  return [raw = std::move(raw)](const Spectrogram&, const Waveform& enhanced,
                                const TrainUtterance& utt) {
    // The synthesized candidate can be shorter than the source audio; crop the
    // references so intrusive measures line up sample-for-sample.
    Waveform clean = utt.audio.clean;
    Waveform mixture = utt.audio.mixture;
    const std::size_t n = std::min(enhanced.samples.size(), clean.samples.size());
    Waveform enh = enhanced;
    enh.samples.resize(n);
    clean.samples.resize(n);
    mixture.samples.resize(n);
    ScoreRequest req{&enh, &clean, &mixture};
    return raw(req);
  };
}

}  // namespace osqa
