#include "osqa/policy.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "osqa/likelihood.hpp"

namespace osqa {

std::vector<ScoredCandidate> sample_output_candidates(const std::vector<MaskPosterior>& post,
                                                      const Spectrogram& X, const PGConfig& cfg,
                                                      Rng& rng) {
  if (cfg.num_samples < 2) throw std::invalid_argument("need at least 2 samples for the baseline");
  if (post.size() != X.num_frames) throw std::invalid_argument("posterior/spectrogram mismatch");
  if (cfg.epsilon < 0.0 || cfg.epsilon > 1.0 || cfg.lambda < 0.0) {
    throw std::invalid_argument("invalid sampling config");
  }

  std::vector<ScoredCandidate> out(static_cast<std::size_t>(cfg.num_samples));
  for (auto& cand : out) {
    cand.mask.num_bins = X.num_bins;
    cand.mask.num_frames = X.num_frames;
    cand.mask.gains.resize(X.bins.size());
    cand.output = X;
  }
  // Candidates are drawn in antithetic pairs: the second member of each pair
  // reuses the first member's Gaussian noise with the sign flipped, and the
  // pair shares its exploration coin flips.  Each candidate's marginal
  // distribution is unchanged, but the paired construction cancels the
  // first-order term of the score-gradient estimator's sampling noise.
  auto fill_bin = [&](ScoredCandidate& cand, std::size_t w, std::size_t t,
                      std::complex<double> x, double g_map, double sd, double n_re, double n_im,
                      bool explore) {
    const std::complex<double> sampled(g_map * x.real() + sd * n_re,
                                       g_map * x.imag() + sd * n_im);
    double g = explore ? psa_gain(sampled, x) : g_map;
    double delta = g - g_map;
    if (delta > cfg.lambda) delta = cfg.lambda;
    if (delta < -cfg.lambda) delta = -cfg.lambda;
    g = g_map + delta;
    cand.mask.at(w, t) = g;
    cand.output.at(w, t) = g * x;
  };
  for (int k = 0; k < cfg.num_samples; k += 2) {
    ScoredCandidate& a = out[static_cast<std::size_t>(k)];
    ScoredCandidate* b = (k + 1 < cfg.num_samples) ? &out[static_cast<std::size_t>(k + 1)] : nullptr;
    for (std::size_t t = 0; t < X.num_frames; ++t) {
      const MaskPosterior& p = post[t];
      for (std::size_t w = 0; w < X.num_bins; ++w) {
        const std::complex<double> x = X.at(w, t);
        const double g_map = p.mask_lin[w];
        const double sd = std::sqrt(p.var_lin[w]);
        const double n_re = rng.normal();
        const double n_im = rng.normal();
        const bool explore = rng.uniform() < cfg.epsilon;
        fill_bin(a, w, t, x, g_map, sd, n_re, n_im, explore);
        if (b != nullptr) fill_bin(*b, w, t, x, g_map, sd, -n_re, -n_im, explore);
      }
    }
  }
  return out;
}

std::vector<double> baseline_subtract(const std::vector<double>& raw_scores) {
  if (raw_scores.size() < 2) throw std::invalid_argument("need at least 2 scores");
  // Average deviations from the first score rather than raw values: equal
  // scores then produce exactly zero advantages (a plain sum of K identical
  // doubles rounds, and any residual would be blown up to a full-size Adam
  // step), and a constant shift of all scores cannot perturb the result.
  const double anchor = raw_scores.front();
  double mean_dev = 0.0;
  for (double z : raw_scores) {
    if (std::isnan(z)) throw std::invalid_argument("NaN score");
    mean_dev += z - anchor;
  }
  mean_dev /= static_cast<double>(raw_scores.size());
  std::vector<double> out(raw_scores.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (raw_scores[i] - anchor) - mean_dev;
  return out;
}

NetworkParams pg_utterance_grads(const std::vector<ScoredCandidate>& candidates,
                                 const std::vector<MaskPosterior>& post,
                                 const std::vector<ForwardCache>& caches, const Spectrogram& X,
                                 const MelFilterbank& fb, const NetworkParams& params,
                                 const TrainHyper& hyper) {
  if (candidates.empty()) throw std::invalid_argument("no candidates");
  if (post.size() != X.num_frames || caches.size() != X.num_frames) {
    throw std::invalid_argument("posterior/cache/spectrogram mismatch");
  }
  for (const auto& c : candidates) {
    if (std::isnan(c.adv_score)) throw std::invalid_argument("candidate missing adv_score");
  }

  const std::size_t K = candidates.size();
  const std::size_t T = X.num_frames;
  const std::size_t omega = X.num_bins;

  NetworkParams grads = zeros_like(params);

  // The PG objective carries no weight decay; only the log-likelihood flows.
  TrainHyper h = hyper;
  h.l2 = 0.0;

  bool all_zero = true;
  for (const auto& c : candidates) {
    if (c.adv_score != 0.0) all_zero = false;
  }
  if (all_zero) return grads;

  std::vector<double> d_mask_lin(omega), d_var_lin(omega);
  std::vector<double> d_mask_mel, d_var_mel;
  std::vector<std::complex<double>> label(omega);
  for (std::size_t t = 0; t < T; ++t) {
    std::fill(d_mask_lin.begin(), d_mask_lin.end(), 0.0);
    std::fill(d_var_lin.begin(), d_var_lin.end(), 0.0);
    std::span<const std::complex<double>> xf(X.frame(t), omega);
    for (std::size_t k = 0; k < K; ++k) {
      const double weight = candidates[k].adv_score / static_cast<double>(K * T);
      if (weight == 0.0) continue;
      std::span<const std::complex<double>> lf(candidates[k].output.frame(t), omega);
      FrameLikelihoodGrad g = ml_loss_and_head_grads(lf, xf, post[t]);
      // ml_* returns gradients of -ln p; negate for the ascent direction.
      for (std::size_t w = 0; w < omega; ++w) {
        d_mask_lin[w] -= weight * g.d_mask_lin[w];
        d_var_lin[w] -= weight * g.d_var_lin[w];
      }
    }
    head_grads_from_linear(fb, post[t], h.c_sigma, d_mask_lin, d_var_lin, d_mask_mel, d_var_mel);
    backward(params, caches[t], d_mask_mel, d_var_mel, h, grads, 1.0);
  }
  return grads;
}

UpdateLog pg_update_step(const std::vector<const TrainUtterance*>& batch, NetworkParams& params,
                         const MelFilterbank& fb, const TrainHyper& hyper, AdamState& adam,
                         const ScoreFn& scorer, const PGConfig& cfg, Rng& rng, int update_index) {
  if (batch.empty()) throw std::invalid_argument("empty utterance batch");
  const auto t0 = std::chrono::steady_clock::now();

  UpdateLog log;
  log.update = update_index;

  NetworkParams total = zeros_like(params);
  const double inv_i = 1.0 / static_cast<double>(batch.size());

  for (const TrainUtterance* utt : batch) {
    const std::size_t T = utt->X.num_frames;
    std::vector<MaskPosterior> post(T);
    std::vector<ForwardCache> caches(T);
    for (std::size_t t = 0; t < T; ++t) {
      post[t] = forward(params, utt->feats[t].values, hyper, fb, nullptr, &caches[t]);
    }

    // MAP-mask output, for logging and the score baseline curves.
    Spectrogram map_spec = utt->X;
    double mse = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t w = 0; w < utt->X.num_bins; ++w) {
        map_spec.at(w, t) = post[t].mask_lin[w] * utt->X.at(w, t);
        mse += std::norm(utt->S.at(w, t) - map_spec.at(w, t));
      }
    }
    mse /= static_cast<double>(T * utt->X.num_bins);
    log.mse += inv_i * mse;
    Waveform map_wav = istft(map_spec);
    log.map_score += inv_i * scorer(map_spec, map_wav, *utt);

    std::vector<ScoredCandidate> cands = sample_output_candidates(post, utt->X, cfg, rng);
    std::vector<double> raw(cands.size());
    for (std::size_t k = 0; k < cands.size(); ++k) {
      Waveform wav = istft(cands[k].output);
      raw[k] = scorer(cands[k].output, wav, *utt);
      cands[k].raw_score = raw[k];
      log.cand_score += inv_i * raw[k] / static_cast<double>(cands.size());
    }
    std::vector<double> adv = baseline_subtract(raw);
    double b_sum = 0.0, b_var = 0.0;
    for (std::size_t k = 0; k < adv.size(); ++k) {
      cands[k].adv_score = adv[k];
      b_sum += adv[k];
      b_var += adv[k] * adv[k];
    }
    log.max_abs_b_sum = std::max(log.max_abs_b_sum, std::abs(b_sum));
    log.b_variance += inv_i * b_var / static_cast<double>(adv.size());

    NetworkParams g = pg_utterance_grads(cands, post, caches, utt->X, fb, params, hyper);
    axpy_params(total, g, inv_i);
  }

  // Ascend: hand the negated gradient to the Adam minimizer.
  NetworkParams neg = zeros_like(params);
  axpy_params(neg, total, -1.0);
  adam_step(params, neg, adam);

  log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return log;
}

}  // namespace osqa
