// Command-line front end: corpus synthesis, ML/MMSE/PG training, enhancement,
// and evaluation. Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "osqa/masks.hpp"
#include "osqa/pipeline.hpp"
#include "osqa/scorers.hpp"
#include "osqa/train.hpp"

namespace fs = std::filesystem;
using namespace osqa;

namespace {

struct ScorerSpec {
  std::string name;                            // sdr | bandcorr | mix | ext:<cmd>
  std::shared_ptr<ExternalScorer> ext;         // lazily created for ext:
  double timeout_s = 30.0;

  double operator()(const ScoreRequest& req) {
    if (name == "sdr") {
      return scale_score(sdr_score(req), ScoreScale{2.5, 25.0, 0.0, 100.0});
    }
    if (name == "bandcorr") {
      return scale_score(band_correlation_score(req), ScoreScale{100.0, 0.0, 0.0, 100.0});
    }
    if (name == "mix") {
      double z1 = scale_score(sdr_score(req), ScoreScale{2.5, 25.0, 0.0, 100.0});
      double z2 = scale_score(band_correlation_score(req), ScoreScale{100.0, 0.0, 0.0, 100.0});
      return mix_scores(z1, z2, 0.5);
    }
    if (name.rfind("ext:", 0) == 0 || name.rfind("cmd:", 0) == 0) {
      if (!ext) ext = std::make_shared<ExternalScorer>(name.substr(4), timeout_s);
      return ext->score(req);
    }
    throw std::runtime_error("unknown scorer: " + name);
  }
};

std::vector<TrainUtterance> load_prepared(const CorpusManifest& m, const MelFilterbank& fb,
                                          int frame_len, int hop, int context,
                                          const FeatureStats* stats) {
  std::vector<TrainUtterance> out;
  out.reserve(m.entries.size());
  for (const auto& e : m.entries) {
    out.push_back(prepare_utterance(load_utterance(e, m.sample_rate), fb, frame_len, hop,
                                    context, stats));
  }
  return out;
}

int cmd_synth(int n, const std::string& out_dir, std::uint64_t seed,
              const std::vector<double>& snrs, double duration, int rate) {
  generate_corpus(n, seed, snrs, out_dir, duration, rate);
  std::cout << manifest_path_for(out_dir) << "\n";
  return 0;
}

int cmd_train(const std::string& mode, const std::string& manifest_path,
              const std::string& out_ckpt, const std::string& init_ckpt,
              const std::string& scorer_name, int updates, double step, int K, int I,
              double epsilon, double lambda, double step_decay, std::uint64_t seed,
              const std::vector<std::size_t>& hidden, int bands, int context, int frame_len,
              bool pg_dropout, const std::string& log_path, int log_every, double ext_timeout) {
  if (mode != "ml" && mode != "mmse" && mode != "pg") {
    std::cerr << "unknown training mode: " << mode << "\n";
    return 2;
  }
  if (mode == "pg" && init_ckpt.empty()) {
    std::cerr << "pg mode requires an ML checkpoint (--init)\n";
    return 2;
  }

  std::ofstream log_file;
  std::ostream* log = &std::cout;
  if (!log_path.empty()) {
    log_file.open(log_path);
    if (!log_file) throw std::runtime_error("cannot open log file: " + log_path);
    log = &log_file;
  }
  *log << "# mode=" << mode << " manifest=" << manifest_path << " out=" << out_ckpt
       << " init=" << init_ckpt << " scorer=" << scorer_name << " updates=" << updates
       << " step=" << step << " K=" << K << " I=" << I << " epsilon=" << epsilon
       << " lambda=" << lambda << " seed=" << seed << " bands=" << bands
       << " context=" << context << " frame_len=" << frame_len << "\n";

  CorpusManifest manifest = load_manifest(manifest_path);
  const int hop = frame_len / 2;

  TrainHyper hyper;
  CheckpointMeta meta;
  meta.context = context;
  meta.frame_len = frame_len;
  meta.hop = hop;
  meta.sample_rate = manifest.sample_rate;
  meta.c_sigma = hyper.c_sigma;

  if (mode == "ml" || mode == "mmse") {
    MelFilterbank fb = make_mel_filterbank(static_cast<std::size_t>(bands), frame_len,
                                           manifest.sample_rate);
    auto utts = load_prepared(manifest, fb, frame_len, hop, context, nullptr);
    FeatureStats stats = compute_feature_stats(utts);
    apply_feature_stats(utts, stats);

    const std::size_t input_dim = (2 * static_cast<std::size_t>(context) + 1) * fb.bands;
    NetworkParams params = init_params(input_dim, hidden, fb.bands, seed);

    SupervisedConfig cfg;
    cfg.mode = mode == "ml" ? TrainMode::Ml : TrainMode::Mmse;
    cfg.updates = updates;
    cfg.step_size = step > 0 ? step : 1e-4;
    cfg.seed = seed;
    cfg.log_every = log_every;
    train_supervised(utts, params, fb, hyper, cfg, log);

    meta.note = mode + "-trained";
    save_checkpoint_file(out_ckpt, params, stats, meta);
    return 0;
  }

  if (mode == "pg") {
    Checkpoint ck = load_checkpoint_file(init_ckpt);
    hyper.c_sigma = ck.meta.c_sigma;
    if (ck.meta.sample_rate != manifest.sample_rate) {
      throw std::runtime_error("checkpoint/manifest sample rate mismatch");
    }
    MelFilterbank fb = make_mel_filterbank(ck.params.output_dim(), ck.meta.frame_len,
                                           ck.meta.sample_rate);
    // Feature normalization stays frozen at the checkpoint's statistics.
    auto utts = load_prepared(manifest, fb, ck.meta.frame_len, ck.meta.hop, ck.meta.context,
                              &ck.stats);

    ScorerSpec raw{scorer_name, nullptr, ext_timeout};
    ScoreFn scorer = make_waveform_scorer([raw](const ScoreRequest& req) mutable {
      return raw(req);
    });

    PGConfig cfg;
    cfg.num_samples = K;
    cfg.utterances_per_update = I;
    cfg.epsilon = epsilon;
    cfg.lambda = lambda;
    cfg.step_size = step > 0 ? step : 1e-6;
    cfg.step_decay = step_decay;
    cfg.seed = seed;
    cfg.updates = updates > 0 ? updates : 100;

    TrainHyper pg_hyper = hyper;
    if (!pg_dropout) {
      pg_hyper.dropout_in = 0.0;
      pg_hyper.dropout_hidden = 0.0;
    }
    train_policy_gradient(utts, ck.params, fb, pg_hyper, scorer, cfg, log);

    CheckpointMeta out_meta = ck.meta;
    out_meta.note = "pg-trained scorer=" + scorer_name;
    save_checkpoint_file(out_ckpt, ck.params, ck.stats, out_meta);
    return 0;
  }
  return 2;  // unreachable: the mode was validated above
}

Waveform enhance_one(const Waveform& in, const Checkpoint& ck, const MelFilterbank& fb,
                     const TrainHyper& hyper, bool postprocess, const PostProcessConfig& pp,
                     bool identity_mask) {
  Spectrogram X = stft(in, ck.meta.frame_len, ck.meta.hop);
  MaskMatrix mask;
  mask.num_bins = X.num_bins;
  mask.num_frames = X.num_frames;
  mask.gains.assign(X.bins.size(), 1.0);
  if (!identity_mask) {
    auto feats = make_features(X, fb, ck.meta.context, &ck.stats);
    for (std::size_t t = 0; t < X.num_frames; ++t) {
      MaskPosterior post = forward(ck.params, feats[t].values, hyper, fb);
      for (std::size_t w = 0; w < X.num_bins; ++w) mask.at(w, t) = post.mask_lin[w];
    }
    if (postprocess) mask = postprocess_mask(mask, pp);
  }
  Waveform out = istft(apply_mask(mask, X));
  out.samples.resize(in.samples.size(), 0.0);  // keep the input's length
  return out;
}

int cmd_enhance(const std::string& ckpt_path, const std::vector<std::string>& inputs,
                const std::string& out_dir, bool no_postprocess, double g_min, double beta,
                bool identity_mask) {
  Checkpoint ck = load_checkpoint_file(ckpt_path);
  TrainHyper hyper;
  hyper.c_sigma = ck.meta.c_sigma;
  MelFilterbank fb = make_mel_filterbank(ck.params.output_dim(), ck.meta.frame_len,
                                         ck.meta.sample_rate);
  PostProcessConfig pp{g_min, beta};
  fs::create_directories(out_dir);

  int failures = 0;
  for (const std::string& path : inputs) {
    try {
      Waveform in = load_wav(path, ck.meta.sample_rate);
      Waveform out = enhance_one(in, ck, fb, hyper, !no_postprocess, pp, identity_mask);
      fs::path dst = fs::path(out_dir) / (fs::path(path).stem().string() + "_enhanced.wav");
      save_wav(dst.string(), out);
      std::cout << dst.string() << "\n";
    } catch (const std::exception& e) {
      std::cerr << path << ": " << e.what() << "\n";
      ++failures;
    }
  }
  return failures ? 1 : 0;
}

// Scores compare signals only over the overlap-add interior, where the
// analysis/synthesis chain is exactly invertible; this keeps an identity mask
// a true no-op in the metrics.
Waveform crop_interior(const Waveform& w, int frame_len, int hop) {
  const std::size_t n = w.samples.size();
  if (n < static_cast<std::size_t>(3 * frame_len)) {
    throw std::runtime_error("utterance too short to evaluate");
  }
  const std::size_t synth = (n - frame_len) / hop * hop + frame_len;
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.assign(w.samples.begin() + frame_len, w.samples.begin() + (synth - frame_len));
  return out;
}

int cmd_evaluate(const std::string& ckpt_path, const std::string& manifest_path,
                 const std::string& out_csv, const std::string& ext_spec, bool identity_mask,
                 bool no_postprocess, double ext_timeout) {
  Checkpoint ck = load_checkpoint_file(ckpt_path);
  TrainHyper hyper;
  hyper.c_sigma = ck.meta.c_sigma;
  MelFilterbank fb = make_mel_filterbank(ck.params.output_dim(), ck.meta.frame_len,
                                         ck.meta.sample_rate);
  CorpusManifest manifest = load_manifest(manifest_path);
  PostProcessConfig pp;

  std::unique_ptr<ExternalScorer> ext;
  if (!ext_spec.empty()) ext = std::make_unique<ExternalScorer>(ext_spec, ext_timeout);

  std::ofstream csv(out_csv);
  if (!csv) throw std::runtime_error("cannot open output CSV: " + out_csv);
  csv << "id,snr_db,sdr_obs,sdr_enh,bandcorr_obs,bandcorr_enh";
  if (ext) csv << ",ext_obs,ext_enh";
  csv << "\n";

  struct Acc {
    std::vector<double> sums;
    int n = 0;
  };
  std::map<double, Acc> by_snr;

  for (const auto& e : manifest.entries) {
    Utterance u = load_utterance(e, manifest.sample_rate);
    Waveform enh_full = enhance_one(u.mixture, ck, fb, hyper, !no_postprocess, pp, identity_mask);

    Waveform clean = crop_interior(u.clean, ck.meta.frame_len, ck.meta.hop);
    Waveform mix = crop_interior(u.mixture, ck.meta.frame_len, ck.meta.hop);
    Waveform enh = crop_interior(enh_full, ck.meta.frame_len, ck.meta.hop);
    ScoreRequest obs_req{&mix, &clean, &mix};
    ScoreRequest enh_req{&enh, &clean, &mix};
    std::vector<double> row{sdr_score(obs_req), sdr_score(enh_req),
                            band_correlation_score(obs_req), band_correlation_score(enh_req)};
    if (ext) {
      row.push_back(ext->score(obs_req));
      row.push_back(ext->score(enh_req));
    }

    csv << e.id << "," << e.snr_db;
    for (double v : row) csv << "," << v;
    csv << "\n";

    Acc& acc = by_snr[e.snr_db];
    if (acc.sums.empty()) acc.sums.assign(row.size(), 0.0);
    for (std::size_t i = 0; i < row.size(); ++i) acc.sums[i] += row[i];
    acc.n += 1;
  }

  for (const auto& [snr, acc] : by_snr) {
    csv << "mean," << snr;
    for (double s : acc.sums) csv << "," << s / acc.n;
    csv << "\n";
  }
  std::cout << out_csv << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"T-F mask speech enhancement trained to raise black-box quality scores"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a deterministic synthetic corpus");
  synth->set_config("--config");
  int s_n = 8;
  std::string s_out;
  std::uint64_t s_seed = 0;
  std::vector<double> s_snrs{-6.0, 0.0, 6.0, 12.0};
  double s_dur = 2.0;
  int s_rate = 16000;
  synth->add_option("--n", s_n, "number of utterances");
  synth->add_option("--out", s_out, "output directory")->required();
  synth->add_option("--seed", s_seed, "rng seed");
  synth->add_option("--snrs", s_snrs, "SNR grid in dB");
  synth->add_option("--duration", s_dur, "utterance duration in seconds");
  synth->add_option("--rate", s_rate, "sample rate in Hz");

  // train
  auto* train = app.add_subcommand("train", "Train a mask-estimation network");
  train->set_config("--config");
  std::string t_mode, t_manifest, t_out, t_init, t_scorer = "sdr", t_log;
  int t_updates = 0, t_K = 20, t_I = 10, t_log_every = 10;
  double t_step = 0.0, t_eps = 0.05, t_lambda = 0.05, t_decay = 0.0, t_timeout = 30.0;
  std::uint64_t t_seed = 0;
  std::vector<std::size_t> t_hidden{1024, 1024, 1024};
  int t_bands = 64, t_context = 5, t_frame = 512;
  bool t_pg_dropout = false;
  train->add_option("--mode", t_mode, "ml | mmse | pg")->required();
  train->add_option("--manifest", t_manifest, "training manifest")->required();
  train->add_option("--out", t_out, "output checkpoint")->required();
  train->add_option("--init", t_init, "initial checkpoint (required for pg)");
  train->add_option("--scorer", t_scorer, "sdr | bandcorr | mix | ext:<command>");
  train->add_option("--updates", t_updates, "update count (0: early stopping)");
  train->add_option("--step", t_step, "step size (default 1e-4 ml/mmse, 1e-6 pg)");
  train->add_option("--K", t_K, "mask samples per utterance");
  train->add_option("--I", t_I, "utterances per update");
  train->add_option("--epsilon", t_eps, "per-bin exploration probability");
  train->add_option("--lambda", t_lambda, "mask-delta clipping bound");
  train->add_option("--step-decay", t_decay,
                    "pg step decay constant: step / (1 + u / decay), 0 = constant step");
  train->add_option("--seed", t_seed, "rng seed");
  train->add_option("--hidden", t_hidden, "hidden layer sizes");
  train->add_option("--bands", t_bands, "mel bands");
  train->add_option("--context", t_context, "context window Q");
  train->add_option("--frame-len", t_frame, "FFT length");
  train->add_flag("--pg-dropout", t_pg_dropout, "keep dropout active during pg training");
  train->add_option("--log", t_log, "CSV log path (default stdout)");
  train->add_option("--log-every", t_log_every, "validation line cadence");
  train->add_option("--scorer-timeout", t_timeout, "external scorer timeout (s)");

  // enhance
  auto* enh = app.add_subcommand("enhance", "Enhance WAV files with a trained checkpoint");
  enh->set_config("--config");
  std::string e_ckpt, e_out = ".";
  std::vector<std::string> e_inputs;
  bool e_nopp = false, e_identity = false;
  double e_gmin = 0.158, e_beta = 0.3;
  enh->add_option("--ckpt", e_ckpt, "checkpoint path")->required();
  enh->add_option("--out-dir", e_out, "output directory");
  enh->add_option("inputs", e_inputs, "input WAV files")->required();
  enh->add_flag("--no-postprocess", e_nopp, "skip mask flooring and smoothing");
  enh->add_option("--gmin", e_gmin, "mask floor");
  enh->add_option("--beta", e_beta, "smoothing coefficient");
  enh->add_flag("--identity-mask", e_identity, "debug: force mask of ones");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score a checkpoint over a manifest");
  eval->set_config("--config");
  std::string v_ckpt, v_manifest, v_out = "eval.csv", v_ext;
  bool v_identity = false, v_nopp = false;
  double v_timeout = 30.0;
  eval->add_option("--ckpt", v_ckpt, "checkpoint path")->required();
  eval->add_option("--manifest", v_manifest, "evaluation manifest")->required();
  eval->add_option("--out", v_out, "output CSV path");
  eval->add_option("--scorer-ext", v_ext, "external scorer command (cmd:...)");
  eval->add_flag("--identity-mask", v_identity, "debug: force mask of ones");
  eval->add_flag("--no-postprocess", v_nopp, "skip mask flooring and smoothing");
  eval->add_option("--scorer-timeout", v_timeout, "external scorer timeout (s)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(s_n, s_out, s_seed, s_snrs, s_dur, s_rate);
    if (train->parsed()) {
      return cmd_train(t_mode, t_manifest, t_out, t_init, t_scorer, t_updates, t_step, t_K, t_I,
                       t_eps, t_lambda, t_decay, t_seed, t_hidden, t_bands, t_context, t_frame,
                       t_pg_dropout, t_log, t_log_every, t_timeout);
    }
    if (enh->parsed()) {
      return cmd_enhance(e_ckpt, e_inputs, e_out, e_nopp, e_gmin, e_beta, e_identity);
    }
    if (eval->parsed()) {
      std::string ext = v_ext;
      if (ext.rfind("cmd:", 0) == 0 || ext.rfind("ext:", 0) == 0) ext = ext.substr(4);
      return cmd_evaluate(v_ckpt, v_manifest, v_out, ext, v_identity, v_nopp, v_timeout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
