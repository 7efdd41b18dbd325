#include <benchmark/benchmark.h>

#include <vector>

#include "osqa/dsp.hpp"
#include "osqa/nn.hpp"
#include "osqa/policy.hpp"
#include "osqa/rng.hpp"

using namespace osqa;

namespace {

Waveform random_wave(std::size_t n, std::uint64_t seed) {
  Waveform w;
  w.samples.resize(n);
  Rng rng(seed);
  for (auto& s : w.samples) s = rng.uniform(-0.5, 0.5);
  return w;
}

}  // namespace

static void BM_Stft(benchmark::State& state) {
  Waveform w = random_wave(32000, 1);  // two seconds at 16 kHz
  for (auto _ : state) {
    benchmark::DoNotOptimize(stft(w, 512, 256));
  }
}
BENCHMARK(BM_Stft);

static void BM_StftRoundTrip(benchmark::State& state) {
  Waveform w = random_wave(32000, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(istft(stft(w, 512, 256)));
  }
}
BENCHMARK(BM_StftRoundTrip);

static void BM_MakeMelFilterbank(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(make_mel_filterbank(64, 512, 16000));
  }
}
BENCHMARK(BM_MakeMelFilterbank);

static void BM_Features(benchmark::State& state) {
  Waveform w = random_wave(32000, 3);
  Spectrogram spec = stft(w, 512, 256);
  MelFilterbank fb = make_mel_filterbank(64, 512, 16000);
  for (auto _ : state) {
    benchmark::DoNotOptimize(make_features(spec, fb, 5, nullptr));
  }
}
BENCHMARK(BM_Features);

static void BM_Forward(benchmark::State& state) {
  MelFilterbank fb = make_mel_filterbank(64, 512, 16000);
  NetworkParams params = init_params(704, {1024, 1024, 1024}, 64, 7);
  TrainHyper hyper;
  Rng rng(8);
  std::vector<double> x(704);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(params, x, hyper, fb));
  }
}
BENCHMARK(BM_Forward);

static void BM_ForwardBackward(benchmark::State& state) {
  MelFilterbank fb = make_mel_filterbank(64, 512, 16000);
  NetworkParams params = init_params(704, {1024, 1024, 1024}, 64, 9);
  TrainHyper hyper;
  Rng rng(10);
  std::vector<double> x(704);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  std::vector<double> dm(64, 0.1), dv(64, 0.1);
  NetworkParams grads = zeros_like(params);
  for (auto _ : state) {
    ForwardCache cache;
    MaskPosterior post = forward(params, x, hyper, fb, nullptr, &cache);
    benchmark::DoNotOptimize(post);
    backward(params, cache, dm, dv, hyper, grads, 1.0);
    benchmark::DoNotOptimize(grads);
  }
}
BENCHMARK(BM_ForwardBackward);

static void BM_SampleCandidates(benchmark::State& state) {
  MelFilterbank fb = make_mel_filterbank(64, 512, 16000);
  Waveform w = random_wave(32000, 11);
  Spectrogram X = stft(w, 512, 256);
  NetworkParams params = init_params(704, {256}, 64, 12);
  TrainHyper hyper;
  auto feats = make_features(X, fb, 5, nullptr);
  std::vector<MaskPosterior> post(X.num_frames);
  for (std::size_t t = 0; t < X.num_frames; ++t) {
    post[t] = forward(params, feats[t].values, hyper, fb);
  }
  PGConfig cfg;
  cfg.num_samples = 8;
  Rng rng(13);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_output_candidates(post, X, cfg, rng));
  }
}
BENCHMARK(BM_SampleCandidates);

BENCHMARK_MAIN();
