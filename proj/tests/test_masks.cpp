#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "osqa/masks.hpp"
#include "osqa/rng.hpp"

using namespace osqa;
using cd = std::complex<double>;

namespace {

constexpr double kPi = 3.14159265358979323846;

Spectrogram make_spec(std::size_t bins, std::size_t frames) {
  Spectrogram s;
  s.num_bins = bins;
  s.num_frames = frames;
  s.frame_len = static_cast<int>(2 * (bins - 1));
  s.hop = s.frame_len / 2;
  s.bins.assign(bins * frames, cd(0.0, 0.0));
  return s;
}

Spectrogram random_spec(std::size_t bins, std::size_t frames, std::uint64_t seed) {
  Spectrogram s = make_spec(bins, frames);
  Rng rng(seed);
  for (auto& b : s.bins) b = cd(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  return s;
}

}  // namespace

TEST_CASE("IRM: symmetry, noiseless case, and a hand value") {
  Spectrogram S = make_spec(3, 2), N = make_spec(3, 2);
  for (auto& b : S.bins) b = cd(0.4, 0.3);  // |S| = 0.5
  for (auto& b : N.bins) b = cd(0.0, 0.5);  // |N| = 0.5
  MaskMatrix eq = compute_irm(S, N);
  for (double g : eq.gains) CHECK(g == doctest::Approx(0.5));

  for (auto& b : N.bins) b = 0.0;
  MaskMatrix noiseless = compute_irm(S, N);
  for (double g : noiseless.gains) CHECK(g == doctest::Approx(1.0));

  S.bins[0] = cd(1.0, 0.0);
  N.bins[0] = cd(0.0, 3.0);
  CHECK(compute_irm(S, N).gains[0] == doctest::Approx(0.25));

  // both zero -> 0
  S.bins[1] = 0.0;
  N.bins[1] = 0.0;
  CHECK(compute_irm(S, N).gains[1] == 0.0);

  Spectrogram wrong = make_spec(3, 5);
  CHECK_THROWS_AS(compute_irm(S, wrong), std::invalid_argument);
}

TEST_CASE("PSA closed form on hand-built pairs") {
  CHECK(psa_gain(cd(0.7, 0.2), cd(0.7, 0.2)) == doctest::Approx(1.0));  // S == X

  // 90 degree phase difference -> cosine vanishes
  CHECK(psa_gain(cd(0.0, 1.0), cd(1.0, 0.0)) == doctest::Approx(0.0));

  // |S| = 2, |X| = 1, aligned phases: upper clamp
  CHECK(psa_gain(cd(2.0, 0.0), cd(1.0, 0.0)) == doctest::Approx(1.0));

  // |S| = 0.5, |X| = 1, 60 degrees apart: 0.5 * cos(60) = 0.25
  cd s = 0.5 * std::polar(1.0, kPi / 3.0);
  CHECK(psa_gain(s, cd(1.0, 0.0)) == doctest::Approx(0.25));

  CHECK(psa_gain(cd(0.3, 0.1), cd(0.0, 0.0)) == 0.0);  // zero-magnitude X
}

TEST_CASE("PSA minimizes complex-plane squared error over the [0,1] gain grid") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    cd s(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    cd x(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    if (std::abs(x) < 1e-3) continue;
    double g_closed = psa_gain(s, x);
    double err_closed = std::norm(s - g_closed * x);
    double best = 1e300;
    for (int i = 0; i <= 10000; ++i) {
      double g = i * 1e-4;
      best = std::min(best, std::norm(s - g * x));
    }
    // grid quantization bound: the quadratic can beat the grid by at most
    // (dg/2)^2 * |x|^2 with dg = 1e-4
    CHECK(err_closed <= best + 2.5e-9 * std::norm(x) + 1e-15);
  }
}

TEST_CASE("apply_mask scales bins and preserves phase") {
  Spectrogram X = make_spec(4, 2);
  for (auto& b : X.bins) b = cd(2.0, 2.0);
  MaskMatrix ones{std::vector<double>(8, 1.0), 4, 2};
  Spectrogram same = apply_mask(ones, X);
  for (std::size_t i = 0; i < X.bins.size(); ++i) CHECK(same.bins[i] == X.bins[i]);

  MaskMatrix zeros{std::vector<double>(8, 0.0), 4, 2};
  for (const auto& b : apply_mask(zeros, X).bins) CHECK(std::abs(b) == 0.0);

  MaskMatrix half{std::vector<double>(8, 0.5), 4, 2};
  Spectrogram h = apply_mask(half, X);
  CHECK(h.bins[0].real() == doctest::Approx(1.0));
  CHECK(h.bins[0].imag() == doctest::Approx(1.0));

  // phase preservation on random data
  Spectrogram R = random_spec(4, 2, 12);
  MaskMatrix g{std::vector<double>(8, 0.0), 4, 2};
  Rng rng(13);
  for (auto& v : g.gains) v = rng.uniform(0.01, 1.0);
  Spectrogram out = apply_mask(g, R);
  for (std::size_t i = 0; i < R.bins.size(); ++i) {
    CHECK(std::arg(out.bins[i]) == doctest::Approx(std::arg(R.bins[i])));
  }

  MaskMatrix wrong{std::vector<double>(6, 1.0), 3, 2};
  CHECK_THROWS_AS(apply_mask(wrong, X), std::invalid_argument);
}

TEST_CASE("post-processing: flooring then causal smoothing") {
  PostProcessConfig cfg;  // g_min = 0.158, beta = 0.3

  MaskMatrix one{std::vector<double>(4, 1.0), 2, 2};
  for (double g : postprocess_mask(one, cfg).gains) CHECK(g == doctest::Approx(1.0));

  MaskMatrix single{std::vector<double>{0.1}, 1, 1};
  CHECK(postprocess_mask(single, cfg).gains[0] == doctest::Approx(0.158));

  // two frames [0, 1]: floor -> [0.158, 1], smooth -> [0.158, 0.3 + 0.7*0.158]
  MaskMatrix two{std::vector<double>{0.0, 1.0}, 1, 2};
  MaskMatrix out = postprocess_mask(two, cfg);
  CHECK(out.gains[0] == doctest::Approx(0.158));
  CHECK(out.gains[1] == doctest::Approx(0.4106));
}

TEST_CASE("all mask operations preserve the [0,1] range") {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    Spectrogram S = random_spec(9, 6, 100 + trial);
    Spectrogram N = random_spec(9, 6, 200 + trial);
    Spectrogram X = S;
    for (std::size_t i = 0; i < X.bins.size(); ++i) X.bins[i] += N.bins[i];

    for (const MaskMatrix& m : {compute_irm(S, N), compute_psa(S, X)}) {
      for (double g : m.gains) {
        CHECK(g >= 0.0);
        CHECK(g <= 1.0);
      }
      MaskMatrix pp = postprocess_mask(m, PostProcessConfig{rng.uniform(0.0, 0.5),
                                                            rng.uniform(0.0, 1.0)});
      for (double g : pp.gains) {
        CHECK(g >= 0.0);
        CHECK(g <= 1.0);
      }
    }
  }
}
