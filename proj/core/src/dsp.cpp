#include "osqa/dsp.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace osqa {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

std::vector<double> sqrt_hann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    w[i] = std::sqrt(0.5 * (1.0 - std::cos(2.0 * kPi * i / n)));  // periodic
  }
  return w;
}

}  // namespace

void fft(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n < 2) return;
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    for (auto& x : a) x /= static_cast<double>(n);
  }
}

Spectrogram stft(const Waveform& w, int frame_len, int hop) {
  if (!is_pow2(frame_len)) throw std::invalid_argument("frame_len must be a power of two");
  if (hop != frame_len / 2) throw std::invalid_argument("hop must equal frame_len / 2");
  if (w.samples.size() < static_cast<std::size_t>(frame_len)) {
    throw std::invalid_argument("input too short");
  }
  for (double s : w.samples) {
    if (!std::isfinite(s)) throw std::invalid_argument("waveform contains non-finite samples");
  }
  const std::size_t omega = static_cast<std::size_t>(frame_len) / 2 + 1;
  const std::size_t frames = (w.samples.size() - frame_len) / hop + 1;
  const std::vector<double> win = sqrt_hann(frame_len);

  Spectrogram spec;
  spec.num_bins = omega;
  spec.num_frames = frames;
  spec.frame_len = frame_len;
  spec.hop = hop;
  spec.sample_rate = w.sample_rate;
  spec.bins.resize(omega * frames);

  std::vector<std::complex<double>> buf(frame_len);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* x = w.samples.data() + t * hop;
    for (int n = 0; n < frame_len; ++n) buf[n] = win[n] * x[n];
    fft(buf, false);
    for (std::size_t k = 0; k < omega; ++k) spec.at(k, t) = buf[k];
  }
  return spec;
}

Waveform istft(const Spectrogram& spec) {
  const int n = spec.frame_len;
  if (!is_pow2(n) || spec.hop != n / 2) throw std::invalid_argument("inconsistent frame metadata");
  if (spec.num_bins != static_cast<std::size_t>(n) / 2 + 1) {
    throw std::invalid_argument("inconsistent frame metadata");
  }
  const std::vector<double> win = sqrt_hann(n);
  Waveform out;
  out.sample_rate = spec.sample_rate;
  out.samples.assign((spec.num_frames - 1) * spec.hop + n, 0.0);

  std::vector<std::complex<double>> buf(n);
  for (std::size_t t = 0; t < spec.num_frames; ++t) {
    for (std::size_t k = 0; k < spec.num_bins; ++k) buf[k] = spec.at(k, t);
    for (int k = 1; k < n / 2; ++k) buf[n - k] = std::conj(buf[k]);
    fft(buf, true);
    double* y = out.samples.data() + t * spec.hop;
    for (int i = 0; i < n; ++i) y[i] += win[i] * buf[i].real();
  }
  return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank make_mel_filterbank(std::size_t bands, int frame_len, int sample_rate) {
  const std::size_t omega = static_cast<std::size_t>(frame_len) / 2 + 1;
  if (bands < 2) throw std::invalid_argument("need at least 2 mel bands");
  if (bands >= omega) throw std::invalid_argument("filterbank wider than spectrum");

  MelFilterbank fb;
  fb.bands = bands;
  fb.bins = omega;
  fb.forward.assign(bands * omega, 0.0);

  // Center frequencies equally spaced on the HTK mel scale over [0, sr/2].
  const double mel_max = hz_to_mel(sample_rate / 2.0);
  std::vector<double> centers(bands + 2);
  for (std::size_t i = 0; i < bands + 2; ++i) {
    centers[i] = mel_to_hz(mel_max * static_cast<double>(i) / (bands + 1));
  }

  for (std::size_t b = 0; b < bands; ++b) {
    const double lo = centers[b], mid = centers[b + 1], hi = centers[b + 2];
    bool any = false;
    for (std::size_t k = 0; k < omega; ++k) {
      double f = static_cast<double>(k) * sample_rate / frame_len;
      double v = 0.0;
      if (f > lo && f < mid) v = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi) v = (hi - f) / (hi - mid);
      if (v > 0.0) {
        fb.forward[b * omega + k] = v;
        any = true;
      }
    }
    if (!any) {
      // Filter narrower than one bin: give it unit weight at the nearest bin.
      std::size_t k = static_cast<std::size_t>(std::lround(mid * frame_len / sample_rate));
      if (k >= omega) k = omega - 1;
      fb.forward[b * omega + k] = 1.0;
    }
  }

  // Pseudo-inverse via ridge-regularized normal equations:
  //   inverse = F^T (F F^T + eps I)^-1
  const double eps = 1e-8;
  const std::size_t bsz = bands;
  std::vector<double> gram(bsz * bsz, 0.0);
  for (std::size_t i = 0; i < bsz; ++i) {
    for (std::size_t j = i; j < bsz; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < omega; ++k) s += fb.forward[i * omega + k] * fb.forward[j * omega + k];
      gram[i * bsz + j] = s;
      gram[j * bsz + i] = s;
    }
    gram[i * bsz + i] += eps;
  }

  // Cholesky factorization of the gram matrix.
  std::vector<double> chol(gram);
  for (std::size_t i = 0; i < bsz; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = chol[i * bsz + j];
      for (std::size_t k = 0; k < j; ++k) s -= chol[i * bsz + k] * chol[j * bsz + k];
      if (i == j) {
        if (s <= 0.0) throw std::runtime_error("mel gram matrix not positive definite");
        chol[i * bsz + i] = std::sqrt(s);
      } else {
        chol[i * bsz + j] = s / chol[j * bsz + j];
      }
    }
    for (std::size_t j = i + 1; j < bsz; ++j) chol[i * bsz + j] = 0.0;
  }

  auto solve = [&](std::vector<double>& rhs) {
    for (std::size_t i = 0; i < bsz; ++i) {
      double s = rhs[i];
      for (std::size_t k = 0; k < i; ++k) s -= chol[i * bsz + k] * rhs[k];
      rhs[i] = s / chol[i * bsz + i];
    }
    for (std::size_t ii = bsz; ii-- > 0;) {
      double s = rhs[ii];
      for (std::size_t k = ii + 1; k < bsz; ++k) s -= chol[k * bsz + ii] * rhs[k];
      rhs[ii] = s / chol[ii * bsz + ii];
    }
  };

  fb.inverse.assign(omega * bsz, 0.0);
  std::vector<double> col(bsz), corr(bsz);
  for (std::size_t k = 0; k < omega; ++k) {
    for (std::size_t b = 0; b < bsz; ++b) col[b] = fb.forward[b * omega + k];
    solve(col);
    // One Neumann step cancels the O(eps) ridge bias:
    //   (G + eps I)^-1 (I + eps (G + eps I)^-1) = G^-1 + O(eps^2)
    corr = col;
    solve(corr);
    for (std::size_t b = 0; b < bsz; ++b) col[b] += eps * corr[b];
    for (std::size_t b = 0; b < bsz; ++b) fb.inverse[k * bsz + b] = col[b];
  }
  return fb;
}

std::vector<double> mel_project(const MelFilterbank& fb, const std::vector<double>& v) {
  if (v.size() != fb.bins) throw std::invalid_argument("mel_project: length mismatch");
  std::vector<double> out(fb.bands, 0.0);
  for (std::size_t b = 0; b < fb.bands; ++b) {
    const double* row = fb.forward.data() + b * fb.bins;
    double s = 0.0;
    for (std::size_t k = 0; k < fb.bins; ++k) s += row[k] * v[k];
    out[b] = s;
  }
  return out;
}

std::vector<double> mel_reconstruct(const MelFilterbank& fb, const std::vector<double>& m,
                                    double clamp_lo, std::optional<double> clamp_hi) {
  if (m.size() != fb.bands) throw std::invalid_argument("mel_reconstruct: length mismatch");
  std::vector<double> out(fb.bins, 0.0);
  for (std::size_t k = 0; k < fb.bins; ++k) {
    const double* row = fb.inverse.data() + k * fb.bands;
    double s = 0.0;
    for (std::size_t b = 0; b < fb.bands; ++b) s += row[b] * m[b];
    if (s < clamp_lo) s = clamp_lo;
    if (clamp_hi && s > *clamp_hi) s = *clamp_hi;
    out[k] = s;
  }
  return out;
}

std::vector<FeatureFrame> make_features(const Spectrogram& spec, const MelFilterbank& fb,
                                        int context, const FeatureStats* stats) {
  if (context < 0) throw std::invalid_argument("context must be >= 0");
  const std::size_t T = spec.num_frames;
  const std::size_t B = fb.bands;
  const std::size_t dim = (2 * static_cast<std::size_t>(context) + 1) * B;
  if (stats && (stats->mean.size() != dim || stats->std.size() != dim)) {
    throw std::invalid_argument("feature stats dimension mismatch");
  }

  // Per-frame log-mel magnitudes.
  std::vector<std::vector<double>> logmel(T);
  std::vector<double> mag(spec.num_bins);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < spec.num_bins; ++k) mag[k] = std::abs(spec.at(k, t));
    logmel[t] = mel_project(fb, mag);
    for (double& v : logmel[t]) v = std::log(v + 1e-6);
  }

  std::vector<FeatureFrame> out(T);
  for (std::size_t t = 0; t < T; ++t) {
    FeatureFrame& f = out[t];
    f.frame_index = t;
    f.values.resize(dim);
    std::size_t pos = 0;
    for (int q = -context; q <= context; ++q) {
      long idx = static_cast<long>(t) + q;
      if (idx < 0) idx = 0;  // repeat edge frames
      if (idx >= static_cast<long>(T)) idx = static_cast<long>(T) - 1;
      std::memcpy(f.values.data() + pos, logmel[idx].data(), B * sizeof(double));
      pos += B;
    }
    if (stats) {
      for (std::size_t d = 0; d < dim; ++d) {
        f.values[d] = (f.values[d] - stats->mean[d]) / stats->std[d];
      }
    }
  }
  return out;
}

}  // namespace osqa
