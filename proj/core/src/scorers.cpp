#include "osqa/scorers.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <stdexcept>

#include "osqa/dsp.hpp"

namespace osqa {

namespace {

void check_request(const ScoreRequest& req) {
  if (!req.enhanced || !req.clean || !req.mixture) throw std::invalid_argument("incomplete score request");
  if (req.enhanced->samples.size() != req.clean->samples.size() ||
      req.enhanced->samples.size() != req.mixture->samples.size() ||
      req.enhanced->sample_rate != req.clean->sample_rate ||
      req.enhanced->sample_rate != req.mixture->sample_rate) {
    throw std::invalid_argument("score request signals must share length and rate");
  }
}

}  // namespace

double sdr_score(const ScoreRequest& req) {
  check_request(req);
  double sig = 0.0, dist = 0.0;
  const auto& s = req.clean->samples;
  const auto& e = req.enhanced->samples;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sig += s[i] * s[i];
    const double d = s[i] - e[i];
    dist += d * d;
  }
  if (sig == 0.0) throw std::invalid_argument("zero clean energy");
  if (dist < 1e-12 * sig) return 60.0;
  return 10.0 * std::log10(sig / dist);
}

double band_correlation_score(const ScoreRequest& req) {
  check_request(req);
  constexpr int kFrame = 512, kHop = 256;
  constexpr std::size_t kBands = 64, kGroups = 16, kGroupSize = 4;
  constexpr std::size_t kSegLen = 30, kSegHop = 15;

  if (req.clean->samples.size() < static_cast<std::size_t>(kFrame)) {
    throw std::invalid_argument("input too short for band correlation");
  }
  const MelFilterbank fb = make_mel_filterbank(kBands, kFrame, req.clean->sample_rate);
  auto envelopes = [&](const Waveform& w) {
    Spectrogram spec = stft(w, kFrame, kHop);
    std::vector<std::vector<double>> env(kGroups, std::vector<double>(spec.num_frames, 0.0));
    std::vector<double> mag(spec.num_bins);
    for (std::size_t t = 0; t < spec.num_frames; ++t) {
      for (std::size_t k = 0; k < spec.num_bins; ++k) mag[k] = std::abs(spec.at(k, t));
      std::vector<double> mel = mel_project(fb, mag);
      for (std::size_t g = 0; g < kGroups; ++g) {
        double s = 0.0;
        for (std::size_t j = 0; j < kGroupSize; ++j) s += mel[g * kGroupSize + j];
        env[g][t] = s;
      }
    }
    return env;
  };

  auto env_clean = envelopes(*req.clean);
  auto env_enh = envelopes(*req.enhanced);
  const std::size_t frames = env_clean[0].size();
  if (frames < kSegLen) throw std::invalid_argument("input too short for band correlation");

  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start + kSegLen <= frames; start += kSegHop) {
    for (std::size_t g = 0; g < kGroups; ++g) {
      double mc = 0.0, me = 0.0;
      for (std::size_t t = 0; t < kSegLen; ++t) {
        mc += env_clean[g][start + t];
        me += env_enh[g][start + t];
      }
      mc /= kSegLen;
      me /= kSegLen;
      double sc = 0.0, se = 0.0, cov = 0.0;
      for (std::size_t t = 0; t < kSegLen; ++t) {
        const double dc = env_clean[g][start + t] - mc;
        const double de = env_enh[g][start + t] - me;
        sc += dc * dc;
        se += de * de;
        cov += dc * de;
      }
      sc = std::sqrt(sc / kSegLen);
      se = std::sqrt(se / kSegLen);
      double r = (sc < 1e-10 || se < 1e-10) ? 0.0 : cov / (kSegLen * sc * se);
      total += std::max(0.0, r);
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double scale_score(double z, const ScoreScale& scale) {
  if (!std::isfinite(z)) throw std::invalid_argument("non-finite score");
  if (scale.lo >= scale.hi) throw std::invalid_argument("invalid score scale bounds");
  double v = scale.gain * z + scale.offset;
  if (v < scale.lo) v = scale.lo;
  if (v > scale.hi) v = scale.hi;
  return v;
}

double mix_scores(double z1, double z2, double gamma) {
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("gamma must be in [0, 1]");
  return gamma * z1 + (1.0 - gamma) * z2;
}

struct ExternalScorer::Impl {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  double timeout_s = 30.0;
  std::string pending;  // buffered bytes past the last newline

  void close_all() {
    if (to_child >= 0) close(to_child);
    if (from_child >= 0) close(from_child);
    to_child = from_child = -1;
    if (pid > 0) {
      kill(pid, SIGTERM);
      waitpid(pid, nullptr, 0);
      pid = -1;
    }
  }
};

ExternalScorer::ExternalScorer(const std::string& command, double timeout_s)
    : impl_(std::make_unique<Impl>()) {
  impl_->timeout_s = timeout_s;
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) throw std::runtime_error("pipe failed");
  pid_t pid = fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  impl_->pid = pid;
  impl_->to_child = in_pipe[1];
  impl_->from_child = out_pipe[0];
}

ExternalScorer::~ExternalScorer() { impl_->close_all(); }

double ExternalScorer::score(const ScoreRequest& req) {
  check_request(req);
  namespace fs = std::filesystem;
  char tmpl[] = "/tmp/osqa_score_XXXXXX";
  char* dir = mkdtemp(tmpl);
  if (!dir) throw std::runtime_error("cannot create scorer temp directory");
  const fs::path base(dir);
  struct Cleanup {
    fs::path p;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(p, ec);
    }
  } cleanup{base};

  const std::string enh = (base / "enhanced.wav").string();
  const std::string cln = (base / "clean.wav").string();
  const std::string mix = (base / "mixture.wav").string();
  save_wav(enh, *req.enhanced);
  save_wav(cln, *req.clean);
  save_wav(mix, *req.mixture);

  const std::string line = "SCORE " + enh + " " + cln + " " + mix + "\n";
  ssize_t n = write(impl_->to_child, line.data(), line.size());
  if (n != static_cast<ssize_t>(line.size())) throw std::runtime_error("scorer endpoint write failed");

  // Read one response line, honoring the timeout.
  std::string& buf = impl_->pending;
  const auto deadline_ms = static_cast<int>(impl_->timeout_s * 1000.0);
  int elapsed_ms = 0;
  for (;;) {
    auto nl = buf.find('\n');
    if (nl != std::string::npos) {
      std::string resp = buf.substr(0, nl);
      buf.erase(0, nl + 1);
      if (resp.rfind("OK ", 0) == 0) {
        try {
          return std::stod(resp.substr(3));
        } catch (const std::exception&) {
          throw std::runtime_error("malformed scorer response: " + resp);
        }
      }
      if (resp.rfind("ERR ", 0) == 0) throw std::runtime_error("scorer error: " + resp.substr(4));
      if (resp == "ERR") throw std::runtime_error("scorer error");
      throw std::runtime_error("malformed scorer response: " + resp);
    }
    if (elapsed_ms >= deadline_ms) throw std::runtime_error("scorer endpoint timeout");
    struct pollfd pfd{impl_->from_child, POLLIN, 0};
    const int slice = std::min(200, deadline_ms - elapsed_ms);
    int rv = poll(&pfd, 1, slice);
    elapsed_ms += slice;
    if (rv < 0) throw std::runtime_error("scorer endpoint poll failed");
    if (rv == 0) continue;
    char chunk[512];
    ssize_t got = read(impl_->from_child, chunk, sizeof(chunk));
    if (got <= 0) throw std::runtime_error("scorer endpoint closed the connection");
    buf.append(chunk, static_cast<std::size_t>(got));
  }
}

}  // namespace osqa
