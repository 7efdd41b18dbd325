#include "osqa/data.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "osqa/rng.hpp"

namespace osqa {

namespace {

constexpr double kPi = 3.14159265358979323846;

void put_u32(std::ofstream& f, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  f.write(b, 4);
}

void put_u16(std::ofstream& f, std::uint16_t v) {
  char b[2];
  for (int i = 0; i < 2; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  f.write(b, 2);
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

double mean_power(const Waveform& w) {
  double s = 0.0;
  for (double x : w.samples) s += x * x;
  return s / static_cast<double>(w.samples.size());
}

}  // namespace

Waveform load_wav(const std::string& path, int expected_rate) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open WAV file: " + path);
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
      std::memcmp(buf.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("not a RIFF/WAVE file: " + path);
  }

  std::size_t pos = 12;
  int channels = 0, bits = 0, rate = 0, fmt = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;
  while (pos + 8 <= buf.size()) {
    const char* tag = reinterpret_cast<const char*>(buf.data() + pos);
    std::uint32_t len = get_u32(buf.data() + pos + 4);
    pos += 8;
    if (pos + len > buf.size()) throw std::runtime_error("truncated WAV chunk: " + path);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (len < 16) throw std::runtime_error("malformed fmt chunk: " + path);
      fmt = get_u16(buf.data() + pos);
      channels = get_u16(buf.data() + pos + 2);
      rate = static_cast<int>(get_u32(buf.data() + pos + 4));
      bits = get_u16(buf.data() + pos + 14);
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data = buf.data() + pos;
      data_len = len;
    }
    pos += len + (len & 1);
  }
  if (fmt != 1) throw std::runtime_error("expected PCM encoding: " + path);
  if (channels != 1) throw std::runtime_error("expected mono: " + path);
  if (bits != 16) throw std::runtime_error("expected 16-bit samples: " + path);
  if (expected_rate != 0 && rate != expected_rate) {
    throw std::runtime_error("sample rate mismatch (got " + std::to_string(rate) + ", expected " +
                             std::to_string(expected_rate) + "): " + path);
  }
  if (!data) throw std::runtime_error("missing data chunk: " + path);

  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(data_len / 2);
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    std::int16_t v = static_cast<std::int16_t>(get_u16(data + 2 * i));
    w.samples[i] = static_cast<double>(v) / 32768.0;
  }
  return w;
}

void save_wav(const std::string& path, const Waveform& w) {
  for (double s : w.samples) {
    if (!std::isfinite(s)) throw std::invalid_argument("cannot save non-finite samples");
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open WAV file for writing: " + path);
  const std::uint32_t data_len = static_cast<std::uint32_t>(w.samples.size() * 2);
  f.write("RIFF", 4);
  put_u32(f, 36 + data_len);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  put_u32(f, 16);
  put_u16(f, 1);  // PCM
  put_u16(f, 1);  // mono
  put_u32(f, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(f, static_cast<std::uint32_t>(w.sample_rate * 2));
  put_u16(f, 2);
  put_u16(f, 16);
  f.write("data", 4);
  put_u32(f, data_len);
  for (double s : w.samples) {
    long v = std::lround(s * 32768.0);
    if (v > 32767) v = 32767;
    if (v < -32768) v = -32768;
    put_u16(f, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  if (!f) throw std::runtime_error("WAV write failed: " + path);
}

Utterance mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db) {
  if (clean.samples.size() != noise.samples.size() || clean.sample_rate != noise.sample_rate) {
    throw std::invalid_argument("clean/noise length or rate mismatch");
  }
  const double pc = mean_power(clean);
  const double pn = mean_power(noise);
  if (pc == 0.0 || pn == 0.0) throw std::invalid_argument("zero-energy signal");
  const double gain = std::sqrt(pc / (pn * std::pow(10.0, snr_db / 10.0)));

  Utterance u;
  u.snr_db = snr_db;
  u.clean = clean;
  u.noise = noise;
  u.mixture.sample_rate = clean.sample_rate;
  u.mixture.samples.resize(clean.samples.size());
  double peak = 0.0;
  for (std::size_t i = 0; i < clean.samples.size(); ++i) {
    u.noise.samples[i] = gain * noise.samples[i];
    u.mixture.samples[i] = clean.samples[i] + u.noise.samples[i];
    peak = std::max({peak, std::abs(u.clean.samples[i]), std::abs(u.noise.samples[i]),
                     std::abs(u.mixture.samples[i])});
  }
  const double norm = 1.0 / std::max(1.0, peak);
  if (norm != 1.0) {
    for (std::size_t i = 0; i < clean.samples.size(); ++i) {
      u.clean.samples[i] *= norm;
      u.noise.samples[i] *= norm;
      u.mixture.samples[i] *= norm;
    }
  }
  return u;
}

std::pair<Waveform, Waveform> synth_utterance(std::uint64_t seed, double duration_s,
                                              int sample_rate) {
  if (duration_s < 0.5) throw std::invalid_argument("duration must be >= 0.5 s");
  Rng rng(seed);
  const std::size_t n = static_cast<std::size_t>(duration_s * sample_rate);

  // Fundamental in [100, 300] Hz, quantized to the nearest 512-pt FFT bin so
  // the harmonic energy stays concentrated.
  const double bin_hz = static_cast<double>(sample_rate) / 512.0;
  double f0 = rng.uniform(100.0, 300.0);
  f0 = std::round(f0 / bin_hz) * bin_hz;
  const double fm = rng.uniform(2.0, 8.0);
  const double am_phase = rng.uniform(0.0, 2.0 * kPi);
  const double ph1 = rng.uniform(0.0, 2.0 * kPi);
  const double ph2 = rng.uniform(0.0, 2.0 * kPi);
  const double ph3 = rng.uniform(0.0, 2.0 * kPi);

  Waveform clean;
  clean.sample_rate = sample_rate;
  clean.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    const double env = 0.5 * (1.0 - std::cos(2.0 * kPi * fm * t + am_phase));
    const double tone = std::sin(2.0 * kPi * f0 * t + ph1) +
                        0.5 * std::sin(2.0 * kPi * 2.0 * f0 * t + ph2) +
                        0.25 * std::sin(2.0 * kPi * 3.0 * f0 * t + ph3);
    clean.samples[i] = 0.4 * env * tone;
  }

  const double pole = rng.uniform(0.5, 0.95);
  Waveform noise;
  noise.sample_rate = sample_rate;
  noise.samples.resize(n);
  double y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    y = pole * y + (1.0 - pole) * rng.normal();
    noise.samples[i] = y;
  }
  // Keep the noise at a sane amplitude; mixing rescales it anyway.
  double p = std::sqrt(mean_power(noise));
  if (p > 0.0) {
    for (double& v : noise.samples) v *= 0.1 / p;
  }
  return {std::move(clean), std::move(noise)};
}

std::string manifest_path_for(const std::string& out_dir) {
  return (std::filesystem::path(out_dir) / "manifest.txt").string();
}

CorpusManifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open manifest: " + path);
  CorpusManifest m;
  std::string line;
  int lineno = 0;
  bool have_rate = false;
  auto base = std::filesystem::path(path).parent_path();
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!have_rate) {
      if (line.rfind("sample_rate=", 0) != 0) {
        throw std::runtime_error("manifest line 1: expected sample_rate header");
      }
      m.sample_rate = std::stoi(line.substr(12));
      have_rate = true;
      continue;
    }
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) fields.push_back(tok);
    if (fields.size() != 4) {
      throw std::runtime_error("manifest line " + std::to_string(lineno) +
                               ": expected 4 comma-separated fields");
    }
    ManifestEntry e;
    e.id = fields[0];
    e.clean_path = fields[1];
    e.noise_path = fields[2];
    try {
      e.snr_db = std::stod(fields[3]);
    } catch (const std::exception&) {
      throw std::runtime_error("manifest line " + std::to_string(lineno) + ": bad SNR value");
    }
    // Relative paths resolve against the manifest's directory.
    for (std::string* p : {&e.clean_path, &e.noise_path}) {
      if (!std::filesystem::path(*p).is_absolute()) *p = (base / *p).string();
      if (!std::filesystem::exists(*p)) {
        throw std::runtime_error("manifest line " + std::to_string(lineno) +
                                 ": missing file " + *p);
      }
    }
    m.entries.push_back(std::move(e));
  }
  if (m.entries.empty()) throw std::runtime_error("manifest has no entries: " + path);
  return m;
}

CorpusManifest generate_corpus(int n, std::uint64_t seed, const std::vector<double>& snrs,
                               const std::string& out_dir, double duration_s, int sample_rate) {
  if (n <= 0) throw std::invalid_argument("corpus size must be positive");
  if (snrs.empty()) throw std::invalid_argument("need at least one SNR");
  std::filesystem::create_directories(out_dir);

  CorpusManifest m;
  m.sample_rate = sample_rate;
  std::ofstream mf(manifest_path_for(out_dir));
  if (!mf) throw std::runtime_error("cannot write manifest in " + out_dir);
  mf << "sample_rate=" << sample_rate << "\n";
  for (int i = 0; i < n; ++i) {
    auto [clean, noise] = synth_utterance(seed * 1000003ULL + static_cast<std::uint64_t>(i),
                                          duration_s, sample_rate);
    ManifestEntry e;
    e.id = "utt" + std::to_string(i);
    e.clean_path = e.id + "_clean.wav";
    e.noise_path = e.id + "_noise.wav";
    e.snr_db = snrs[static_cast<std::size_t>(i) % snrs.size()];
    save_wav((std::filesystem::path(out_dir) / e.clean_path).string(), clean);
    save_wav((std::filesystem::path(out_dir) / e.noise_path).string(), noise);
    mf << e.id << "," << e.clean_path << "," << e.noise_path << "," << e.snr_db << "\n";
    e.clean_path = (std::filesystem::path(out_dir) / e.clean_path).string();
    e.noise_path = (std::filesystem::path(out_dir) / e.noise_path).string();
    m.entries.push_back(std::move(e));
  }
  return m;
}

Utterance load_utterance(const ManifestEntry& e, int sample_rate) {
  Waveform clean = load_wav(e.clean_path, sample_rate);
  Waveform noise = load_wav(e.noise_path, sample_rate);
  if (clean.samples.size() != noise.samples.size()) {
    throw std::runtime_error("clean/noise length mismatch for utterance " + e.id);
  }
  Utterance u = mix_at_snr(clean, noise, e.snr_db);
  u.id = e.id;
  return u;
}

}  // namespace osqa
