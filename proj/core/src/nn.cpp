#include "osqa/nn.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace osqa {

namespace {

constexpr char kMagic[8] = {'O', 'S', 'Q', 'A', 'P', 'G', '0', '1'};

template <typename P, typename F>
void for_each_dense(P& p, F&& f) {
  for (auto& layer : p.hidden) f(layer);
  f(p.mask_head);
  f(p.var_head);
}

void matvec(const Dense& d, std::span<const double> x, std::vector<double>& out) {
  if (x.size() != d.cols) throw std::invalid_argument("dimension mismatch");
  out.assign(d.rows, 0.0);
  for (std::size_t r = 0; r < d.rows; ++r) {
    const double* row = d.w.data() + r * d.cols;
    double s = d.b[r];
    for (std::size_t c = 0; c < d.cols; ++c) s += row[c] * x[c];
    out[r] = s;
  }
}

// out += W^T v
void matvec_t(const Dense& d, std::span<const double> v, std::vector<double>& out) {
  out.assign(d.cols, 0.0);
  for (std::size_t r = 0; r < d.rows; ++r) {
    const double* row = d.w.data() + r * d.cols;
    for (std::size_t c = 0; c < d.cols; ++c) out[c] += row[c] * v[r];
  }
}

void accumulate_layer_grads(Dense& g, std::span<const double> d_pre,
                            std::span<const double> input, const Dense& w,
                            double l2, double scale) {
  for (std::size_t r = 0; r < g.rows; ++r) {
    double* grow = g.w.data() + r * g.cols;
    const double* wrow = w.w.data() + r * g.cols;
    const double dr = d_pre[r] * scale;
    for (std::size_t c = 0; c < g.cols; ++c) {
      grow[c] += dr * input[c] + scale * 2.0 * l2 * wrow[c];
    }
    g.b[r] += dr;
  }
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  std::uint64_t u = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((u >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data()) + pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n) {
    if (b_.size() - pos_ < n) throw std::runtime_error("truncated payload");
  }
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

NetworkParams init_params(std::size_t input_dim, const std::vector<std::size_t>& hidden_dims,
                          std::size_t output_dim, std::uint64_t seed) {
  if (input_dim == 0 || output_dim == 0) throw std::invalid_argument("zero-sized layer");
  for (std::size_t h : hidden_dims) {
    if (h == 0) throw std::invalid_argument("zero-sized layer");
  }
  Rng rng(seed);
  auto glorot = [&](std::size_t rows, std::size_t cols) {
    Dense d;
    d.rows = rows;
    d.cols = cols;
    d.w.resize(rows * cols);
    d.b.assign(rows, 0.0);
    double lim = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (double& x : d.w) x = rng.uniform(-lim, lim);
    return d;
  };
  NetworkParams p;
  std::size_t prev = input_dim;
  for (std::size_t h : hidden_dims) {
    p.hidden.push_back(glorot(h, prev));
    prev = h;
  }
  p.mask_head = glorot(output_dim, prev);
  p.var_head = glorot(output_dim, prev);
  return p;
}

NetworkParams zeros_like(const NetworkParams& p) {
  NetworkParams z = p;
  for_each_dense(z, [](Dense& d) {
    std::fill(d.w.begin(), d.w.end(), 0.0);
    std::fill(d.b.begin(), d.b.end(), 0.0);
  });
  return z;
}

MaskPosterior forward(const NetworkParams& params, std::span<const double> x,
                      const TrainHyper& hyper, const MelFilterbank& fb,
                      Rng* dropout_rng, ForwardCache* cache) {
  if (x.size() != params.input_dim()) throw std::invalid_argument("dimension mismatch");
  if (params.output_dim() != fb.bands) throw std::invalid_argument("head/filterbank mismatch");

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.layer_inputs.clear();
  c.preacts.clear();
  c.dropmul.clear();

  std::vector<double> cur(x.begin(), x.end());
  if (dropout_rng && hyper.dropout_in > 0.0) {
    double keep = 1.0 - hyper.dropout_in;
    for (double& v : cur) v = (dropout_rng->uniform() < keep) ? v / keep : 0.0;
  }
  c.layer_inputs.push_back(cur);

  std::vector<double> pre;
  for (const Dense& layer : params.hidden) {
    matvec(layer, cur, pre);
    c.preacts.push_back(pre);
    cur.resize(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) cur[i] = pre[i] > 0.0 ? pre[i] : 0.0;
    if (dropout_rng && hyper.dropout_hidden > 0.0) {
      double keep = 1.0 - hyper.dropout_hidden;
      std::vector<double> mul(cur.size());
      for (std::size_t i = 0; i < cur.size(); ++i) {
        mul[i] = (dropout_rng->uniform() < keep) ? 1.0 / keep : 0.0;
        cur[i] *= mul[i];
      }
      c.dropmul.push_back(std::move(mul));
    } else {
      c.dropmul.emplace_back();
    }
    c.layer_inputs.push_back(cur);
  }

  MaskPosterior post;
  matvec(params.mask_head, cur, post.mask_mel);
  for (double& v : post.mask_mel) v = 1.0 / (1.0 + std::exp(-v));
  matvec(params.var_head, cur, post.var_mel);
  for (double& v : post.var_mel) v = std::exp(v) + hyper.c_sigma;

  post.mask_lin = mel_reconstruct(fb, post.mask_mel, 0.0, 1.0);
  post.var_lin = mel_reconstruct(fb, post.var_mel, hyper.c_sigma, std::nullopt);

  c.mask_mel = post.mask_mel;
  c.var_mel = post.var_mel;
  return post;
}

void backward(const NetworkParams& params, const ForwardCache& cache,
              std::span<const double> d_mask_mel, std::span<const double> d_var_mel,
              const TrainHyper& hyper, NetworkParams& grads, double scale) {
  const std::size_t L = params.hidden.size();
  if (cache.layer_inputs.size() != L + 1 || cache.preacts.size() != L) {
    throw std::invalid_argument("cache/params mismatch");
  }
  const std::size_t out = params.output_dim();
  if (d_mask_mel.size() != out || d_var_mel.size() != out) {
    throw std::invalid_argument("head gradient dimension mismatch");
  }

  std::vector<double> d_pre_mu(out), d_pre_sg(out);
  for (std::size_t j = 0; j < out; ++j) {
    double s = cache.mask_mel[j];
    d_pre_mu[j] = d_mask_mel[j] * s * (1.0 - s);
    d_pre_sg[j] = d_var_mel[j] * (cache.var_mel[j] - hyper.c_sigma);  // d exp(a) = exp(a)
  }

  const std::vector<double>& head_in = cache.layer_inputs[L];
  accumulate_layer_grads(grads.mask_head, d_pre_mu, head_in, params.mask_head, hyper.l2, scale);
  accumulate_layer_grads(grads.var_head, d_pre_sg, head_in, params.var_head, hyper.l2, scale);

  std::vector<double> d_h, tmp;
  matvec_t(params.mask_head, d_pre_mu, d_h);
  matvec_t(params.var_head, d_pre_sg, tmp);
  for (std::size_t i = 0; i < d_h.size(); ++i) d_h[i] += tmp[i];

  for (std::size_t l = L; l-- > 0;) {
    const std::vector<double>& pre = cache.preacts[l];
    std::vector<double> d_pre(pre.size());
    const std::vector<double>& mul = cache.dropmul[l];
    for (std::size_t i = 0; i < pre.size(); ++i) {
      double d = d_h[i];
      if (!mul.empty()) d *= mul[i];
      d_pre[i] = pre[i] > 0.0 ? d : 0.0;
    }
    accumulate_layer_grads(grads.hidden[l], d_pre, cache.layer_inputs[l], params.hidden[l],
                           hyper.l2, scale);
    if (l > 0) matvec_t(params.hidden[l], d_pre, d_h);
  }
}

void head_grads_from_linear(const MelFilterbank& fb, const MaskPosterior& post, double c_sigma,
                            std::span<const double> d_mask_lin, std::span<const double> d_var_lin,
                            std::vector<double>& d_mask_mel, std::vector<double>& d_var_mel) {
  if (d_mask_lin.size() != fb.bins || d_var_lin.size() != fb.bins) {
    throw std::invalid_argument("linear gradient dimension mismatch");
  }
  d_mask_mel.assign(fb.bands, 0.0);
  d_var_mel.assign(fb.bands, 0.0);
  for (std::size_t k = 0; k < fb.bins; ++k) {
    const double* row = fb.inverse.data() + k * fb.bands;
    bool mask_active = post.mask_lin[k] > 0.0 && post.mask_lin[k] < 1.0;
    bool var_active = post.var_lin[k] > c_sigma;
    if (mask_active) {
      for (std::size_t b = 0; b < fb.bands; ++b) d_mask_mel[b] += row[b] * d_mask_lin[k];
    }
    if (var_active) {
      for (std::size_t b = 0; b < fb.bands; ++b) d_var_mel[b] += row[b] * d_var_lin[k];
    }
  }
}

AdamState make_adam(const NetworkParams& params, double alpha) {
  AdamState s;
  s.m = zeros_like(params);
  s.v = zeros_like(params);
  s.alpha = alpha;
  return s;
}

void adam_step(NetworkParams& params, const NetworkParams& grads, AdamState& state) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

  auto update = [&](Dense& p, const Dense& g, Dense& m, Dense& v) {
    if (p.rows != g.rows || p.cols != g.cols) throw std::invalid_argument("shape mismatch");
    auto upd = [&](std::vector<double>& pp, const std::vector<double>& gg,
                   std::vector<double>& mm, std::vector<double>& vv) {
      for (std::size_t i = 0; i < pp.size(); ++i) {
        mm[i] = state.beta1 * mm[i] + (1.0 - state.beta1) * gg[i];
        vv[i] = state.beta2 * vv[i] + (1.0 - state.beta2) * gg[i] * gg[i];
        double mhat = mm[i] / bc1;
        double vhat = vv[i] / bc2;
        pp[i] -= state.alpha * mhat / (std::sqrt(vhat) + state.eps);
      }
    };
    upd(p.w, g.w, m.w, v.w);
    upd(p.b, g.b, m.b, v.b);
  };

  for (std::size_t l = 0; l < params.hidden.size(); ++l) {
    update(params.hidden[l], grads.hidden[l], state.m.hidden[l], state.v.hidden[l]);
  }
  update(params.mask_head, grads.mask_head, state.m.mask_head, state.v.mask_head);
  update(params.var_head, grads.var_head, state.m.var_head, state.v.var_head);
}

void axpy_params(NetworkParams& acc, const NetworkParams& g, double scale) {
  auto add = [scale](Dense& a, const Dense& b) {
    for (std::size_t i = 0; i < a.w.size(); ++i) a.w[i] += scale * b.w[i];
    for (std::size_t i = 0; i < a.b.size(); ++i) a.b[i] += scale * b.b[i];
  };
  for (std::size_t l = 0; l < acc.hidden.size(); ++l) add(acc.hidden[l], g.hidden[l]);
  add(acc.mask_head, g.mask_head);
  add(acc.var_head, g.var_head);
}

std::vector<std::uint8_t> save_checkpoint(const NetworkParams& params, const FeatureStats& stats,
                                          const CheckpointMeta& meta) {
  if (stats.mean.size() != params.input_dim() || stats.std.size() != params.input_dim()) {
    throw std::invalid_argument("feature stats dimension mismatch");
  }
  std::ostringstream hdr;
  hdr << "input_dim=" << params.input_dim() << "\n";
  hdr << "hidden=";
  for (std::size_t i = 0; i < params.hidden.size(); ++i) {
    if (i) hdr << ",";
    hdr << params.hidden[i].rows;
  }
  hdr << "\n";
  hdr << "output_dim=" << params.output_dim() << "\n";
  hdr << "context=" << meta.context << "\n";
  hdr << "frame_len=" << meta.frame_len << "\n";
  hdr << "hop=" << meta.hop << "\n";
  hdr << "sample_rate=" << meta.sample_rate << "\n";
  hdr << "c_sigma=" << meta.c_sigma << "\n";
  hdr << "note=" << meta.note << "\n";
  const std::string header = hdr.str();

  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 8);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  auto put_dense = [&](const Dense& d) {
    for (double v : d.w) put_f64(out, v);
    for (double v : d.b) put_f64(out, v);
  };
  for (const Dense& d : params.hidden) put_dense(d);
  put_dense(params.mask_head);
  put_dense(params.var_head);
  for (double v : stats.mean) put_f64(out, v);
  for (double v : stats.std) put_f64(out, v);
  return out;
}

Checkpoint load_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw std::runtime_error("unrecognized checkpoint format");
  }
  Reader r(bytes);
  r.bytes(8);  // magic
  std::uint32_t hlen = r.u32();
  std::string header = r.bytes(hlen);

  std::size_t input_dim = 0, output_dim = 0;
  std::vector<std::size_t> hidden_dims;
  Checkpoint ck;
  std::istringstream hs(header);
  std::string line;
  while (std::getline(hs, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    if (key == "input_dim") input_dim = std::stoul(val);
    else if (key == "output_dim") output_dim = std::stoul(val);
    else if (key == "hidden") {
      std::istringstream vs(val);
      std::string tok;
      while (std::getline(vs, tok, ',')) {
        if (!tok.empty()) hidden_dims.push_back(std::stoul(tok));
      }
    } else if (key == "context") ck.meta.context = std::stoi(val);
    else if (key == "frame_len") ck.meta.frame_len = std::stoi(val);
    else if (key == "hop") ck.meta.hop = std::stoi(val);
    else if (key == "sample_rate") ck.meta.sample_rate = std::stoi(val);
    else if (key == "c_sigma") ck.meta.c_sigma = std::stod(val);
    else if (key == "note") ck.meta.note = val;
  }
  if (input_dim == 0 || output_dim == 0) throw std::runtime_error("invalid checkpoint dimensions");

  auto read_dense = [&](std::size_t rows, std::size_t cols) {
    Dense d;
    d.rows = rows;
    d.cols = cols;
    d.w.resize(rows * cols);
    d.b.resize(rows);
    for (double& v : d.w) v = r.f64();
    for (double& v : d.b) v = r.f64();
    return d;
  };
  std::size_t prev = input_dim;
  for (std::size_t h : hidden_dims) {
    ck.params.hidden.push_back(read_dense(h, prev));
    prev = h;
  }
  ck.params.mask_head = read_dense(output_dim, prev);
  ck.params.var_head = read_dense(output_dim, prev);
  ck.stats.mean.resize(input_dim);
  ck.stats.std.resize(input_dim);
  for (double& v : ck.stats.mean) v = r.f64();
  for (double& v : ck.stats.std) v = r.f64();
  if (r.remaining() != 0) throw std::runtime_error("trailing bytes after checkpoint payload");
  return ck;
}

void save_checkpoint_file(const std::string& path, const NetworkParams& params,
                          const FeatureStats& stats, const CheckpointMeta& meta) {
  auto bytes = save_checkpoint(params, stats, meta);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint file for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return load_checkpoint(bytes);
}

}  // namespace osqa
