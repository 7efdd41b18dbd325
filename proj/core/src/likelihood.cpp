#include "osqa/likelihood.hpp"

#include <cmath>
#include <stdexcept>

#include "osqa/masks.hpp"

namespace osqa {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

void check(std::span<const std::complex<double>> S, std::span<const std::complex<double>> X,
           const MaskPosterior& post) {
  if (S.size() != X.size() || S.size() != post.mask_lin.size() ||
      S.size() != post.var_lin.size()) {
    throw std::invalid_argument("shape mismatch");
  }
  for (double v : post.var_lin) {
    if (v <= 0.0) throw std::invalid_argument("nonpositive variance");
  }
}
}  // namespace

double gaussian_log_likelihood(std::span<const std::complex<double>> S,
                               std::span<const std::complex<double>> X,
                               const MaskPosterior& post) {
  check(S, X, post);
  double ll = 0.0;
  for (std::size_t w = 0; w < S.size(); ++w) {
    const double var = post.var_lin[w];
    const std::complex<double> e = S[w] - post.mask_lin[w] * X[w];
    ll += -std::log(kTwoPi * var) - std::norm(e) / (2.0 * var);
  }
  return ll;
}

FrameLikelihoodGrad ml_loss_and_head_grads(std::span<const std::complex<double>> S,
                                           std::span<const std::complex<double>> X,
                                           const MaskPosterior& post) {
  check(S, X, post);
  FrameLikelihoodGrad g;
  g.d_mask_lin.resize(S.size());
  g.d_var_lin.resize(S.size());
  for (std::size_t w = 0; w < S.size(); ++w) {
    const double var = post.var_lin[w];
    const double er = S[w].real() - post.mask_lin[w] * X[w].real();
    const double ei = S[w].imag() - post.mask_lin[w] * X[w].imag();
    const double err2 = er * er + ei * ei;
    g.loss += std::log(kTwoPi * var) + err2 / (2.0 * var);
    // d(-ll)/dG = -(e_r X_r + e_i X_i) / var
    g.d_mask_lin[w] = -(er * X[w].real() + ei * X[w].imag()) / var;
    // d(-ll)/dvar = 1/var - err2 / (2 var^2)
    g.d_var_lin[w] = 1.0 / var - err2 / (2.0 * var * var);
  }
  return g;
}

FrameLikelihoodGrad psa_mmse_loss_and_head_grads(std::span<const std::complex<double>> S,
                                                 std::span<const std::complex<double>> X,
                                                 const MaskPosterior& post) {
  check(S, X, post);
  FrameLikelihoodGrad g;
  g.d_mask_lin.resize(S.size());
  g.d_var_lin.assign(S.size(), 0.0);
  for (std::size_t w = 0; w < S.size(); ++w) {
    const double ax = std::abs(X[w]);
    const double target = psa_gain(S[w], X[w]);
    const double d = (post.mask_lin[w] - target) * ax;
    g.loss += d * d;
    g.d_mask_lin[w] = 2.0 * d * ax;
  }
  return g;
}

}  // namespace osqa
