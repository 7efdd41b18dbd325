#pragma once

#include <complex>
#include <span>
#include <vector>

#include "osqa/nn.hpp"

namespace osqa {

// Per-frame loss with analytic partials in the linear-frequency domain.
// d_mask_lin / d_var_lin are gradients of `loss` w.r.t. the posterior's
// mask_lin and var_lin entries; the caller chains them to the mel heads via
// head_grads_from_linear.
struct FrameLikelihoodGrad {
  double loss = 0.0;
  std::vector<double> d_mask_lin;
  std::vector<double> d_var_lin;
};

// log p(S | X, mask, var) for one frame under the per-bin isotropic complex
// Gaussian: sum_w [ -ln(2 pi var_w) - |S_w - G_w X_w|^2 / (2 var_w) ].
double gaussian_log_likelihood(std::span<const std::complex<double>> S,
                               std::span<const std::complex<double>> X,
                               const MaskPosterior& post);

// Negative log-likelihood with head partials (per-utterance 1/T normalization
// is the caller's job).
FrameLikelihoodGrad ml_loss_and_head_grads(std::span<const std::complex<double>> S,
                                           std::span<const std::complex<double>> X,
                                           const MaskPosterior& post);

// PSA-target MMSE loss sum_w (G_w |X_w| - G^PSA_w |X_w|)^2; the variance head
// is unused and d_var_lin is identically zero.
FrameLikelihoodGrad psa_mmse_loss_and_head_grads(std::span<const std::complex<double>> S,
                                                 std::span<const std::complex<double>> X,
                                                 const MaskPosterior& post);

}  // namespace osqa
