#pragma once

#include <span>
#include <vector>

#include "cpsp/complex_core.hpp"
#include "cpsp/kernels.hpp"
#include "cpsp/parameterization.hpp"

namespace cpsp {

// KL divergence sum_k zeta_k log zeta_k - sum_k zeta_k log zeta_hat_k
// (natural log, 1e-12 floor inside the logs).
double loss_power_split(std::span<const double> zeta, std::span<const double> zeta_hat);

// (1/K) sum_k (1 - |z_k^H zhat_k|^2) over unit vectors; throws when an input
// is not unit norm within 1e-9.
double loss_direction(const std::vector<CVec>& z, const std::vector<CVec>& z_hat);

// mean of 1 - cos(psi - psi_hat) over all angle entries
double loss_angles(std::span<const double> psi, std::span<const double> psi_hat);

// beta = R / R_hat clamped to [1e-3, 100]; treated as a constant weight
// during backpropagation.
double rate_penalty(double rate_label, double rate_pred);

// Per-sample component loss for one parameterization, evaluated on raw
// network outputs against an encoded label row. When `grad` is non-null it
// receives d(loss)/d(raw), the analytic gradient through the differentiable
// postprocessing (softmax, normalization, tanh/atan2 decoding).
double sample_loss(ParamKind kind, const SystemConfig& cfg,
                   std::span<const double> raw, std::span<const double> label,
                   double* grad);

// Rate-penalty weighted batch loss sum_i beta_i l_i / sum_i beta_i. The
// gradient rows are the per-sample gradients scaled by beta_i / sum beta.
double total_loss(ParamKind kind, const SystemConfig& cfg, const RowMatrix& raw,
                  const RowMatrix& labels, std::span<const double> beta,
                  RowMatrix* grad);

}  // namespace cpsp
