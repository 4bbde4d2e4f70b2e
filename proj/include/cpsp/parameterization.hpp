#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cpsp/complex_core.hpp"
#include "cpsp/dataset.hpp"
#include "cpsp/kernels.hpp"

namespace cpsp {

// The four feature/label codecs.
//   RI  - min-max scaled real/imaginary parts of H and W.
//   NCV - unit-norm columns as real/imaginary parts, norms kept separately.
//   CPS - canonical projective representatives as 2N-1 real embeddings.
//   HSC - canonical representatives as hyperspherical angles, phases
//         transported as (sin, cos) pairs.
enum class ParamKind { RI, NCV, CPS, HSC };

const char* param_kind_name(ParamKind k);
ParamKind param_kind_from_name(const std::string& s);

std::size_t feature_dim(ParamKind kind, std::size_t n, std::size_t k);
std::size_t label_dim(ParamKind kind, std::size_t n, std::size_t k);

// Feature rows (dimension feature_dim):
//   RI  : per user [Re h_k | Im h_k] (scaled), then scaled SNR.
//   NCV : per user [Re a_k | Im a_k], K scaled channel norms, scaled SNR.
//   CPS : per user embed(g_k), K scaled channel norms, scaled SNR.
//   HSC : all theta_g - pi/4 (user-major), all (sin phi_g, cos phi_g) pairs,
//         K scaled channel norms, scaled SNR.
//
// Label rows (dimension label_dim):
//   RI  : per user [Re w_k | Im w_k] (scaled).
//   NCV : per user [Re b_k | Im b_k], then the power block.
//   CPS : per user embed(u_k), then the power block.
//   HSC : all theta_u in pre-tanh space atanh(4 theta/pi - 1) clamped to
//         +-20, all (sin phi_u, cos phi_u) pairs, then the power block.
//
// The power block holds log(zeta_k + 1e-12), whose softmax recovers the
// power split; network outputs for that block live in the same logit space,
// so postprocess() applied to a clean label row reproduces the labeled
// precoders.

// Column offsets within label rows.
std::size_t label_dir_offset(ParamKind kind, std::size_t n, std::size_t user);
std::size_t label_power_offset(ParamKind kind, std::size_t n, std::size_t k);
// HSC blocks: thetas at 0 (user-major), sin/cos pairs after all thetas.
std::size_t hsc_theta_offset(std::size_t n, std::size_t user);
std::size_t hsc_phase_offset(std::size_t n, std::size_t k, std::size_t user);

// Per-column affine scaling to [-1, 1]. Min-max columns are fitted on the
// training split only; the SNR column uses the fixed generation range; all
// other columns pass through unchanged.
struct Scaler {
  bool fitted = false;
  std::vector<double> f_lo, f_hi;
  std::vector<double> l_lo, l_hi;
  std::vector<bool> f_minmax, l_minmax;

  static double forward(double x, double lo, double hi);
  static double inverse(double y, double lo, double hi);
  void require_fitted() const;

  std::string to_json() const;
  static Scaler from_json(const std::string& text);
};

// Scaler skeleton with the column masks and fixed SNR range in place.
Scaler make_scaler(ParamKind kind, const SystemConfig& cfg, double snr_db_min,
                   double snr_db_max);

// One pass over the training rows to fit the min-max columns.
void fit_scaler(Scaler& sc, ParamKind kind, const SystemConfig& cfg,
                const Dataset& ds, std::span<const std::size_t> train_indices);

std::vector<double> featurize(ParamKind kind, const SystemConfig& cfg, const CMat& H,
                              double snr_db, const Scaler& sc);
std::vector<double> labelize(ParamKind kind, const SystemConfig& cfg, const CMat& H,
                             const CMat& W, const Scaler& sc);

// Map raw network outputs to a feasible precoder matrix with
// Tr(W W^H) <= P. Differentiable almost everywhere for NCV/CPS/HSC; RI is a
// plain inverse scaling followed by a power projection.
CMat postprocess(ParamKind kind, const SystemConfig& cfg, std::span<const double> raw,
                 double power, const Scaler& sc);

// zeta_k = |w_k|^2 / sum_j |w_j|^2
std::vector<double> power_split(const CMat& W);

// softmax into `out`; numerically shifted by the max logit
void softmax(std::span<const double> logits, std::span<double> out);

// Batched rows for the training loop; parallel over samples.
RowMatrix featurize_batch(ParamKind kind, const SystemConfig& cfg, const Dataset& ds,
                          std::span<const std::size_t> indices, const Scaler& sc);
RowMatrix labelize_batch(ParamKind kind, const SystemConfig& cfg, const Dataset& ds,
                         std::span<const std::size_t> indices, const Scaler& sc);

}  // namespace cpsp
