#include "cpsp/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cpsp/geometry.hpp"

namespace cpsp {

namespace {

constexpr double kLogFloor = 1e-12;
constexpr double kPi = 3.14159265358979323846;

// KL between a decoded-true split and softmax(raw logits), with the gradient
// w.r.t. the logits: g_m = zh_m * (w_m - sum_k w_k zh_k), w_k = -z_k/(zh_k+eps).
double kl_with_logit_grad(std::span<const double> zeta, std::span<const double> zeta_hat,
                          double* grad_logits) {
  const std::size_t k = zeta.size();
  double val = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    val += zeta[i] * (std::log(zeta[i] + kLogFloor) - std::log(zeta_hat[i] + kLogFloor));
  if (grad_logits != nullptr) {
    double dot = 0.0;
    std::vector<double> w(k);
    for (std::size_t i = 0; i < k; ++i) {
      w[i] = -zeta[i] / (zeta_hat[i] + kLogFloor);
      dot += w[i] * zeta_hat[i];
    }
    for (std::size_t i = 0; i < k; ++i) grad_logits[i] += zeta_hat[i] * (w[i] - dot);
  }
  return val;
}

// 1 - |u^H t|^2 / |t|^2 for a direction block of `reals` raw values laid out
// as [Re(t_1..t_n) | Im(t_2..t_n)] (CPS, reals = 2n-1) or
// [Re(t_1..t_n) | Im(t_1..t_n)] (NCV, reals = 2n). Adds the gradient scaled
// by `weight` into grad_block when non-null.
double direction_term(const CVec& u, std::span<const double> block, std::size_t n,
                      bool first_imag_present, double weight, double* grad_block) {
  CVec t(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double re = block[i];
    double im = 0.0;
    if (first_imag_present)
      im = block[n + i];
    else if (i > 0)
      im = block[n + i - 1];
    t[i] = cxd(re, im);
  }
  const double n2 = t.norm2();
  if (n2 < 1e-300) return 1.0;  // zero direction: maximal loss, no gradient
  cxd z{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) z += std::conj(u[i]) * t[i];
  const double z2 = z.real() * z.real() + z.imag() * z.imag();
  const double val = 1.0 - z2 / n2;

  if (grad_block != nullptr) {
    const cxd zc = std::conj(z);
    for (std::size_t i = 0; i < n; ++i) {
      const cxd zu = zc * std::conj(u[i]);
      // d(z2)/dRe(t_i), d(n2)/dRe(t_i)
      const double dz2_re = 2.0 * zu.real();
      const double dn2_re = 2.0 * t[i].real();
      const double g_re = -(dz2_re * n2 - z2 * dn2_re) / (n2 * n2);
      grad_block[i] += weight * g_re;
      if (first_imag_present || i > 0) {
        const double dz2_im = -2.0 * zu.imag();
        const double dn2_im = 2.0 * t[i].imag();
        const double g_im = -(dz2_im * n2 - z2 * dn2_im) / (n2 * n2);
        const std::size_t ii = first_imag_present ? n + i : n + i - 1;
        grad_block[ii] += weight * g_im;
      }
    }
  }
  return val;
}

double decode_theta(double y) { return (std::tanh(y) + 1.0) * kPi / 4.0; }

}  // namespace

double loss_power_split(std::span<const double> zeta, std::span<const double> zeta_hat) {
  if (zeta.size() != zeta_hat.size())
    throw std::invalid_argument("loss_power_split: size mismatch");
  double val = 0.0;
  for (std::size_t i = 0; i < zeta.size(); ++i)
    val += zeta[i] * (std::log(zeta[i] + kLogFloor) - std::log(zeta_hat[i] + kLogFloor));
  return val;
}

double loss_direction(const std::vector<CVec>& z, const std::vector<CVec>& z_hat) {
  if (z.size() != z_hat.size())
    throw std::invalid_argument("loss_direction: size mismatch");
  double val = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (std::abs(z[k].norm() - 1.0) > 1e-9 || std::abs(z_hat[k].norm() - 1.0) > 1e-9)
      throw std::invalid_argument("loss_direction: inputs must be unit norm");
    const cxd ip = inner(z[k], z_hat[k]);
    val += 1.0 - (ip.real() * ip.real() + ip.imag() * ip.imag());
  }
  return val / static_cast<double>(z.size());
}

double loss_angles(std::span<const double> psi, std::span<const double> psi_hat) {
  if (psi.size() != psi_hat.size())
    throw std::invalid_argument("loss_angles: size mismatch");
  double val = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) val += 1.0 - std::cos(psi[i] - psi_hat[i]);
  return val / static_cast<double>(psi.size());
}

double rate_penalty(double rate_label, double rate_pred) {
  const double beta = rate_pred > 0.0 ? rate_label / rate_pred : 100.0;
  return std::clamp(beta, 1e-3, 100.0);
}

double sample_loss(ParamKind kind, const SystemConfig& cfg,
                   std::span<const double> raw, std::span<const double> label,
                   double* grad) {
  const std::size_t n = cfg.n_antennas;
  const std::size_t k_users = cfg.n_users;
  const std::size_t ld = label_dim(kind, n, k_users);
  if (raw.size() != ld || label.size() != ld)
    throw std::invalid_argument("sample_loss: dimension mismatch");
  if (grad != nullptr)
    for (std::size_t i = 0; i < ld; ++i) grad[i] = 0.0;

  if (kind == ParamKind::RI) {
    // scaled-space MSE normalized by 2NK
    const double inv = 1.0 / static_cast<double>(ld);
    double val = 0.0;
    for (std::size_t i = 0; i < ld; ++i) {
      const double d = label[i] - raw[i];
      val += d * d;
      if (grad != nullptr) grad[i] = 2.0 * inv * (raw[i] - label[i]);
    }
    return val * inv;
  }

  // power split term, shared by the remaining kinds
  const std::size_t po = label_power_offset(kind, n, k_users);
  std::vector<double> zeta(k_users), zeta_hat(k_users);
  softmax(label.subspan(po, k_users), std::span<double>(zeta));
  softmax(raw.subspan(po, k_users), std::span<double>(zeta_hat));
  double val = kl_with_logit_grad(zeta, zeta_hat, grad ? grad + po : nullptr);

  if (kind == ParamKind::HSC) {
    const std::size_t na = n - 1;
    const double wt_theta = 1.0 / static_cast<double>(k_users * na);
    const double wt_phi = 0.5 * wt_theta;
    double theta_sum = 0.0, phi_sum = 0.0;
    for (std::size_t k = 0; k < k_users; ++k) {
      for (std::size_t m = 0; m < na; ++m) {
        const std::size_t ti = hsc_theta_offset(n, k) + m;
        const double theta_true = decode_theta(label[ti]);
        const double th = std::tanh(raw[ti]);
        const double theta_pred = (th + 1.0) * kPi / 4.0;
        theta_sum += 1.0 - std::cos(theta_true - theta_pred);
        if (grad != nullptr)
          grad[ti] += wt_theta * std::sin(theta_pred - theta_true) *
                      (kPi / 4.0) * (1.0 - th * th);
      }
      const std::size_t pb = hsc_phase_offset(n, k_users, k);
      for (std::size_t m = 0; m < na; ++m) {
        const double phi_true = std::atan2(label[pb + 2 * m], label[pb + 2 * m + 1]);
        const double sv = raw[pb + 2 * m], cv = raw[pb + 2 * m + 1];
        const double r2 = sv * sv + cv * cv;
        if (r2 < 1e-300) {
          phi_sum += 1.0 - std::cos(phi_true);  // phi_pred := 0, flat gradient
          continue;
        }
        const double phi_pred = std::atan2(sv, cv);
        phi_sum += 1.0 - std::cos(phi_true - phi_pred);
        if (grad != nullptr) {
          const double s = std::sin(phi_pred - phi_true);
          grad[pb + 2 * m] += wt_phi * s * (cv / r2);
          grad[pb + 2 * m + 1] += wt_phi * s * (-sv / r2);
        }
      }
    }
    val += theta_sum * wt_theta + phi_sum * wt_phi;
    return val;
  }

  // CPS / NCV precoder direction term
  const bool ncv = kind == ParamKind::NCV;
  const std::size_t block = ncv ? 2 * n : embed_dim(n);
  const double wt = 1.0 / static_cast<double>(k_users);
  double dir_sum = 0.0;
  for (std::size_t k = 0; k < k_users; ++k) {
    const std::size_t off = label_dir_offset(kind, n, k);
    CVec u(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double re = label[off + i];
      const double im = ncv ? label[off + n + i] : (i > 0 ? label[off + n + i - 1] : 0.0);
      u[i] = cxd(re, im);
    }
    dir_sum += direction_term(u, raw.subspan(off, block), n, ncv, wt,
                              grad ? grad + off : nullptr);
  }
  return val + dir_sum * wt;
}

double total_loss(ParamKind kind, const SystemConfig& cfg, const RowMatrix& raw,
                  const RowMatrix& labels, std::span<const double> beta,
                  RowMatrix* grad) {
  if (raw.rows != labels.rows || raw.rows != beta.size())
    throw std::invalid_argument("total_loss: batch size mismatch");
  if (grad != nullptr && (grad->rows != raw.rows || grad->cols != raw.cols))
    throw std::invalid_argument("total_loss: gradient shape mismatch");

  double beta_sum = 0.0;
  for (double b : beta) beta_sum += b;
  if (!(beta_sum > 0.0)) throw std::invalid_argument("total_loss: non-positive beta sum");

  std::vector<double> values(raw.rows);
#pragma omp parallel for schedule(static) if (kernels::threads() > 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(raw.rows); ++i) {
    values[i] = sample_loss(kind, cfg,
                            std::span<const double>(raw.row(i), raw.cols),
                            std::span<const double>(labels.row(i), labels.cols),
                            grad ? grad->row(i) : nullptr);
    if (grad != nullptr) {
      const double f = beta[i] / beta_sum;
      double* g = grad->row(i);
      for (std::size_t c = 0; c < raw.cols; ++c) g[c] *= f;
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < raw.rows; ++i) total += beta[i] * values[i];
  return total / beta_sum;
}

}  // namespace cpsp
