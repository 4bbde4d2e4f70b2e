#include "cpsp/parameterization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "cpsp/geometry.hpp"

namespace cpsp {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kZetaFloor = 1e-12;
constexpr double kAtanhClamp = 20.0;

// pre-tanh encoding of an amplitude angle in [0, pi/2]
double encode_theta(double theta) {
  const double x = 4.0 * theta / kPi - 1.0;
  double y = std::atanh(std::clamp(x, -1.0, 1.0));
  return std::clamp(y, -kAtanhClamp, kAtanhClamp);
}

CVec unit_or_e1(const CVec& x) {
  const double nrm = x.norm();
  CVec u(x.dim());
  if (nrm < 1e-300) {
    u[0] = 1.0;
    return u;
  }
  for (std::size_t i = 0; i < x.dim(); ++i) u[i] = x[i] / nrm;
  return u;
}

CpsPoint cps_or_e1(const CVec& x) {
  if (x.norm() == 0.0) {
    CpsPoint p;
    p.v = CVec(x.dim());
    p.v[0] = 1.0;
    return p;
  }
  return project_to_cps(x).point;
}

void write_power_block(const CMat& w, double* out) {
  const std::vector<double> zeta = power_split(w);
  for (std::size_t k = 0; k < zeta.size(); ++k) out[k] = std::log(zeta[k] + kZetaFloor);
}

// raw (pre-scaling) feature row
void featurize_raw(ParamKind kind, const SystemConfig& cfg, const CMat& H,
                   double snr_db, double* out) {
  const std::size_t n = cfg.n_antennas;
  const std::size_t k_users = cfg.n_users;
  H.check_shape(n, k_users, "featurize: H");

  switch (kind) {
    case ParamKind::RI: {
      for (std::size_t k = 0; k < k_users; ++k)
        for (std::size_t i = 0; i < n; ++i) {
          out[2 * n * k + i] = H.col[k][i].real();
          out[2 * n * k + n + i] = H.col[k][i].imag();
        }
      out[2 * n * k_users] = snr_db;
      return;
    }
    case ParamKind::NCV: {
      for (std::size_t k = 0; k < k_users; ++k) {
        const CVec a = unit_or_e1(H.col[k]);
        for (std::size_t i = 0; i < n; ++i) {
          out[2 * n * k + i] = a[i].real();
          out[2 * n * k + n + i] = a[i].imag();
        }
        out[2 * n * k_users + k] = H.col[k].norm();
      }
      out[2 * n * k_users + k_users] = snr_db;
      return;
    }
    case ParamKind::CPS: {
      const std::size_t ed = embed_dim(n);
      for (std::size_t k = 0; k < k_users; ++k) {
        const CpsProjection pr = project_to_cps(H.col[k]);
        embed_cps(pr.point, std::span<double>(out + ed * k, ed));
        out[ed * k_users + k] = pr.norm;
      }
      out[ed * k_users + k_users] = snr_db;
      return;
    }
    case ParamKind::HSC: {
      const std::size_t na = n - 1;  // angles per user
      for (std::size_t k = 0; k < k_users; ++k) {
        const CpsProjection pr = project_to_cps(H.col[k]);
        const HypersphericalCoords hc = to_hyperspherical(pr.point);
        for (std::size_t m = 0; m < na; ++m) out[k * na + m] = hc.theta[m] - kPi / 4.0;
        double* ph = out + k_users * na + k * 2 * na;
        for (std::size_t m = 0; m < na; ++m) {
          ph[2 * m] = std::sin(hc.phi[m]);
          ph[2 * m + 1] = std::cos(hc.phi[m]);
        }
        out[k_users * 3 * na + k] = pr.norm;
      }
      out[k_users * (3 * na + 1)] = snr_db;
      return;
    }
  }
  throw std::invalid_argument("featurize: unknown kind");
}

void labelize_raw(ParamKind kind, const SystemConfig& cfg, const CMat& W, double* out) {
  const std::size_t n = cfg.n_antennas;
  const std::size_t k_users = cfg.n_users;
  W.check_shape(n, k_users, "labelize: W");

  switch (kind) {
    case ParamKind::RI: {
      for (std::size_t k = 0; k < k_users; ++k)
        for (std::size_t i = 0; i < n; ++i) {
          out[2 * n * k + i] = W.col[k][i].real();
          out[2 * n * k + n + i] = W.col[k][i].imag();
        }
      return;
    }
    case ParamKind::NCV: {
      for (std::size_t k = 0; k < k_users; ++k) {
        const CVec b = unit_or_e1(W.col[k]);
        for (std::size_t i = 0; i < n; ++i) {
          out[2 * n * k + i] = b[i].real();
          out[2 * n * k + n + i] = b[i].imag();
        }
      }
      write_power_block(W, out + 2 * n * k_users);
      return;
    }
    case ParamKind::CPS: {
      const std::size_t ed = embed_dim(n);
      for (std::size_t k = 0; k < k_users; ++k)
        embed_cps(cps_or_e1(W.col[k]), std::span<double>(out + ed * k, ed));
      write_power_block(W, out + ed * k_users);
      return;
    }
    case ParamKind::HSC: {
      const std::size_t na = n - 1;
      for (std::size_t k = 0; k < k_users; ++k) {
        const HypersphericalCoords hc = to_hyperspherical(cps_or_e1(W.col[k]));
        for (std::size_t m = 0; m < na; ++m) out[k * na + m] = encode_theta(hc.theta[m]);
        double* ph = out + k_users * na + k * 2 * na;
        for (std::size_t m = 0; m < na; ++m) {
          ph[2 * m] = std::sin(hc.phi[m]);
          ph[2 * m + 1] = std::cos(hc.phi[m]);
        }
      }
      write_power_block(W, out + k_users * 3 * na);
      return;
    }
  }
  throw std::invalid_argument("labelize: unknown kind");
}

}  // namespace

const char* param_kind_name(ParamKind k) {
  switch (k) {
    case ParamKind::RI: return "ri";
    case ParamKind::NCV: return "ncv";
    case ParamKind::CPS: return "cps";
    case ParamKind::HSC: return "hsc";
  }
  return "?";
}

ParamKind param_kind_from_name(const std::string& s) {
  if (s == "ri") return ParamKind::RI;
  if (s == "ncv") return ParamKind::NCV;
  if (s == "cps") return ParamKind::CPS;
  if (s == "hsc") return ParamKind::HSC;
  throw std::invalid_argument("unknown parameterization '" + s + "'");
}

std::size_t feature_dim(ParamKind kind, std::size_t n, std::size_t k) {
  switch (kind) {
    case ParamKind::RI: return 2 * n * k + 1;
    case ParamKind::NCV: return 2 * n * k + k + 1;
    case ParamKind::CPS: return 2 * n * k + 1;
    case ParamKind::HSC: return k * (3 * n - 2) + 1;
  }
  throw std::invalid_argument("feature_dim: unknown kind");
}

std::size_t label_dim(ParamKind kind, std::size_t n, std::size_t k) {
  switch (kind) {
    case ParamKind::RI: return 2 * n * k;
    case ParamKind::NCV: return 2 * n * k + k;
    case ParamKind::CPS: return 2 * n * k;
    case ParamKind::HSC: return k * (3 * n - 2);
  }
  throw std::invalid_argument("label_dim: unknown kind");
}

std::size_t label_dir_offset(ParamKind kind, std::size_t n, std::size_t user) {
  switch (kind) {
    case ParamKind::RI:
    case ParamKind::NCV: return 2 * n * user;
    case ParamKind::CPS: return embed_dim(n) * user;
    case ParamKind::HSC: break;
  }
  throw std::invalid_argument("label_dir_offset: no single direction block");
}

std::size_t label_power_offset(ParamKind kind, std::size_t n, std::size_t k) {
  switch (kind) {
    case ParamKind::NCV: return 2 * n * k;
    case ParamKind::CPS: return embed_dim(n) * k;
    case ParamKind::HSC: return k * (3 * n - 2) - k;
    case ParamKind::RI: break;
  }
  throw std::invalid_argument("label_power_offset: kind has no power block");
}

std::size_t hsc_theta_offset(std::size_t n, std::size_t user) {
  return user * (n - 1);
}

std::size_t hsc_phase_offset(std::size_t n, std::size_t k, std::size_t user) {
  return k * (n - 1) + user * 2 * (n - 1);
}

double Scaler::forward(double x, double lo, double hi) {
  if (hi == lo) return 0.0;
  return 2.0 * (x - lo) / (hi - lo) - 1.0;
}

double Scaler::inverse(double y, double lo, double hi) {
  return lo + 0.5 * (y + 1.0) * (hi - lo);
}

void Scaler::require_fitted() const {
  if (!fitted) throw std::runtime_error("scaler: not fitted");
}

std::string Scaler::to_json() const {
  nlohmann::json j;
  j["fitted"] = fitted;
  j["f_lo"] = f_lo;
  j["f_hi"] = f_hi;
  j["l_lo"] = l_lo;
  j["l_hi"] = l_hi;
  j["f_minmax"] = std::vector<int>(f_minmax.begin(), f_minmax.end());
  j["l_minmax"] = std::vector<int>(l_minmax.begin(), l_minmax.end());
  return j.dump();
}

Scaler Scaler::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  Scaler s;
  s.fitted = j.at("fitted").get<bool>();
  s.f_lo = j.at("f_lo").get<std::vector<double>>();
  s.f_hi = j.at("f_hi").get<std::vector<double>>();
  s.l_lo = j.at("l_lo").get<std::vector<double>>();
  s.l_hi = j.at("l_hi").get<std::vector<double>>();
  for (int v : j.at("f_minmax").get<std::vector<int>>()) s.f_minmax.push_back(v != 0);
  for (int v : j.at("l_minmax").get<std::vector<int>>()) s.l_minmax.push_back(v != 0);
  return s;
}

Scaler make_scaler(ParamKind kind, const SystemConfig& cfg, double snr_db_min,
                   double snr_db_max) {
  const std::size_t n = cfg.n_antennas;
  const std::size_t k = cfg.n_users;
  const std::size_t fd = feature_dim(kind, n, k);
  const std::size_t ld = label_dim(kind, n, k);

  Scaler s;
  s.f_lo.assign(fd, -1.0);
  s.f_hi.assign(fd, 1.0);
  s.l_lo.assign(ld, -1.0);
  s.l_hi.assign(ld, 1.0);
  s.f_minmax.assign(fd, false);
  s.l_minmax.assign(ld, false);

  auto mark_feature = [&](std::size_t col) {
    s.f_minmax[col] = true;
    s.f_lo[col] = std::numeric_limits<double>::infinity();
    s.f_hi[col] = -std::numeric_limits<double>::infinity();
  };

  switch (kind) {
    case ParamKind::RI:
      for (std::size_t c = 0; c < 2 * n * k; ++c) mark_feature(c);
      for (std::size_t c = 0; c < ld; ++c) {
        s.l_minmax[c] = true;
        s.l_lo[c] = std::numeric_limits<double>::infinity();
        s.l_hi[c] = -std::numeric_limits<double>::infinity();
      }
      break;
    case ParamKind::NCV:
      for (std::size_t c = 2 * n * k; c < 2 * n * k + k; ++c) mark_feature(c);
      break;
    case ParamKind::CPS:
      for (std::size_t c = embed_dim(n) * k; c < embed_dim(n) * k + k; ++c)
        mark_feature(c);
      break;
    case ParamKind::HSC:
      for (std::size_t c = k * (3 * n - 3); c < k * (3 * n - 3) + k; ++c)
        mark_feature(c);
      break;
  }

  // SNR column: fixed affine map over the generation range
  s.f_lo[fd - 1] = snr_db_min;
  s.f_hi[fd - 1] = snr_db_max;
  return s;
}

void fit_scaler(Scaler& sc, ParamKind kind, const SystemConfig& cfg,
                const Dataset& ds, std::span<const std::size_t> train_indices) {
  const std::size_t fd = sc.f_lo.size();
  const std::size_t ld = sc.l_lo.size();
  std::vector<double> frow(fd), lrow(ld);
  for (std::size_t idx : train_indices) {
    const ChannelSample& s = ds.samples[idx];
    featurize_raw(kind, cfg, s.H, s.snr_db, frow.data());
    labelize_raw(kind, cfg, s.W_label, lrow.data());
    for (std::size_t c = 0; c < fd; ++c)
      if (sc.f_minmax[c]) {
        sc.f_lo[c] = std::min(sc.f_lo[c], frow[c]);
        sc.f_hi[c] = std::max(sc.f_hi[c], frow[c]);
      }
    for (std::size_t c = 0; c < ld; ++c)
      if (sc.l_minmax[c]) {
        sc.l_lo[c] = std::min(sc.l_lo[c], lrow[c]);
        sc.l_hi[c] = std::max(sc.l_hi[c], lrow[c]);
      }
  }
  sc.fitted = true;
}

std::vector<double> featurize(ParamKind kind, const SystemConfig& cfg, const CMat& H,
                              double snr_db, const Scaler& sc) {
  sc.require_fitted();
  std::vector<double> row(feature_dim(kind, cfg.n_antennas, cfg.n_users));
  featurize_raw(kind, cfg, H, snr_db, row.data());
  for (std::size_t c = 0; c < row.size(); ++c)
    row[c] = Scaler::forward(row[c], sc.f_lo[c], sc.f_hi[c]);
  return row;
}

std::vector<double> labelize(ParamKind kind, const SystemConfig& cfg, const CMat& H,
                             const CMat& W, const Scaler& sc) {
  (void)H;
  sc.require_fitted();
  std::vector<double> row(label_dim(kind, cfg.n_antennas, cfg.n_users));
  labelize_raw(kind, cfg, W, row.data());
  if (kind == ParamKind::RI)
    for (std::size_t c = 0; c < row.size(); ++c)
      row[c] = Scaler::forward(row[c], sc.l_lo[c], sc.l_hi[c]);
  return row;
}

void softmax(std::span<const double> logits, std::span<double> out) {
  double m = logits[0];
  for (double x : logits) m = std::max(m, x);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    sum += out[i];
  }
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] /= sum;
}

std::vector<double> power_split(const CMat& W) {
  std::vector<double> zeta(W.cols());
  double total = 0.0;
  for (std::size_t k = 0; k < W.cols(); ++k) {
    zeta[k] = W.col[k].norm2();
    total += zeta[k];
  }
  if (total == 0.0) {
    std::fill(zeta.begin(), zeta.end(), 1.0 / static_cast<double>(W.cols()));
    return zeta;
  }
  for (double& z : zeta) z /= total;
  return zeta;
}

CMat postprocess(ParamKind kind, const SystemConfig& cfg, std::span<const double> raw,
                 double power, const Scaler& sc) {
  const std::size_t n = cfg.n_antennas;
  const std::size_t k_users = cfg.n_users;
  if (raw.size() != label_dim(kind, n, k_users))
    throw std::invalid_argument("postprocess: raw size mismatch");

  CMat w(n, k_users);

  if (kind == ParamKind::RI) {
    sc.require_fitted();
    for (std::size_t k = 0; k < k_users; ++k)
      for (std::size_t i = 0; i < n; ++i)
        w.col[k][i] = cxd(Scaler::inverse(raw[2 * n * k + i], sc.l_lo[2 * n * k + i],
                                          sc.l_hi[2 * n * k + i]),
                          Scaler::inverse(raw[2 * n * k + n + i],
                                          sc.l_lo[2 * n * k + n + i],
                                          sc.l_hi[2 * n * k + n + i]));
    const double tr = w.fro_norm2();
    if (tr > power) {
      const double f = std::sqrt(power / tr);
      for (CVec& c : w.col)
        for (cxd& x : c.e) x *= f;
    }
    return w;
  }

  std::vector<double> zeta(k_users);
  softmax(raw.subspan(label_power_offset(kind, n, k_users), k_users),
          std::span<double>(zeta));

  for (std::size_t k = 0; k < k_users; ++k) {
    CVec dir(n);
    if (kind == ParamKind::HSC) {
      const std::size_t na = n - 1;
      HypersphericalCoords hc;
      hc.theta.resize(na);
      hc.phi.resize(na);
      for (std::size_t m = 0; m < na; ++m)
        hc.theta[m] = (std::tanh(raw[hsc_theta_offset(n, k) + m]) + 1.0) * kPi / 4.0;
      const double* ph = raw.data() + hsc_phase_offset(n, k_users, k);
      for (std::size_t m = 0; m < na; ++m) {
        const double sv = ph[2 * m], cv = ph[2 * m + 1];
        const double r = std::sqrt(sv * sv + cv * cv);
        hc.phi[m] = r < 1e-300 ? 0.0 : std::atan2(sv / r, cv / r);
      }
      dir = from_hyperspherical(hc).v;
    } else {
      const std::size_t off = label_dir_offset(kind, n, k);
      if (kind == ParamKind::CPS)
        dir = unembed_cps(raw.subspan(off, embed_dim(n)), n).v;
      else
        for (std::size_t i = 0; i < n; ++i) dir[i] = cxd(raw[off + i], raw[off + n + i]);
      const double nrm = dir.norm();
      if (nrm < 1e-300) {
        std::fprintf(stderr, "postprocess: zero direction for user %zu, using e1\n", k);
        for (std::size_t i = 0; i < n; ++i) dir[i] = 0.0;
        dir[0] = 1.0;
      } else {
        for (std::size_t i = 0; i < n; ++i) dir[i] /= nrm;
        // keep CPS predictions inside the canonical chart
        if (kind == ParamKind::CPS && dir[0].real() < 0.0)
          for (std::size_t i = 0; i < n; ++i) dir[i] = -dir[i];
      }
    }
    const double amp = std::sqrt(zeta[k] * power);
    for (std::size_t i = 0; i < n; ++i) w.col[k][i] = amp * dir[i];
  }
  return w;
}

RowMatrix featurize_batch(ParamKind kind, const SystemConfig& cfg, const Dataset& ds,
                          std::span<const std::size_t> indices, const Scaler& sc) {
  sc.require_fitted();
  const std::size_t fd = feature_dim(kind, cfg.n_antennas, cfg.n_users);
  RowMatrix m(indices.size(), fd);
#pragma omp parallel for schedule(static) if (kernels::threads() > 1)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(indices.size()); ++r) {
    const ChannelSample& s = ds.samples[indices[r]];
    double* row = m.row(r);
    featurize_raw(kind, cfg, s.H, s.snr_db, row);
    for (std::size_t c = 0; c < fd; ++c)
      row[c] = Scaler::forward(row[c], sc.f_lo[c], sc.f_hi[c]);
  }
  return m;
}

RowMatrix labelize_batch(ParamKind kind, const SystemConfig& cfg, const Dataset& ds,
                         std::span<const std::size_t> indices, const Scaler& sc) {
  sc.require_fitted();
  const std::size_t ld = label_dim(kind, cfg.n_antennas, cfg.n_users);
  RowMatrix m(indices.size(), ld);
#pragma omp parallel for schedule(static) if (kernels::threads() > 1)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(indices.size()); ++r) {
    const ChannelSample& s = ds.samples[indices[r]];
    double* row = m.row(r);
    labelize_raw(kind, cfg, s.W_label, row);
    if (kind == ParamKind::RI)
      for (std::size_t c = 0; c < ld; ++c)
        row[c] = Scaler::forward(row[c], sc.l_lo[c], sc.l_hi[c]);
  }
  return m;
}

}  // namespace cpsp
