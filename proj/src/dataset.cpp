#include "cpsp/dataset.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "cpsp/kernels.hpp"
#include "cpsp/rng.hpp"

namespace cpsp {

namespace {

constexpr char kMagic[4] = {'C', 'P', 'S', 'D'};

const char* init_mode_name(InitMode m) {
  return m == InitMode::MrtFullPower ? "mrt_full_power" : "scaled_random";
}

InitMode init_mode_from_name(const std::string& s) {
  if (s == "mrt_full_power") return InitMode::MrtFullPower;
  if (s == "scaled_random") return InitMode::ScaledRandom;
  throw std::invalid_argument("manifest: unknown init mode '" + s + "'");
}

void write_cmat(std::ofstream& out, const CMat& m) {
  for (const CVec& c : m.col)
    for (const cxd& x : c.e) {
      const double re = x.real(), im = x.imag();
      out.write(reinterpret_cast<const char*>(&re), sizeof(double));
      out.write(reinterpret_cast<const char*>(&im), sizeof(double));
    }
}

CMat read_cmat(std::ifstream& in, std::size_t n, std::size_t k) {
  CMat m(n, k);
  for (CVec& c : m.col)
    for (cxd& x : c.e) {
      double re, im;
      in.read(reinterpret_cast<char*>(&re), sizeof(double));
      in.read(reinterpret_cast<char*>(&im), sizeof(double));
      x = cxd(re, im);
    }
  return m;
}

}  // namespace

std::string DatasetManifest::to_json() const {
  nlohmann::json j;
  j["format_version"] = format_version;
  j["n_antennas"] = n_antennas;
  j["n_users"] = n_users;
  j["noise_variance"] = noise_variance;
  j["n_samples"] = n_samples;
  j["snr_db_min"] = snr_db_min;
  j["snr_db_max"] = snr_db_max;
  j["seed"] = seed;
  j["split_seed"] = split_seed;
  j["wmmse"] = {{"max_iter", wmmse.max_iter},
                {"convergence_tol", wmmse.convergence_tol},
                {"bisection_tol", wmmse.bisection_tol},
                {"bisection_max_steps", wmmse.bisection_max_steps},
                {"init_mode", init_mode_name(wmmse.init_mode)}};
  return j.dump(2);
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  DatasetManifest m;
  m.format_version = j.at("format_version").get<std::uint32_t>();
  m.n_antennas = j.at("n_antennas").get<std::size_t>();
  m.n_users = j.at("n_users").get<std::size_t>();
  m.noise_variance = j.at("noise_variance").get<double>();
  m.n_samples = j.at("n_samples").get<std::uint64_t>();
  m.snr_db_min = j.at("snr_db_min").get<double>();
  m.snr_db_max = j.at("snr_db_max").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.split_seed = j.value("split_seed", std::uint64_t{0});
  const auto& w = j.at("wmmse");
  m.wmmse.max_iter = w.at("max_iter").get<int>();
  m.wmmse.convergence_tol = w.at("convergence_tol").get<double>();
  m.wmmse.bisection_tol = w.at("bisection_tol").get<double>();
  m.wmmse.bisection_max_steps = w.at("bisection_max_steps").get<int>();
  m.wmmse.init_mode = init_mode_from_name(w.at("init_mode").get<std::string>());
  return m;
}

Dataset generate_dataset(const SystemConfig& cfg, std::uint64_t n_samples,
                         std::uint64_t seed, const WmmseOptions& wmmse_opts,
                         double snr_db_min, double snr_db_max) {
  cfg.validate();
  wmmse_opts.validate();
  if (!(snr_db_min <= snr_db_max))
    throw std::invalid_argument("generate_dataset: bad SNR range");

  // label runs never early-stop, so every label is exactly max_iter iterations
  WmmseOptions label_opts = wmmse_opts;
  label_opts.convergence_tol = 0.0;

  Dataset ds;
  ds.meta.n_antennas = cfg.n_antennas;
  ds.meta.n_users = cfg.n_users;
  ds.meta.noise_variance = cfg.noise_variance;
  ds.meta.n_samples = n_samples;
  ds.meta.snr_db_min = snr_db_min;
  ds.meta.snr_db_max = snr_db_max;
  ds.meta.seed = seed;
  ds.meta.split_seed = seed;
  ds.meta.wmmse = label_opts;
  ds.samples.resize(n_samples);

#pragma omp parallel for schedule(dynamic, 64) if (kernels::threads() > 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n_samples); ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    ChannelSample& s = ds.samples[i];
    s.sample_id = static_cast<std::uint64_t>(i);
    s.snr_db = rng.uniform(snr_db_min, snr_db_max);
    s.H = CMat(cfg.n_antennas, cfg.n_users);
    for (std::size_t k = 0; k < cfg.n_users; ++k)
      for (std::size_t a = 0; a < cfg.n_antennas; ++a) s.H.col[k][a] = rng.cnormal();
    const SystemConfig sample_cfg = cfg.with_power(s.power_budget(cfg.noise_variance));
    s.W_label = solve(sample_cfg, s.H, label_opts).W;
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& bin_path,
                  const std::string& manifest_path) {
  std::ofstream out(bin_path, std::ios::binary);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + bin_path);
  out.write(kMagic, 4);
  const std::uint32_t version = ds.meta.format_version;
  const std::uint32_t n = static_cast<std::uint32_t>(ds.meta.n_antennas);
  const std::uint32_t k = static_cast<std::uint32_t>(ds.meta.n_users);
  const std::uint64_t count = ds.samples.size();
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(&k), sizeof(k));
  out.write(reinterpret_cast<const char*>(&ds.meta.noise_variance), sizeof(double));
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const ChannelSample& s : ds.samples) {
    out.write(reinterpret_cast<const char*>(&s.snr_db), sizeof(double));
    write_cmat(out, s.H);
    write_cmat(out, s.W_label);
    out.flush();  // surface device errors with the failing sample attached
    if (!out)
      throw std::runtime_error("save_dataset: write failed at sample " +
                               std::to_string(s.sample_id));
  }
  out.close();
  if (!out) throw std::runtime_error("save_dataset: close failed for " + bin_path);

  if (!manifest_path.empty()) {
    std::ofstream mout(manifest_path);
    if (!mout) throw std::runtime_error("save_dataset: cannot open " + manifest_path);
    mout << ds.meta.to_json() << "\n";
  }
}

Dataset load_dataset(const std::string& bin_path, const std::string& manifest_path) {
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + bin_path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("load_dataset: bad magic in " + bin_path);

  Dataset ds;
  std::uint32_t version = 0, n = 0, k = 0;
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  in.read(reinterpret_cast<char*>(&k), sizeof(k));
  in.read(reinterpret_cast<char*>(&ds.meta.noise_variance), sizeof(double));
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in) throw std::runtime_error("load_dataset: truncated header in " + bin_path);
  if (version != 1)
    throw std::runtime_error("load_dataset: unsupported format version " +
                             std::to_string(version));

  if (!manifest_path.empty()) {
    std::ifstream min(manifest_path);
    if (!min) throw std::runtime_error("load_dataset: cannot open " + manifest_path);
    std::string text((std::istreambuf_iterator<char>(min)),
                     std::istreambuf_iterator<char>());
    ds.meta = DatasetManifest::from_json(text);
  }
  ds.meta.format_version = version;
  ds.meta.n_antennas = n;
  ds.meta.n_users = k;
  ds.meta.n_samples = count;

  ds.samples.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    ChannelSample& s = ds.samples[i];
    s.sample_id = i;
    in.read(reinterpret_cast<char*>(&s.snr_db), sizeof(double));
    s.H = read_cmat(in, n, k);
    s.W_label = read_cmat(in, n, k);
    if (!in)
      throw std::runtime_error("load_dataset: truncated at sample " + std::to_string(i));
  }
  return ds;
}

void shuffle_indices(std::vector<std::size_t>& idx, std::uint64_t seed) {
  // Fisher-Yates with masked rejection sampling so the permutation depends
  // only on the mt19937_64 stream
  Rng rng(seed);
  for (std::size_t i = idx.size(); i-- > 1;) {
    std::uint64_t mask = i;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    std::uint64_t j;
    do {
      j = rng.raw() & mask;
    } while (j > i);
    std::swap(idx[i], idx[j]);
  }
}

SplitIndices split_dataset(std::size_t n, std::uint64_t seed) {
  if (n < 10) throw std::invalid_argument("split_dataset: need at least 10 samples");
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  shuffle_indices(perm, seed);

  const std::size_t n_train = static_cast<std::size_t>(0.70 * static_cast<double>(n));
  const std::size_t n_val = static_cast<std::size_t>(0.15 * static_cast<double>(n));
  SplitIndices s;
  s.train.assign(perm.begin(), perm.begin() + n_train);
  s.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
  s.test.assign(perm.begin() + n_train + n_val, perm.end());
  return s;
}

}  // namespace cpsp
