#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpsp/complex_core.hpp"
#include "cpsp/wmmse.hpp"

namespace cpsp {

struct ChannelSample {
  CMat H;
  double snr_db = 0.0;
  CMat W_label;
  std::uint64_t sample_id = 0;

  double power_budget(double noise_variance) const {
    return SystemConfig::power_for_snr_db(noise_variance, snr_db);
  }
};

struct DatasetManifest {
  std::uint32_t format_version = 1;
  std::size_t n_antennas = 4;
  std::size_t n_users = 4;
  double noise_variance = 1.0;
  std::uint64_t n_samples = 0;
  double snr_db_min = 0.0;
  double snr_db_max = 20.0;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  WmmseOptions wmmse;

  std::string to_json() const;
  static DatasetManifest from_json(const std::string& text);
};

struct Dataset {
  DatasetManifest meta;
  std::vector<ChannelSample> samples;

  SystemConfig config() const {
    SystemConfig c;
    c.n_antennas = meta.n_antennas;
    c.n_users = meta.n_users;
    c.noise_variance = meta.noise_variance;
    return c;
  }
};

// Draw snr_db ~ Uniform[snr_db_min, snr_db_max], an i.i.d. Rayleigh channel,
// and the label precoder from a full max_iter WMMSE run at P = sigma^2 *
// 10^(snr/10). Sample i depends only on derive_seed(seed, i), so the result
// is identical for any worker count. Generation runs in parallel when the
// kernel thread count is above one.
Dataset generate_dataset(const SystemConfig& cfg, std::uint64_t n_samples,
                         std::uint64_t seed, const WmmseOptions& wmmse_opts,
                         double snr_db_min = 0.0, double snr_db_max = 20.0);

// Binary container: magic "CPSD", version u32, N u32, K u32, sigma^2 f64,
// count u64, then per sample snr_db f64 followed by H and W as 2NK f64 each
// (re/im interleaved, column major). Little-endian.
void save_dataset(const Dataset& ds, const std::string& bin_path,
                  const std::string& manifest_path);
Dataset load_dataset(const std::string& bin_path, const std::string& manifest_path = "");

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

// Deterministic Fisher-Yates shuffle driven by the mt19937_64 stream only.
void shuffle_indices(std::vector<std::size_t>& idx, std::uint64_t seed);

// Deterministic shuffled 70/15/15 partition of 0..n-1. Throws for n < 10.
SplitIndices split_dataset(std::size_t n, std::uint64_t seed);

}  // namespace cpsp
