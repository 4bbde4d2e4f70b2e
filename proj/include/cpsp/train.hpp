#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cpsp/dataset.hpp"
#include "cpsp/neural_net.hpp"
#include "cpsp/parameterization.hpp"

namespace cpsp {

struct TrainConfig {
  ParamKind kind = ParamKind::CPS;
  double lr = 1e-3;
  std::size_t batch_size = 1024;
  int epochs = 200;
  int sessions = 1;
  std::uint64_t seed = 1;

  void validate() const;
};

// Everything needed to run inference: the network plus the codec state it
// was trained with.
struct ModelBundle {
  ParamKind kind = ParamKind::CPS;
  SystemConfig cfg;
  double snr_db_min = 0.0;
  double snr_db_max = 20.0;
  std::uint64_t seed = 0;
  MlpModel model;
  Scaler scaler;
};

void save_bundle(const ModelBundle& b, const std::string& path);
ModelBundle load_bundle(const std::string& path);

// train_acc is computed on a fixed deterministic train subsample of the
// validation split's size; losses are rate-penalty weighted batch means.
struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

struct SessionResult {
  ModelBundle best;  // highest validation accuracy snapshot
  int best_epoch = 0;
  double best_val_acc = 0.0;
  double test_acc = 0.0;  // accuracy of `best` on the test split
  std::vector<EpochMetrics> metrics;
};

struct TrainOutput {
  std::vector<SessionResult> sessions;
  std::size_t best_session = 0;  // highest validation accuracy overall
};

// Full supervised loop: featurize -> forward -> loss through the
// differentiable postprocessing -> backward -> Adam, with per-epoch
// validation metrics. Session s runs with derive_seed(cfg.seed, s). The split
// comes from the dataset manifest's split seed. Deterministic for a fixed
// dataset, config, and build.
TrainOutput train(const Dataset& ds, const TrainConfig& cfg);

// mean over samples of (reconstructed prediction sum rate) / (label sum rate)
double accuracy(const ModelBundle& b, const Dataset& ds,
                std::span<const std::size_t> indices);

struct SweepRow {
  double snr_db = 0.0;  // bin center
  double accuracy = 0.0;
  double rate_dnn = 0.0;
  double rate_wmmse = 0.0;
  std::size_t count = 0;
};

// Per-SNR-bin accuracy and mean sum rates; bins are centered on multiples of
// bin_step, empty bins are omitted with a warning on stderr.
std::vector<SweepRow> snr_sweep(const ModelBundle& b, const Dataset& ds,
                                std::span<const std::size_t> indices,
                                double bin_step = 2.0);

struct LatencyRow {
  std::string scheme;
  double ms_per_batch = 0.0;
};

// End-to-end wall time per batch: the WMMSE baseline runs max_iter iterations
// per sample single-threaded; each network pipeline measures featurize +
// eval-mode forward + postprocess. `repeats` timed runs after `warmup`
// untimed ones.
std::vector<LatencyRow> bench_latency(const std::vector<ModelBundle>& bundles,
                                      const WmmseOptions& wmmse_opts,
                                      std::size_t batch, int repeats, int warmup,
                                      std::uint64_t seed);

// epoch CSV with raw and normalized (by the per-session max train loss)
// loss columns
void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& m);
// header: snr_db,kind,accuracy,sum_rate_dnn,sum_rate_wmmse
void write_sweep_csv(const std::string& path, ParamKind kind,
                     const std::vector<SweepRow>& rows);

}  // namespace cpsp
