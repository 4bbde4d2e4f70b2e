#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "cpsp/train.hpp"

using namespace cpsp;

namespace {

Dataset shared_dataset() {
  static Dataset ds = [] {
    SystemConfig cfg;
    WmmseOptions opts;
    return generate_dataset(cfg, 600, 21, opts);
  }();
  return ds;
}

TrainConfig quick_config(ParamKind kind) {
  TrainConfig tc;
  tc.kind = kind;
  tc.batch_size = 64;
  tc.epochs = 2;
  tc.sessions = 1;
  tc.seed = 3;
  return tc;
}

}  // namespace

TEST_CASE("a short training run completes and logs one row per epoch") {
  const Dataset ds = shared_dataset();
  for (ParamKind kind :
       {ParamKind::RI, ParamKind::NCV, ParamKind::CPS, ParamKind::HSC}) {
    CAPTURE(param_kind_name(kind));
    const TrainOutput out = train(ds, quick_config(kind));
    REQUIRE(out.sessions.size() == 1);
    const SessionResult& r = out.sessions[0];
    REQUIRE(r.metrics.size() == 2);
    for (const EpochMetrics& m : r.metrics) {
      CHECK(std::isfinite(m.train_loss));
      CHECK(std::isfinite(m.val_loss));
      CHECK(m.val_acc > 0.0);
      CHECK(m.val_acc < 1.2);
    }
    CHECK(r.best_val_acc >= r.metrics.front().val_acc);
    CHECK(r.test_acc > 0.0);
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  const Dataset ds = shared_dataset();
  const TrainOutput a = train(ds, quick_config(ParamKind::CPS));
  const TrainOutput b = train(ds, quick_config(ParamKind::CPS));
  REQUIRE(a.sessions[0].metrics.size() == b.sessions[0].metrics.size());
  for (std::size_t e = 0; e < a.sessions[0].metrics.size(); ++e) {
    CHECK(a.sessions[0].metrics[e].train_loss == b.sessions[0].metrics[e].train_loss);
    CHECK(a.sessions[0].metrics[e].val_loss == b.sessions[0].metrics[e].val_loss);
    CHECK(a.sessions[0].metrics[e].val_acc == b.sessions[0].metrics[e].val_acc);
  }
  CHECK(a.sessions[0].test_acc == b.sessions[0].test_acc);
}

TEST_CASE("distinct sessions use distinct seeds") {
  const Dataset ds = shared_dataset();
  TrainConfig tc = quick_config(ParamKind::CPS);
  tc.sessions = 2;
  tc.epochs = 1;
  const TrainOutput out = train(ds, tc);
  REQUIRE(out.sessions.size() == 2);
  CHECK(out.sessions[0].metrics[0].val_loss != out.sessions[1].metrics[0].val_loss);
}

TEST_CASE("checkpoints reload to an identical model") {
  const Dataset ds = shared_dataset();
  const TrainOutput out = train(ds, quick_config(ParamKind::HSC));
  const ModelBundle& best = out.sessions[0].best;

  const std::string path =
      (std::filesystem::temp_directory_path() / "bundle_rt.json").string();
  save_bundle(best, path);
  const ModelBundle loaded = load_bundle(path);
  CHECK(loaded.kind == best.kind);
  CHECK(loaded.seed == best.seed);
  CHECK(loaded.model.w[0].data == best.model.w[0].data);
  CHECK(loaded.model.bn_run_var[0] == best.model.bn_run_var[0]);
  CHECK(loaded.scaler.f_lo == best.scaler.f_lo);

  const SplitIndices split = split_dataset(ds.samples.size(), ds.meta.split_seed);
  CHECK(accuracy(loaded, ds, split.test) == accuracy(best, ds, split.test));
}

TEST_CASE("accuracy rejects mismatched dimensions") {
  const Dataset ds = shared_dataset();
  const TrainOutput out = train(ds, quick_config(ParamKind::RI));
  ModelBundle b = out.sessions[0].best;
  b.cfg.n_users = 2;
  const SplitIndices split = split_dataset(ds.samples.size(), ds.meta.split_seed);
  CHECK_THROWS_AS(accuracy(b, ds, split.test), std::invalid_argument);
}

TEST_CASE("snr sweep covers the range in two-decibel bins") {
  const Dataset ds = shared_dataset();
  const TrainOutput out = train(ds, quick_config(ParamKind::CPS));
  std::vector<std::size_t> all(ds.samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const std::vector<SweepRow> rows = snr_sweep(out.sessions[0].best, ds, all, 2.0);
  REQUIRE(rows.size() == 11);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    CHECK(rows[r].snr_db == doctest::Approx(2.0 * static_cast<double>(r)));
    CHECK(rows[r].count > 0);
    CHECK(rows[r].accuracy > 0.0);
  }
  // the solver's average rate grows with SNR
  for (std::size_t r = 1; r < rows.size(); ++r)
    CHECK(rows[r].rate_wmmse > rows[r - 1].rate_wmmse);
}

TEST_CASE("metrics and sweep CSVs have the documented headers") {
  const Dataset ds = shared_dataset();
  const TrainOutput out = train(ds, quick_config(ParamKind::NCV));
  namespace fs = std::filesystem;
  const std::string mpath = (fs::temp_directory_path() / "metrics_t.csv").string();
  const std::string spath = (fs::temp_directory_path() / "sweep_t.csv").string();
  write_metrics_csv(mpath, out.sessions[0].metrics);
  std::vector<std::size_t> all(ds.samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  write_sweep_csv(spath, ParamKind::NCV, snr_sweep(out.sessions[0].best, ds, all));

  std::ifstream min(mpath), sin(spath);
  std::string header;
  std::getline(min, header);
  CHECK(header ==
        "epoch,train_loss,val_loss,train_loss_norm,val_loss_norm,train_acc,val_acc");
  std::getline(sin, header);
  CHECK(header == "snr_db,kind,accuracy,sum_rate_dnn,sum_rate_wmmse");
  std::string row;
  std::getline(sin, row);
  CHECK(row.find(",ncv,") != std::string::npos);
}

TEST_CASE("latency bench validates inputs and reports all five schemes") {
  const Dataset ds = shared_dataset();
  std::vector<ModelBundle> bundles;
  for (ParamKind kind :
       {ParamKind::RI, ParamKind::NCV, ParamKind::CPS, ParamKind::HSC})
    bundles.push_back(train(ds, quick_config(kind)).sessions[0].best);

  WmmseOptions opts;
  opts.convergence_tol = 0.0;
  CHECK_THROWS_AS(bench_latency(bundles, opts, 8, 0, 0, 1), std::invalid_argument);

  const std::vector<LatencyRow> rows = bench_latency(bundles, opts, 8, 2, 1, 1);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].scheme == "wmmse");
  for (const LatencyRow& r : rows) CHECK(r.ms_per_batch > 0.0);
}

TEST_CASE("config validation rejects bad hyperparameters") {
  TrainConfig tc;
  tc.epochs = 0;
  CHECK_THROWS_AS(tc.validate(), std::invalid_argument);
  tc = TrainConfig{};
  tc.batch_size = 1;
  CHECK_THROWS_AS(tc.validate(), std::invalid_argument);
  tc = TrainConfig{};
  tc.sessions = 0;
  CHECK_THROWS_AS(tc.validate(), std::invalid_argument);
}
