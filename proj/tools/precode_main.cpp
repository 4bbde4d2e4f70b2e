#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpsp/dataset.hpp"
#include "cpsp/kernels.hpp"
#include "cpsp/train.hpp"
#include "cpsp/wmmse.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalArgs {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string config_path;
  std::string out_dir = ".";
};

// --config JSON supplies defaults for options the command line did not set
void apply_config(const CLI::App& app, const std::string& path,
                  std::map<std::string, double*> numeric,
                  std::map<std::string, std::string*> strings) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  json j;
  in >> j;
  for (auto& [key, dst] : numeric) {
    const CLI::Option* opt = app.get_option_no_throw("--" + key);
    if (j.contains(key) && (opt == nullptr || opt->count() == 0))
      *dst = j.at(key).get<double>();
  }
  for (auto& [key, dst] : strings) {
    const CLI::Option* opt = app.get_option_no_throw("--" + key);
    if (j.contains(key) && (opt == nullptr || opt->count() == 0))
      *dst = j.at(key).get<std::string>();
  }
}

std::string manifest_path_for(const std::string& bin_path) {
  fs::path p(bin_path);
  p.replace_extension(".json");
  return p.string();
}

std::vector<std::size_t> split_selection(const cpsp::Dataset& ds,
                                         const std::string& which) {
  if (which == "all") {
    std::vector<std::size_t> idx(ds.samples.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
  }
  const cpsp::SplitIndices s = cpsp::split_dataset(ds.samples.size(), ds.meta.split_seed);
  if (which == "train") return s.train;
  if (which == "val") return s.val;
  if (which == "test") return s.test;
  throw std::runtime_error("unknown split '" + which + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MU-MISO precoding toolkit: WMMSE solver, projective-space codecs,"
               " and neural precoder imitation"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--threads", g.threads, "worker threads for batch kernels");
  app.add_option("--config", g.config_path, "JSON file with option defaults");
  app.add_option("--out", g.out_dir, "output directory");

  // generate
  auto* cmd_gen = app.add_subcommand("generate", "generate a labeled channel dataset");
  double gen_samples = 100000, gen_n = 4, gen_k = 4, gen_sigma2 = 1.0;
  double gen_snr_min = 0.0, gen_snr_max = 20.0, gen_iters = 10;
  cmd_gen->add_option("--samples", gen_samples, "number of samples");
  cmd_gen->add_option("--n-antennas", gen_n, "transmit antennas N");
  cmd_gen->add_option("--n-users", gen_k, "single-antenna users K");
  cmd_gen->add_option("--noise-variance", gen_sigma2, "noise variance");
  cmd_gen->add_option("--snr-min", gen_snr_min, "SNR range lower edge (dB)");
  cmd_gen->add_option("--snr-max", gen_snr_max, "SNR range upper edge (dB)");
  cmd_gen->add_option("--wmmse-iters", gen_iters, "label solver iterations");

  // solve
  auto* cmd_solve = app.add_subcommand("solve", "run the solver on one instance");
  double sol_n = 4, sol_k = 4, sol_sigma2 = 1.0, sol_snr = 10.0, sol_iters = 10;
  std::string sol_dataset;
  double sol_index = 0;
  cmd_solve->add_option("--n-antennas", sol_n, "transmit antennas N");
  cmd_solve->add_option("--n-users", sol_k, "single-antenna users K");
  cmd_solve->add_option("--noise-variance", sol_sigma2, "noise variance");
  cmd_solve->add_option("--snr-db", sol_snr, "operating SNR (dB)");
  cmd_solve->add_option("--iters", sol_iters, "solver iterations");
  cmd_solve->add_option("--dataset", sol_dataset, "solve a stored sample instead");
  cmd_solve->add_option("--index", sol_index, "sample index within --dataset");

  // train
  auto* cmd_train = app.add_subcommand("train", "train a precoder imitation network");
  std::string tr_kind, tr_dataset;
  double tr_lr = 1e-3, tr_batch = 1024, tr_epochs = 200, tr_sessions = 1;
  cmd_train->add_option("--kind", tr_kind, "parameterization: ri|ncv|cps|hsc")
      ->required();
  cmd_train->add_option("--dataset", tr_dataset, "dataset .bin path")->required();
  cmd_train->add_option("--lr", tr_lr, "Adam learning rate");
  cmd_train->add_option("--batch", tr_batch, "batch size");
  cmd_train->add_option("--epochs", tr_epochs, "training epochs");
  cmd_train->add_option("--sessions", tr_sessions, "independent training sessions");

  // evaluate
  auto* cmd_eval = app.add_subcommand("evaluate", "accuracy and SNR sweep CSV");
  std::string ev_checkpoint, ev_dataset, ev_kind, ev_split = "test";
  double ev_bin = 2.0;
  cmd_eval->add_option("--checkpoint", ev_checkpoint, "checkpoint JSON")->required();
  cmd_eval->add_option("--dataset", ev_dataset, "dataset .bin path")->required();
  cmd_eval->add_option("--kind", ev_kind, "expected parameterization (checked)");
  cmd_eval->add_option("--split", ev_split, "train|val|test|all");
  cmd_eval->add_option("--bin-step", ev_bin, "SNR bin width (dB)");

  // bench
  auto* cmd_bench = app.add_subcommand("bench", "end-to-end latency comparison");
  std::string bn_checkpoint_dir;
  double bn_batch = 256, bn_repeats = 100, bn_warmup = 100, bn_iters = 10;
  bool bn_fresh = false;
  cmd_bench->add_option("--checkpoint-dir", bn_checkpoint_dir,
                        "directory with checkpoint_<kind>.json files");
  cmd_bench->add_flag("--fresh", bn_fresh,
                      "benchmark freshly initialized models (latency only)");
  cmd_bench->add_option("--batch", bn_batch, "samples per batch");
  cmd_bench->add_option("--repeats", bn_repeats, "timed repeats");
  cmd_bench->add_option("--warmup", bn_warmup, "untimed warmup repeats");
  cmd_bench->add_option("--wmmse-iters", bn_iters, "baseline solver iterations");

  // inspect
  auto* cmd_inspect = app.add_subcommand("inspect", "print dataset/checkpoint metadata");
  std::string in_dataset, in_checkpoint;
  cmd_inspect->add_option("--dataset", in_dataset, "dataset .bin path");
  cmd_inspect->add_option("--checkpoint", in_checkpoint, "checkpoint JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    cpsp::kernels::set_threads(g.threads);
    fs::create_directories(g.out_dir);

    if (cmd_gen->parsed()) {
      apply_config(*cmd_gen, g.config_path,
                   {{"samples", &gen_samples},
                    {"n-antennas", &gen_n},
                    {"n-users", &gen_k},
                    {"noise-variance", &gen_sigma2},
                    {"snr-min", &gen_snr_min},
                    {"snr-max", &gen_snr_max},
                    {"wmmse-iters", &gen_iters}},
                   {});
      cpsp::SystemConfig cfg;
      cfg.n_antennas = static_cast<std::size_t>(gen_n);
      cfg.n_users = static_cast<std::size_t>(gen_k);
      cfg.noise_variance = gen_sigma2;
      cpsp::WmmseOptions opts;
      opts.max_iter = static_cast<int>(gen_iters);
      const cpsp::Dataset ds = cpsp::generate_dataset(
          cfg, static_cast<std::uint64_t>(gen_samples), g.seed, opts, gen_snr_min,
          gen_snr_max);
      const std::string bin = (fs::path(g.out_dir) / "dataset.bin").string();
      cpsp::save_dataset(ds, bin, manifest_path_for(bin));
      std::printf("wrote %s (%zu samples, N=%zu K=%zu)\n", bin.c_str(),
                  ds.samples.size(), cfg.n_antennas, cfg.n_users);
      return 0;
    }

    if (cmd_solve->parsed()) {
      cpsp::SystemConfig cfg;
      cpsp::CMat h;
      cpsp::WmmseOptions opts;
      opts.max_iter = static_cast<int>(sol_iters);
      opts.convergence_tol = 0.0;
      if (!sol_dataset.empty()) {
        const cpsp::Dataset ds =
            cpsp::load_dataset(sol_dataset, manifest_path_for(sol_dataset));
        const auto idx = static_cast<std::size_t>(sol_index);
        if (idx >= ds.samples.size())
          throw std::runtime_error("solve: sample index out of range");
        cfg = ds.config();
        cfg.power_budget = ds.samples[idx].power_budget(cfg.noise_variance);
        h = ds.samples[idx].H;
      } else {
        cfg.n_antennas = static_cast<std::size_t>(sol_n);
        cfg.n_users = static_cast<std::size_t>(sol_k);
        cfg.noise_variance = sol_sigma2;
        cfg.power_budget = cpsp::SystemConfig::power_for_snr_db(sol_sigma2, sol_snr);
        h = cpsp::gen_rayleigh_channel(cfg, g.seed);
      }
      const cpsp::WmmseSolution sol = cpsp::solve(cfg, h, opts);
      for (std::size_t i = 0; i < sol.trace.size(); ++i)
        std::printf("iter %zu wsr %.12g\n", i, sol.trace[i]);
      std::printf("power %.12g of %.12g, lambda %.6g\n", sol.W.fro_norm2(),
                  cfg.power_budget, sol.lambda);
      return 0;
    }

    if (cmd_train->parsed()) {
      apply_config(*cmd_train, g.config_path,
                   {{"lr", &tr_lr},
                    {"batch", &tr_batch},
                    {"epochs", &tr_epochs},
                    {"sessions", &tr_sessions}},
                   {});
      const cpsp::Dataset ds =
          cpsp::load_dataset(tr_dataset, manifest_path_for(tr_dataset));
      cpsp::TrainConfig tc;
      tc.kind = cpsp::param_kind_from_name(tr_kind);
      tc.lr = tr_lr;
      tc.batch_size = static_cast<std::size_t>(tr_batch);
      tc.epochs = static_cast<int>(tr_epochs);
      tc.sessions = static_cast<int>(tr_sessions);
      tc.seed = g.seed;
      const cpsp::TrainOutput out = cpsp::train(ds, tc);

      json summary;
      summary["kind"] = tr_kind;
      summary["sessions"] = json::array();
      for (std::size_t s = 0; s < out.sessions.size(); ++s) {
        const cpsp::SessionResult& r = out.sessions[s];
        const std::string metrics =
            (fs::path(g.out_dir) /
             ("metrics_" + tr_kind + "_s" + std::to_string(s) + ".csv"))
                .string();
        cpsp::write_metrics_csv(metrics, r.metrics);
        const std::string ckpt =
            (fs::path(g.out_dir) /
             ("checkpoint_" + tr_kind + "_s" + std::to_string(s) + ".json"))
                .string();
        cpsp::save_bundle(r.best, ckpt);
        summary["sessions"].push_back({{"best_epoch", r.best_epoch},
                                       {"best_val_acc", r.best_val_acc},
                                       {"test_acc", r.test_acc}});
        std::printf("session %zu: best epoch %d, val acc %.4f, test acc %.4f\n", s,
                    r.best_epoch, r.best_val_acc, r.test_acc);
      }
      const std::string best_path =
          (fs::path(g.out_dir) / ("checkpoint_" + tr_kind + ".json")).string();
      cpsp::save_bundle(out.sessions[out.best_session].best, best_path);
      summary["best_session"] = out.best_session;
      std::ofstream(
          (fs::path(g.out_dir) / ("summary_" + tr_kind + ".json")).string())
          << summary.dump(2) << "\n";
      std::printf("best session %zu -> %s\n", out.best_session, best_path.c_str());
      return 0;
    }

    if (cmd_eval->parsed()) {
      const cpsp::ModelBundle bundle = cpsp::load_bundle(ev_checkpoint);
      if (!ev_kind.empty() && cpsp::param_kind_from_name(ev_kind) != bundle.kind)
        throw std::runtime_error("evaluate: checkpoint kind is '" +
                                 std::string(cpsp::param_kind_name(bundle.kind)) +
                                 "', not '" + ev_kind + "'");
      const cpsp::Dataset ds =
          cpsp::load_dataset(ev_dataset, manifest_path_for(ev_dataset));
      const std::vector<std::size_t> idx = split_selection(ds, ev_split);
      const double acc = cpsp::accuracy(bundle, ds, idx);
      const std::vector<cpsp::SweepRow> rows = cpsp::snr_sweep(bundle, ds, idx, ev_bin);
      const std::string csv =
          (fs::path(g.out_dir) /
           ("sweep_" + std::string(cpsp::param_kind_name(bundle.kind)) + ".csv"))
              .string();
      cpsp::write_sweep_csv(csv, bundle.kind, rows);
      std::printf("kind %s split %s samples %zu accuracy %.6f\n",
                  cpsp::param_kind_name(bundle.kind), ev_split.c_str(), idx.size(), acc);
      std::printf("sweep -> %s\n", csv.c_str());
      return 0;
    }

    if (cmd_bench->parsed()) {
      std::vector<cpsp::ModelBundle> bundles;
      const std::vector<std::string> kinds = {"ri", "ncv", "cps", "hsc"};
      if (!bn_checkpoint_dir.empty()) {
        for (const std::string& k : kinds)
          bundles.push_back(cpsp::load_bundle(
              (fs::path(bn_checkpoint_dir) / ("checkpoint_" + k + ".json")).string()));
      } else if (bn_fresh) {
        // untrained weights time identically to trained ones
        cpsp::SystemConfig cfg;
        cpsp::WmmseOptions opts;
        const cpsp::Dataset ds = cpsp::generate_dataset(cfg, 256, g.seed, opts);
        const cpsp::SplitIndices split = cpsp::split_dataset(256, g.seed);
        for (const std::string& kname : kinds) {
          const cpsp::ParamKind kind = cpsp::param_kind_from_name(kname);
          cpsp::ModelBundle b;
          b.kind = kind;
          b.cfg = cfg;
          b.seed = g.seed;
          b.scaler = cpsp::make_scaler(kind, cfg, 0.0, 20.0);
          cpsp::fit_scaler(b.scaler, kind, cfg, ds, split.train);
          cpsp::MlpSpec spec;
          spec.input_dim = cpsp::feature_dim(kind, cfg.n_antennas, cfg.n_users);
          spec.output_dim = cpsp::label_dim(kind, cfg.n_antennas, cfg.n_users);
          b.model = cpsp::make_mlp(spec, g.seed);
          bundles.push_back(std::move(b));
        }
      } else {
        throw std::runtime_error("bench: pass --checkpoint-dir or --fresh");
      }
      cpsp::WmmseOptions opts;
      opts.max_iter = static_cast<int>(bn_iters);
      opts.convergence_tol = 0.0;
      const std::vector<cpsp::LatencyRow> rows = cpsp::bench_latency(
          bundles, opts, static_cast<std::size_t>(bn_batch),
          static_cast<int>(bn_repeats), static_cast<int>(bn_warmup), g.seed);
      const std::string csv = (fs::path(g.out_dir) / "latency.csv").string();
      std::ofstream out(csv);
      out << "scheme,cpu_ms_per_batch\n";
      for (const cpsp::LatencyRow& r : rows) {
        std::printf("%-6s %10.3f ms/batch\n", r.scheme.c_str(), r.ms_per_batch);
        out << r.scheme << "," << r.ms_per_batch << "\n";
      }
      std::printf("latency table -> %s\n", csv.c_str());
      return 0;
    }

    if (cmd_inspect->parsed()) {
      if (!in_dataset.empty()) {
        const cpsp::Dataset ds =
            cpsp::load_dataset(in_dataset, manifest_path_for(in_dataset));
        std::printf("dataset %s\n", in_dataset.c_str());
        std::printf("N=%zu K=%zu count=%llu sigma2=%g snr=[%g,%g] seed=%llu\n",
                    ds.meta.n_antennas, ds.meta.n_users,
                    static_cast<unsigned long long>(ds.meta.n_samples),
                    ds.meta.noise_variance, ds.meta.snr_db_min, ds.meta.snr_db_max,
                    static_cast<unsigned long long>(ds.meta.seed));
        std::printf("wmmse iters=%d bisection_tol=%g init=%s\n", ds.meta.wmmse.max_iter,
                    ds.meta.wmmse.bisection_tol,
                    ds.meta.wmmse.init_mode == cpsp::InitMode::MrtFullPower
                        ? "mrt_full_power"
                        : "scaled_random");
        return 0;
      }
      if (!in_checkpoint.empty()) {
        const cpsp::ModelBundle b = cpsp::load_bundle(in_checkpoint);
        std::printf("checkpoint %s\n", in_checkpoint.c_str());
        std::printf("kind=%s N=%zu K=%zu input=%zu output=%zu params=%zu seed=%llu\n",
                    cpsp::param_kind_name(b.kind), b.cfg.n_antennas, b.cfg.n_users,
                    b.model.spec.input_dim, b.model.spec.output_dim,
                    cpsp::param_count(b.model.spec),
                    static_cast<unsigned long long>(b.seed));
        return 0;
      }
      throw std::runtime_error("inspect: pass --dataset or --checkpoint");
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
