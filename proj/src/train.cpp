#include "cpsp/train.hpp"

#include <chrono>
#include <functional>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "cpsp/losses.hpp"
#include "cpsp/rng.hpp"

namespace cpsp {

namespace {

using nlohmann::json;

// label sum rates for every sample, at each sample's own power budget
std::vector<double> label_rates(const Dataset& ds) {
  const SystemConfig base = ds.config();
  std::vector<double> r(ds.samples.size());
#pragma omp parallel for schedule(static) if (kernels::threads() > 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(ds.samples.size()); ++i) {
    const ChannelSample& s = ds.samples[i];
    r[i] = sum_rate(base.with_power(s.power_budget(base.noise_variance)), s.H,
                    s.W_label);
  }
  return r;
}

// reconstructed-prediction sum rate per row of `raw`
std::vector<double> predicted_rates(ParamKind kind, const SystemConfig& base,
                                    const Dataset& ds,
                                    std::span<const std::size_t> indices,
                                    const RowMatrix& raw, const Scaler& sc) {
  std::vector<double> r(indices.size());
#pragma omp parallel for schedule(static) if (kernels::threads() > 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(indices.size()); ++i) {
    const ChannelSample& s = ds.samples[indices[i]];
    const double p = s.power_budget(base.noise_variance);
    const CMat w = postprocess(kind, base, std::span<const double>(raw.row(i), raw.cols),
                               p, sc);
    r[i] = sum_rate(base.with_power(p), s.H, w);
  }
  return r;
}

RowMatrix gather_rows(const RowMatrix& src, std::span<const std::size_t> rows) {
  RowMatrix out(rows.size(), src.cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double* s = src.row(rows[i]);
    std::copy(s, s + src.cols, out.row(i));
  }
  return out;
}

RowMatrix forward_eval_chunked(MlpModel& model, const RowMatrix& x,
                               std::size_t chunk = 4096) {
  RowMatrix out(x.rows, model.spec.output_dim);
  for (std::size_t start = 0; start < x.rows; start += chunk) {
    const std::size_t len = std::min(chunk, x.rows - start);
    RowMatrix part(len, x.cols);
    std::copy(x.row(start), x.row(start) + len * x.cols, part.data.data());
    const RowMatrix y = mlp_forward(model, part, Mode::Eval);
    std::copy(y.data.data(), y.data.data() + y.data.size(), out.row(start));
  }
  return out;
}

struct EvalNumbers {
  double loss = 0.0;
  double acc = 0.0;
};

EvalNumbers evaluate_split(ParamKind kind, const SystemConfig& base, const Dataset& ds,
                           std::span<const std::size_t> indices, const RowMatrix& x,
                           const RowMatrix& y, MlpModel& model, const Scaler& sc,
                           const std::vector<double>& rates) {
  const RowMatrix raw = forward_eval_chunked(model, x);
  const std::vector<double> pred = predicted_rates(kind, base, ds, indices, raw, sc);
  std::vector<double> beta(indices.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const double r = rates[indices[i]];
    beta[i] = rate_penalty(r, pred[i]);
    acc += pred[i] / r;
  }
  EvalNumbers out;
  out.acc = acc / static_cast<double>(indices.size());
  out.loss = total_loss(kind, base, raw, y, beta, nullptr);
  return out;
}

json scaler_to_json(const Scaler& sc) { return json::parse(sc.to_json()); }

json model_to_json(const MlpModel& m) {
  json j;
  j["spec"] = {{"input_dim", m.spec.input_dim},
               {"output_dim", m.spec.output_dim},
               {"hidden_dims", m.spec.hidden_dims},
               {"bn_hidden_layers", m.spec.bn_hidden_layers}};
  j["bn_eps"] = m.bn_eps;
  j["bn_momentum"] = m.bn_momentum;
  json w = json::array(), b = json::array();
  for (const RowMatrix& x : m.w) w.push_back(x.data);
  for (const std::vector<double>& x : m.b) b.push_back(x);
  j["w"] = std::move(w);
  j["b"] = std::move(b);
  j["bn_gamma"] = m.bn_gamma;
  j["bn_beta"] = m.bn_beta;
  j["bn_run_mean"] = m.bn_run_mean;
  j["bn_run_var"] = m.bn_run_var;
  j["prelu"] = m.prelu;
  return j;
}

MlpModel model_from_json(const json& j) {
  MlpSpec spec;
  spec.input_dim = j.at("spec").at("input_dim").get<std::size_t>();
  spec.output_dim = j.at("spec").at("output_dim").get<std::size_t>();
  spec.hidden_dims = j.at("spec").at("hidden_dims").get<std::vector<std::size_t>>();
  spec.bn_hidden_layers = j.at("spec").at("bn_hidden_layers").get<std::size_t>();
  MlpModel m = make_mlp(spec, 0);
  m.bn_eps = j.at("bn_eps").get<double>();
  m.bn_momentum = j.at("bn_momentum").get<double>();
  const json& w = j.at("w");
  const json& b = j.at("b");
  for (std::size_t l = 0; l < m.w.size(); ++l) {
    const std::vector<double> wd = w.at(l).get<std::vector<double>>();
    if (wd.size() != m.w[l].data.size())
      throw std::runtime_error("checkpoint: layer weight size mismatch");
    m.w[l].data = wd;
    m.b[l] = b.at(l).get<std::vector<double>>();
  }
  m.bn_gamma = j.at("bn_gamma").get<std::vector<std::vector<double>>>();
  m.bn_beta = j.at("bn_beta").get<std::vector<std::vector<double>>>();
  m.bn_run_mean = j.at("bn_run_mean").get<std::vector<std::vector<double>>>();
  m.bn_run_var = j.at("bn_run_var").get<std::vector<std::vector<double>>>();
  m.prelu = j.at("prelu").get<std::vector<double>>();
  return m;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (sessions < 1) throw std::invalid_argument("train config: sessions must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("train config: batch_size must be >= 2");
  if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be > 0");
}

void save_bundle(const ModelBundle& b, const std::string& path) {
  json j;
  j["version"] = 1;
  j["kind"] = param_kind_name(b.kind);
  j["seed"] = b.seed;
  j["config"] = {{"n_antennas", b.cfg.n_antennas},
                 {"n_users", b.cfg.n_users},
                 {"noise_variance", b.cfg.noise_variance}};
  j["snr_db_min"] = b.snr_db_min;
  j["snr_db_max"] = b.snr_db_max;
  j["model"] = model_to_json(b.model);
  j["scaler"] = scaler_to_json(b.scaler);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_bundle: cannot open " + path);
  out << j.dump() << "\n";
  if (!out) throw std::runtime_error("save_bundle: write failed for " + path);
}

ModelBundle load_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_bundle: cannot open " + path);
  json j;
  in >> j;
  if (j.at("version").get<int>() != 1)
    throw std::runtime_error("load_bundle: unsupported checkpoint version");
  ModelBundle b;
  b.kind = param_kind_from_name(j.at("kind").get<std::string>());
  b.seed = j.at("seed").get<std::uint64_t>();
  b.cfg.n_antennas = j.at("config").at("n_antennas").get<std::size_t>();
  b.cfg.n_users = j.at("config").at("n_users").get<std::size_t>();
  b.cfg.noise_variance = j.at("config").at("noise_variance").get<double>();
  b.snr_db_min = j.at("snr_db_min").get<double>();
  b.snr_db_max = j.at("snr_db_max").get<double>();
  b.model = model_from_json(j.at("model"));
  b.scaler = Scaler::from_json(j.at("scaler").dump());
  return b;
}

TrainOutput train(const Dataset& ds, const TrainConfig& tc) {
  tc.validate();
  const SystemConfig base = ds.config();
  const std::size_t n = ds.samples.size();
  const SplitIndices split = split_dataset(n, ds.meta.split_seed);

  Scaler scaler = make_scaler(tc.kind, base, ds.meta.snr_db_min, ds.meta.snr_db_max);
  fit_scaler(scaler, tc.kind, base, ds, split.train);

  const RowMatrix x_train = featurize_batch(tc.kind, base, ds, split.train, scaler);
  const RowMatrix y_train = labelize_batch(tc.kind, base, ds, split.train, scaler);
  const RowMatrix x_val = featurize_batch(tc.kind, base, ds, split.val, scaler);
  const RowMatrix y_val = labelize_batch(tc.kind, base, ds, split.val, scaler);
  const std::vector<double> rates = label_rates(ds);

  // fixed train subsample for the per-epoch train accuracy column
  const std::size_t sub_n = std::min(split.val.size(), split.train.size());
  const std::vector<std::size_t> train_sub(split.train.begin(),
                                           split.train.begin() + sub_n);
  std::vector<std::size_t> sub_rows(sub_n);
  for (std::size_t i = 0; i < sub_n; ++i) sub_rows[i] = i;
  const RowMatrix x_sub = gather_rows(x_train, sub_rows);
  const RowMatrix y_sub = gather_rows(y_train, sub_rows);

  const std::size_t fd = feature_dim(tc.kind, base.n_antennas, base.n_users);
  const std::size_t ld = label_dim(tc.kind, base.n_antennas, base.n_users);

  TrainOutput out;
  for (int session = 0; session < tc.sessions; ++session) {
    const std::uint64_t session_seed =
        derive_seed(tc.seed, static_cast<std::uint64_t>(session));
    MlpSpec spec;
    spec.input_dim = fd;
    spec.output_dim = ld;
    MlpModel model = make_mlp(spec, derive_seed(session_seed, 0));
    AdamState adam = make_adam(model, tc.lr);

    SessionResult res;
    res.best_val_acc = -1.0;

    std::vector<std::size_t> order(split.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
      shuffle_indices(order, derive_seed(session_seed, 1 + epoch));

      double loss_sum = 0.0;
      std::size_t batches = 0;
      for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
        const std::size_t len = std::min(tc.batch_size, order.size() - start);
        if (len < 2) break;  // batch statistics undefined
        const std::span<const std::size_t> rows(order.data() + start, len);
        const RowMatrix xb = gather_rows(x_train, rows);
        const RowMatrix yb = gather_rows(y_train, rows);
        std::vector<std::size_t> sample_idx(len);
        for (std::size_t i = 0; i < len; ++i) sample_idx[i] = split.train[rows[i]];

        ForwardCache cache;
        const RowMatrix raw = mlp_forward(model, xb, Mode::Train, &cache);
        const std::vector<double> pred =
            predicted_rates(tc.kind, base, ds, sample_idx, raw, scaler);
        std::vector<double> beta(len);
        for (std::size_t i = 0; i < len; ++i)
          beta[i] = rate_penalty(rates[sample_idx[i]], pred[i]);

        RowMatrix grad(len, ld);
        const double loss = total_loss(tc.kind, base, raw, yb, beta, &grad);
        if (!std::isfinite(loss))
          throw std::runtime_error(
              "train: non-finite loss (session " + std::to_string(session) +
              ", epoch " + std::to_string(epoch) + ", batch " +
              std::to_string(batches) + ", first sample id " +
              std::to_string(ds.samples[sample_idx[0]].sample_id) + ")");
        const Gradients grads = mlp_backward(model, cache, grad);
        adam_step(adam, model, grads);
        loss_sum += loss;
        ++batches;
      }

      EpochMetrics em;
      em.epoch = epoch + 1;
      em.train_loss = loss_sum / static_cast<double>(batches);
      const EvalNumbers val =
          evaluate_split(tc.kind, base, ds, split.val, x_val, y_val, model, scaler, rates);
      const EvalNumbers sub =
          evaluate_split(tc.kind, base, ds, train_sub, x_sub, y_sub, model, scaler, rates);
      em.val_loss = val.loss;
      em.val_acc = val.acc;
      em.train_acc = sub.acc;
      res.metrics.push_back(em);

      if (val.acc > res.best_val_acc) {
        res.best_val_acc = val.acc;
        res.best_epoch = epoch + 1;
        res.best = ModelBundle{tc.kind,  base,   ds.meta.snr_db_min, ds.meta.snr_db_max,
                               session_seed, model, scaler};
      }
    }

    res.test_acc = [&] {
      MlpModel best = res.best.model;
      RowMatrix x_test = featurize_batch(tc.kind, base, ds, split.test, scaler);
      RowMatrix y_test = labelize_batch(tc.kind, base, ds, split.test, scaler);
      return evaluate_split(tc.kind, base, ds, split.test, x_test, y_test, best, scaler,
                            rates)
          .acc;
    }();
    out.sessions.push_back(std::move(res));
  }

  out.best_session = 0;
  for (std::size_t s = 1; s < out.sessions.size(); ++s)
    if (out.sessions[s].best_val_acc > out.sessions[out.best_session].best_val_acc)
      out.best_session = s;
  return out;
}

double accuracy(const ModelBundle& b, const Dataset& ds,
                std::span<const std::size_t> indices) {
  if (ds.meta.n_antennas != b.cfg.n_antennas || ds.meta.n_users != b.cfg.n_users)
    throw std::invalid_argument("accuracy: dataset and checkpoint dimensions differ");
  const SystemConfig base = ds.config();
  const RowMatrix x = featurize_batch(b.kind, base, ds, indices, b.scaler);
  MlpModel model = b.model;
  const RowMatrix raw = forward_eval_chunked(model, x);
  const std::vector<double> pred = predicted_rates(b.kind, base, ds, indices, raw, b.scaler);
  double acc = 0.0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const ChannelSample& s = ds.samples[indices[i]];
    const double r = sum_rate(base.with_power(s.power_budget(base.noise_variance)), s.H,
                              s.W_label);
    acc += pred[i] / r;
  }
  return acc / static_cast<double>(indices.size());
}

std::vector<SweepRow> snr_sweep(const ModelBundle& b, const Dataset& ds,
                                std::span<const std::size_t> indices, double bin_step) {
  if (!(bin_step > 0.0)) throw std::invalid_argument("snr_sweep: bin_step must be > 0");
  const SystemConfig base = ds.config();
  const RowMatrix x = featurize_batch(b.kind, base, ds, indices, b.scaler);
  MlpModel model = b.model;
  const RowMatrix raw = forward_eval_chunked(model, x);
  const std::vector<double> pred = predicted_rates(b.kind, base, ds, indices, raw, b.scaler);

  struct Acc {
    double ratio = 0.0, dnn = 0.0, wmmse = 0.0;
    std::size_t count = 0;
  };
  std::map<long long, Acc> bins;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const ChannelSample& s = ds.samples[indices[i]];
    const double r = sum_rate(base.with_power(s.power_budget(base.noise_variance)), s.H,
                              s.W_label);
    Acc& a = bins[std::llround(s.snr_db / bin_step)];
    a.ratio += pred[i] / r;
    a.dnn += pred[i];
    a.wmmse += r;
    a.count += 1;
  }

  const long long lo = std::llround(ds.meta.snr_db_min / bin_step);
  const long long hi = std::llround(ds.meta.snr_db_max / bin_step);
  for (long long c = lo; c <= hi; ++c)
    if (bins.find(c) == bins.end())
      std::fprintf(stderr, "snr_sweep: empty bin at %.1f dB, row omitted\n",
                   static_cast<double>(c) * bin_step);

  std::vector<SweepRow> rows;
  for (const auto& [center, a] : bins) {
    SweepRow row;
    row.snr_db = static_cast<double>(center) * bin_step;
    row.accuracy = a.ratio / static_cast<double>(a.count);
    row.rate_dnn = a.dnn / static_cast<double>(a.count);
    row.rate_wmmse = a.wmmse / static_cast<double>(a.count);
    row.count = a.count;
    rows.push_back(row);
  }
  return rows;
}

std::vector<LatencyRow> bench_latency(const std::vector<ModelBundle>& bundles,
                                      const WmmseOptions& wmmse_opts,
                                      std::size_t batch, int repeats, int warmup,
                                      std::uint64_t seed) {
  if (repeats < 1) throw std::invalid_argument("bench_latency: repeats must be >= 1");
  if (warmup < 0) throw std::invalid_argument("bench_latency: warmup must be >= 0");
  if (bundles.empty()) throw std::invalid_argument("bench_latency: no models");

  const SystemConfig base = bundles.front().cfg;
  std::vector<CMat> h(batch);
  std::vector<double> snr(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    Rng rng(derive_seed(seed, i));
    snr[i] = rng.uniform(bundles.front().snr_db_min, bundles.front().snr_db_max);
    h[i] = CMat(base.n_antennas, base.n_users);
    for (std::size_t k = 0; k < base.n_users; ++k)
      for (std::size_t a = 0; a < base.n_antennas; ++a) h[i].col[k][a] = rng.cnormal();
  }

  using clock = std::chrono::steady_clock;
  volatile double sink = 0.0;

  std::vector<std::function<void()>> pipelines;
  std::vector<std::string> names;

  // baseline: full solver, one sample at a time, single-threaded
  names.emplace_back("wmmse");
  pipelines.emplace_back([&] {
    double acc = 0.0;
    for (std::size_t i = 0; i < batch; ++i) {
      const SystemConfig cfg = base.with_power(
          SystemConfig::power_for_snr_db(base.noise_variance, snr[i]));
      acc += solve(cfg, h[i], wmmse_opts).trace.back();
    }
    sink = sink + acc;
  });

  std::vector<MlpModel> models;
  models.reserve(bundles.size());
  for (const ModelBundle& b : bundles) {
    if (b.cfg.n_antennas != base.n_antennas || b.cfg.n_users != base.n_users)
      throw std::invalid_argument("bench_latency: bundle dimensions differ");
    models.push_back(b.model);
  }
  for (std::size_t bi = 0; bi < bundles.size(); ++bi) {
    const ModelBundle& b = bundles[bi];
    MlpModel& model = models[bi];
    const std::size_t fd = feature_dim(b.kind, base.n_antennas, base.n_users);
    names.emplace_back(param_kind_name(b.kind));
    pipelines.emplace_back([&, fd] {
      RowMatrix x(batch, fd);
#pragma omp parallel for schedule(static) if (kernels::threads() > 1)
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(batch); ++i) {
        const std::vector<double> row = featurize(b.kind, base, h[i], snr[i], b.scaler);
        std::copy(row.begin(), row.end(), x.row(i));
      }
      const RowMatrix raw = mlp_forward(model, x, Mode::Eval);
      double acc = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : acc) \
    if (kernels::threads() > 1)
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(batch); ++i) {
        const double p = SystemConfig::power_for_snr_db(base.noise_variance, snr[i]);
        const CMat w = postprocess(
            b.kind, base, std::span<const double>(raw.row(i), raw.cols), p, b.scaler);
        acc += w.col[0][0].real();
      }
      sink = sink + acc;
    });
  }

  // One measurement of every scheme per round, with the within-round order
  // rotating each round: machine load drift and the cache state left behind
  // by the previous scheme land on every pipeline equally often.
  const std::size_t n_schemes = pipelines.size();
  std::vector<double> total_ms(n_schemes, 0.0);
  for (int r = 0; r < warmup; ++r)
    for (auto& body : pipelines) body();
  for (int round = 0; round < repeats; ++round)
    for (std::size_t s = 0; s < n_schemes; ++s) {
      const std::size_t p = (round + s) % n_schemes;
      const auto t0 = clock::now();
      pipelines[p]();
      const auto t1 = clock::now();
      total_ms[p] += std::chrono::duration<double, std::milli>(t1 - t0).count();
    }

  std::vector<LatencyRow> rows;
  for (std::size_t p = 0; p < n_schemes; ++p)
    rows.push_back({names[p], total_ms[p] / static_cast<double>(repeats)});
  return rows;
}

void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& m) {
  double max_train = 0.0;
  for (const EpochMetrics& e : m) max_train = std::max(max_train, e.train_loss);
  const double norm = max_train > 0.0 ? max_train : 1.0;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_metrics_csv: cannot open " + path);
  out << "epoch,train_loss,val_loss,train_loss_norm,val_loss_norm,train_acc,val_acc\n";
  char buf[256];
  for (const EpochMetrics& e : m) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", e.epoch,
                  e.train_loss, e.val_loss, e.train_loss / norm, e.val_loss / norm,
                  e.train_acc, e.val_acc);
    out << buf;
  }
}

void write_sweep_csv(const std::string& path, ParamKind kind,
                     const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_sweep_csv: cannot open " + path);
  out << "snr_db,kind,accuracy,sum_rate_dnn,sum_rate_wmmse\n";
  char buf[256];
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.1f,%s,%.9g,%.9g,%.9g\n", r.snr_db,
                  param_kind_name(kind), r.accuracy, r.rate_dnn, r.rate_wmmse);
    out << buf;
  }
}

}  // namespace cpsp
