#include "cpsp/neural_net.hpp"

#include <cmath>
#include <stdexcept>

#include "cpsp/rng.hpp"

namespace cpsp {

namespace {

std::vector<std::size_t> layer_dims(const MlpSpec& spec) {
  std::vector<std::size_t> d;
  d.push_back(spec.input_dim);
  for (std::size_t h : spec.hidden_dims) d.push_back(h);
  d.push_back(spec.output_dim);
  return d;
}

}  // namespace

std::size_t param_count(const MlpSpec& spec) {
  const std::vector<std::size_t> d = layer_dims(spec);
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < d.size(); ++l) count += d[l] * d[l + 1] + d[l + 1];
  for (std::size_t l = 0; l < spec.bn_hidden_layers; ++l) count += 2 * spec.hidden_dims[l];
  count += spec.hidden_dims.size();  // shared PReLU slopes
  return count;
}

MlpModel make_mlp(const MlpSpec& spec, std::uint64_t seed) {
  if (spec.input_dim == 0 || spec.output_dim == 0)
    throw std::invalid_argument("make_mlp: zero input or output dim");
  if (spec.bn_hidden_layers > spec.hidden_dims.size())
    throw std::invalid_argument("make_mlp: more BN layers than hidden layers");

  MlpModel m;
  m.spec = spec;
  Rng rng(seed);
  const std::vector<std::size_t> d = layer_dims(spec);
  for (std::size_t l = 0; l + 1 < d.size(); ++l) {
    const std::size_t fan_in = d[l], fan_out = d[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    RowMatrix w(fan_in, fan_out);
    for (double& x : w.data) x = rng.uniform(-bound, bound);
    std::vector<double> b(fan_out);
    for (double& x : b) x = rng.uniform(-bound, bound);
    m.w.push_back(std::move(w));
    m.b.push_back(std::move(b));
  }
  for (std::size_t l = 0; l < spec.bn_hidden_layers; ++l) {
    const std::size_t c = spec.hidden_dims[l];
    m.bn_gamma.emplace_back(c, 1.0);
    m.bn_beta.emplace_back(c, 0.0);
    m.bn_run_mean.emplace_back(c, 0.0);
    m.bn_run_var.emplace_back(c, 1.0);
  }
  m.prelu.assign(spec.hidden_dims.size(), 0.25);
  return m;
}

namespace {

// Eval-mode fast path: per layer the bias, running-stat normalization, affine
// and activation collapse into out = prelu(A * z + B) with per-feature
// constants, one elementwise pass after each matrix product.
RowMatrix forward_eval(const MlpModel& model, const RowMatrix& x) {
  const std::size_t batch = x.rows;
  const std::size_t n_hidden = model.spec.hidden_dims.size();
  RowMatrix cur = x;
  std::vector<double> a, b;
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    const std::size_t out_dim = model.w[l].cols;
    RowMatrix z(batch, out_dim);
    kernels::gemm_nn(batch, out_dim, cur.cols, cur.data.data(), model.w[l].data.data(),
                     z.data.data());
    a.assign(out_dim, 1.0);
    b = model.b[l];
    if (l < model.spec.bn_hidden_layers) {
      for (std::size_t j = 0; j < out_dim; ++j) {
        const double inv = 1.0 / std::sqrt(model.bn_run_var[l][j] + model.bn_eps);
        a[j] = model.bn_gamma[l][j] * inv;
        b[j] = a[j] * (model.b[l][j] - model.bn_run_mean[l][j]) + model.bn_beta[l][j];
      }
    }
    // branchless activation keeps the pass cost independent of sign patterns
    const double slope = l < n_hidden ? model.prelu[l] : 1.0;
    double* __restrict zd = z.data.data();
    const double* __restrict av = a.data();
    const double* __restrict bv = b.data();
    for (std::size_t i = 0; i < batch; ++i) {
      double* __restrict zr = zd + i * out_dim;
#pragma omp simd
      for (std::size_t j = 0; j < out_dim; ++j) {
        const double v = av[j] * zr[j] + bv[j];
        zr[j] = v < 0.0 ? v * slope : v;
      }
    }
    cur = std::move(z);
  }
  return cur;
}

}  // namespace

RowMatrix mlp_forward(MlpModel& model, const RowMatrix& x, Mode mode,
                      ForwardCache* cache) {
  if (x.cols != model.spec.input_dim)
    throw std::invalid_argument("mlp_forward: input width mismatch");
  if (mode == Mode::Train && x.rows < 2)
    throw std::invalid_argument("mlp_forward: train mode needs batch size >= 2");
  if (mode == Mode::Eval && cache == nullptr) return forward_eval(model, x);

  const std::size_t n_hidden = model.spec.hidden_dims.size();
  const std::size_t batch = x.rows;
  if (cache != nullptr) {
    *cache = ForwardCache{};
    cache->pre_bn.resize(model.spec.bn_hidden_layers);
    cache->xhat.resize(model.spec.bn_hidden_layers);
    cache->mean.resize(model.spec.bn_hidden_layers);
    cache->var.resize(model.spec.bn_hidden_layers);
    cache->pre_act.resize(n_hidden);
  }

  RowMatrix cur = x;
  for (std::size_t l = 0; l < model.n_layers(); ++l) {
    if (cache != nullptr) cache->inputs.push_back(cur);
    const std::size_t out_dim = model.w[l].cols;
    RowMatrix z(batch, out_dim);
    kernels::gemm_nn(batch, out_dim, cur.cols, cur.data.data(), model.w[l].data.data(),
                     z.data.data());
    for (std::size_t i = 0; i < batch; ++i) {
      double* zr = z.row(i);
      for (std::size_t j = 0; j < out_dim; ++j) zr[j] += model.b[l][j];
    }

    if (l == model.n_layers() - 1) {
      cur = std::move(z);  // linear output head
      break;
    }

    if (l < model.spec.bn_hidden_layers) {
      if (cache != nullptr) cache->pre_bn[l] = z;
      std::vector<double> mean(out_dim, 0.0), var(out_dim, 0.0);
      if (mode == Mode::Train) {
        // batch statistics, biased variance; one column at a time so the
        // reduction order is fixed
#pragma omp parallel for schedule(static) if (kernels::threads() > 1)
        for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(out_dim); ++j) {
          double s = 0.0;
          for (std::size_t i = 0; i < batch; ++i) s += z.at(i, j);
          const double mu = s / static_cast<double>(batch);
          double sv = 0.0;
          for (std::size_t i = 0; i < batch; ++i) {
            const double d = z.at(i, j) - mu;
            sv += d * d;
          }
          mean[j] = mu;
          var[j] = sv / static_cast<double>(batch);
        }
        for (std::size_t j = 0; j < out_dim; ++j) {
          model.bn_run_mean[l][j] =
              (1.0 - model.bn_momentum) * model.bn_run_mean[l][j] +
              model.bn_momentum * mean[j];
          model.bn_run_var[l][j] = (1.0 - model.bn_momentum) * model.bn_run_var[l][j] +
                                   model.bn_momentum * var[j];
        }
      } else {
        mean = model.bn_run_mean[l];
        var = model.bn_run_var[l];
      }

      RowMatrix xh(batch, out_dim);
      for (std::size_t i = 0; i < batch; ++i) {
        const double* zr = z.row(i);
        double* xr = xh.row(i);
        for (std::size_t j = 0; j < out_dim; ++j)
          xr[j] = (zr[j] - mean[j]) / std::sqrt(var[j] + model.bn_eps);
      }
      if (cache != nullptr) {
        cache->mean[l] = mean;
        cache->var[l] = var;
        cache->xhat[l] = xh;
      }
      for (std::size_t i = 0; i < batch; ++i) {
        double* xr = xh.row(i);
        for (std::size_t j = 0; j < out_dim; ++j)
          xr[j] = model.bn_gamma[l][j] * xr[j] + model.bn_beta[l][j];
      }
      z = std::move(xh);
    }

    if (cache != nullptr) cache->pre_act[l] = z;
    const double a = model.prelu[l];
    for (double& v : z.data)
      if (v < 0.0) v *= a;
    cur = std::move(z);
  }

  if (cache != nullptr) cache->valid = true;
  return cur;
}

std::vector<ParamRef> param_refs(MlpModel& m) {
  std::vector<ParamRef> refs;
  for (std::size_t l = 0; l < m.n_layers(); ++l) {
    refs.push_back({"w" + std::to_string(l), m.w[l].data.data(), m.w[l].data.size()});
    refs.push_back({"b" + std::to_string(l), m.b[l].data(), m.b[l].size()});
  }
  for (std::size_t l = 0; l < m.bn_gamma.size(); ++l) {
    refs.push_back({"bn_gamma" + std::to_string(l), m.bn_gamma[l].data(),
                    m.bn_gamma[l].size()});
    refs.push_back(
        {"bn_beta" + std::to_string(l), m.bn_beta[l].data(), m.bn_beta[l].size()});
  }
  refs.push_back({"prelu", m.prelu.data(), m.prelu.size()});
  return refs;
}

Gradients mlp_backward(const MlpModel& model, const ForwardCache& cache,
                       const RowMatrix& dy) {
  if (!cache.valid) throw std::runtime_error("mlp_backward: no cached forward pass");
  const std::size_t batch = dy.rows;
  if (dy.cols != model.spec.output_dim || cache.inputs.front().rows != batch)
    throw std::invalid_argument("mlp_backward: upstream gradient shape mismatch");

  const std::size_t n_layers = model.n_layers();
  const std::size_t n_hidden = model.spec.hidden_dims.size();

  std::vector<RowMatrix> gw(n_layers);
  std::vector<std::vector<double>> gb(n_layers);
  std::vector<std::vector<double>> ggamma(model.bn_gamma.size()),
      gbeta(model.bn_gamma.size());
  std::vector<double> gprelu(n_hidden, 0.0);

  RowMatrix up = dy;
  for (std::size_t l = n_layers; l-- > 0;) {
    if (l < n_hidden) {
      // PReLU backward with the shared slope
      const RowMatrix& pre = cache.pre_act[l];
      const double a = model.prelu[l];
      double ga = 0.0;
      for (std::size_t i = 0; i < up.data.size(); ++i) {
        const double p = pre.data[i];
        if (p < 0.0) {
          ga += up.data[i] * p;
          up.data[i] *= a;
        }
      }
      gprelu[l] = ga;

      if (l < model.spec.bn_hidden_layers) {
        const RowMatrix& xh = cache.xhat[l];
        const std::size_t dim = xh.cols;
        ggamma[l].assign(dim, 0.0);
        gbeta[l].assign(dim, 0.0);
        const RowMatrix& z = cache.pre_bn[l];
        RowMatrix dz(batch, dim);
        const double inv_b = 1.0 / static_cast<double>(batch);
#pragma omp parallel for schedule(static) if (kernels::threads() > 1)
        for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(dim); ++j) {
          const double mu = cache.mean[l][j];
          const double inv_std = 1.0 / std::sqrt(cache.var[l][j] + model.bn_eps);
          double s_gamma = 0.0, s_beta = 0.0;
          for (std::size_t i = 0; i < batch; ++i) {
            s_gamma += up.at(i, j) * xh.at(i, j);
            s_beta += up.at(i, j);
          }
          ggamma[l][j] = s_gamma;
          gbeta[l][j] = s_beta;

          // dxhat = up * gamma; fold the mean/variance terms per column
          const double g = model.bn_gamma[l][j];
          double s_dxhat = 0.0, s_dxhat_xc = 0.0;
          for (std::size_t i = 0; i < batch; ++i) {
            const double dxh = up.at(i, j) * g;
            s_dxhat += dxh;
            s_dxhat_xc += dxh * (z.at(i, j) - mu);
          }
          const double dvar = s_dxhat_xc * (-0.5) * inv_std * inv_std * inv_std;
          const double dmean = -inv_std * s_dxhat;
          for (std::size_t i = 0; i < batch; ++i) {
            const double dxh = up.at(i, j) * g;
            dz.at(i, j) = dxh * inv_std +
                          dvar * 2.0 * (z.at(i, j) - mu) * inv_b + dmean * inv_b;
          }
        }
        up = std::move(dz);
      }
    }

    // linear backward
    const RowMatrix& x = cache.inputs[l];
    gw[l] = RowMatrix(model.w[l].rows, model.w[l].cols);
    kernels::gemm_tn(x.cols, up.cols, batch, x.data.data(), up.data.data(),
                     gw[l].data.data());
    gb[l].assign(up.cols, 0.0);
    kernels::colsum(batch, up.cols, up.data.data(), gb[l].data());
    if (l > 0) {
      RowMatrix dx(batch, x.cols);
      kernels::gemm_nt(batch, x.cols, up.cols, up.data.data(), model.w[l].data.data(),
                       dx.data.data());
      up = std::move(dx);
    }
  }

  Gradients g;
  for (std::size_t l = 0; l < n_layers; ++l) {
    g.push_back(std::move(gw[l].data));
    g.push_back(std::move(gb[l]));
  }
  for (std::size_t l = 0; l < ggamma.size(); ++l) {
    g.push_back(std::move(ggamma[l]));
    g.push_back(std::move(gbeta[l]));
  }
  g.push_back(std::move(gprelu));
  return g;
}

AdamState make_adam(MlpModel& model, double lr) {
  AdamState s;
  s.lr = lr;
  for (const ParamRef& r : param_refs(model)) {
    s.m.emplace_back(r.size, 0.0);
    s.v.emplace_back(r.size, 0.0);
  }
  return s;
}

void adam_step(AdamState& state, MlpModel& model, const Gradients& grads) {
  std::vector<ParamRef> refs = param_refs(model);
  if (grads.size() != refs.size())
    throw std::invalid_argument("adam_step: gradient block count mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t r = 0; r < refs.size(); ++r) {
    if (grads[r].size() != refs[r].size)
      throw std::invalid_argument("adam_step: gradient size mismatch at " + refs[r].name);
    double* p = refs[r].data;
    std::vector<double>& m = state.m[r];
    std::vector<double>& v = state.v[r];
    for (std::size_t i = 0; i < refs[r].size; ++i) {
      const double g = grads[r][i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      p[i] -= state.lr * mh / (std::sqrt(vh) + state.eps);
    }
  }
}

}  // namespace cpsp
