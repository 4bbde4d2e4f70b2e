#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpsp/kernels.hpp"

namespace cpsp {

// Feed-forward stack: input -> 4 hidden layers {128, 256, 256, 128} -> linear
// output head. Batch normalization sits before the activation on the first
// bn_hidden_layers hidden layers; every hidden layer uses a PReLU with one
// shared slope.
struct MlpSpec {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::vector<std::size_t> hidden_dims = {128, 256, 256, 128};
  std::size_t bn_hidden_layers = 3;
};

std::size_t param_count(const MlpSpec& spec);

enum class Mode { Train, Eval };

struct MlpModel {
  MlpSpec spec;
  std::vector<RowMatrix> w;             // (fan_in, fan_out) per linear layer
  std::vector<std::vector<double>> b;   // fan_out per linear layer
  std::vector<std::vector<double>> bn_gamma, bn_beta;
  std::vector<std::vector<double>> bn_run_mean, bn_run_var;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;
  std::vector<double> prelu;            // one slope per hidden layer

  std::size_t n_layers() const { return w.size(); }
};

// Fan-in uniform init: weights and biases of a layer drawn from
// U(-1/sqrt(fan_in), 1/sqrt(fan_in)); BN gamma = 1, beta = 0; PReLU slope
// 0.25. Deterministic in seed.
MlpModel make_mlp(const MlpSpec& spec, std::uint64_t seed);

// Everything backward needs from the forward pass.
struct ForwardCache {
  bool valid = false;
  std::vector<RowMatrix> inputs;     // input of each linear layer
  std::vector<RowMatrix> pre_bn;     // z of BN layers
  std::vector<RowMatrix> xhat;       // normalized z of BN layers
  std::vector<std::vector<double>> mean, var;
  std::vector<RowMatrix> pre_act;    // PReLU input of each hidden layer
};

// Train mode uses batch statistics (batch size >= 2) and updates the running
// stats in place; eval mode uses the running stats and leaves the model
// untouched. Pass a cache to enable a subsequent backward pass.
RowMatrix mlp_forward(MlpModel& model, const RowMatrix& x, Mode mode,
                      ForwardCache* cache = nullptr);

// Parameter registry; gradients and Adam moments use the same order:
// w0, b0, ..., wL, bL, gamma0, beta0, ..., prelu (one block).
struct ParamRef {
  std::string name;
  double* data;
  std::size_t size;
};
std::vector<ParamRef> param_refs(MlpModel& model);

using Gradients = std::vector<std::vector<double>>;

// Reverse-mode gradients for every parameter given d(loss)/d(output).
// Requires the cache of a train-mode forward on the same batch.
Gradients mlp_backward(const MlpModel& model, const ForwardCache& cache,
                       const RowMatrix& dy);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m, v;
};

AdamState make_adam(MlpModel& model, double lr);
void adam_step(AdamState& state, MlpModel& model, const Gradients& grads);

}  // namespace cpsp
