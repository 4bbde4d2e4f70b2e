#pragma once

#include <cstdint>
#include <vector>

#include "cpsp/complex_core.hpp"

namespace cpsp {

enum class InitMode { MrtFullPower, ScaledRandom };

struct WmmseOptions {
  int max_iter = 10;
  // relative WSR change below which the loop stops early; 0 disables the
  // early stop so exactly max_iter iterations run
  double convergence_tol = 1e-5;
  // |sum_k |w_k|^2 - P| <= bisection_tol * P at the returned multiplier
  double bisection_tol = 1e-10;
  int bisection_max_steps = 200;
  InitMode init_mode = InitMode::MrtFullPower;
  std::uint64_t init_seed = 0;  // used by ScaledRandom and MRT fallback

  void validate() const;
};

// Feasible starting point with Tr(W W^H) = P. MrtFullPower matches each user
// channel direction at equal power P/K; an all-zero channel column falls back
// to a seeded random direction for that user.
CMat init_precoders(const SystemConfig& cfg, const CMat& H, InitMode mode,
                    std::uint64_t seed = 0);

// q_k = (w_k^H h_k) / (sum_j |h_k^H w_j|^2 + sigma^2)
std::vector<cxd> update_receive_filters(const SystemConfig& cfg, const CMat& H,
                                        const CMat& W);

struct WeightUpdate {
  std::vector<double> mse;     // e_k
  std::vector<double> weight;  // c_k = 1/e_k
};

// e_k = |q_k h_k^H w_k - 1|^2 + sum_{j!=k} |q_k h_k^H w_j|^2 + |q_k|^2 sigma^2
WeightUpdate update_weights(const SystemConfig& cfg, const CMat& H, const CMat& W,
                            const std::vector<cxd>& q);

struct PrecoderUpdate {
  CMat W;
  double lambda = 0.0;
};

// w_k = alpha_k c_k q_k^* (G + lambda I)^{-1} h_k with
// G = sum_k alpha_k c_k |q_k|^2 h_k h_k^H. lambda = 0 when the unconstrained
// solution is feasible, otherwise found by bisection on the (strictly
// decreasing) transmit power so the budget binds within bisection_tol * P.
PrecoderUpdate update_precoders(const SystemConfig& cfg, const CMat& H,
                                const std::vector<cxd>& q,
                                const std::vector<double>& c,
                                const WmmseOptions& opts);

struct WmmseSolution {
  CMat W;
  std::vector<double> trace;  // WSR of the initial point, then one per iteration
  double lambda = 0.0;        // multiplier of the last precoder update
  int iterations = 0;
};

// Alternating filter / weight / precoder updates until the relative WSR
// change drops below convergence_tol or max_iter is reached.
WmmseSolution solve(const SystemConfig& cfg, const CMat& H, const WmmseOptions& opts);

}  // namespace cpsp
