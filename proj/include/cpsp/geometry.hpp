#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cpsp/complex_core.hpp"

namespace cpsp {

// Canonical representative of a point of CP^{N-1}: unit norm, first nonzero
// element real and non-negative (normally the first element; see
// project_to_cps for the zero-leading-element corner).
struct CpsPoint {
  CVec v;
  std::size_t dim() const { return v.dim(); }
};

struct CpsProjection {
  CpsPoint point;
  double norm;  // Euclidean norm of the input, the only other lost quantity
};

// Map x != 0 to (x/|x|) e^{-j angle(x_ref)} where x_ref is the first nonzero
// element. The rotated reference element is stored with an exactly zero
// imaginary part. Throws std::domain_error on the zero vector.
CpsProjection project_to_cps(const CVec& x);

// Amplitude angles theta in [0, pi/2] and phase angles phi in [-pi, pi],
// N-1 of each: the 2(N-1) intrinsic coordinates of CP^{N-1}.
struct HypersphericalCoords {
  std::vector<double> theta;
  std::vector<double> phi;
};

// theta_m = atan2(|u_{m+2:}|, |u_{m+1}|) (tail norm over trailing elements),
// phi_m = angle(u_{m+2}), with zero conventions for degenerate magnitudes:
// phi_m = 0 when u_{m+2} = 0, theta_m = 0 when head and tail both vanish.
HypersphericalCoords to_hyperspherical(const CpsPoint& p);

// Inverse construction with the global phase fixed to zero:
//   u_1     = cos(theta_1)
//   u_{m+1} = e^{j phi_m} cos(theta_{m+1}) prod_{i<=m} sin(theta_i)
//   u_N     = e^{j phi_{N-1}} prod_{i<=N-1} sin(theta_i)
// Throws std::domain_error for out-of-range angles.
CpsPoint from_hyperspherical(const HypersphericalCoords& h);

// Real embedding of a canonical point: N real parts followed by the N-1
// imaginary parts of elements 2..N (the reference imaginary part is
// structurally zero and omitted). 2N-1 values.
void embed_cps(const CpsPoint& p, std::span<double> out);
std::size_t embed_dim(std::size_t n) ;

// Rebuild a canonical point from a 2N-1 real embedding produced by
// embed_cps. Assumes the embedding is already unit norm and sign-canonical.
CpsPoint unembed_cps(std::span<const double> emb, std::size_t n);

}  // namespace cpsp
