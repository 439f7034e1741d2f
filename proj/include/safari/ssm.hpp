#pragma once

#include <string>

#include "safari/frames.hpp"
#include "safari/types.hpp"

namespace safari {

enum class Measure { Scaled, Translated };
enum class Species { HippoLegS, HippoLegT, Walrus };

std::string to_string(Measure m);
std::string to_string(Species s);

/// Continuous-time pair (A, B). A stores the positive-spectrum matrix; the
/// minus sign lives in the dynamics dx/dt = -(1/t) A x + (1/t) B u (scaled)
/// or -(1/theta) A x + (1/theta) B u (translated).
struct ContinuousSSM {
  Matrix A;
  Vector B;
  Measure measure = Measure::Scaled;
  Species species = Species::Walrus;
  std::string frame_ref;

  Index dim() const { return A.rows(); }
};

/// Eq.-style time-invariant wrapper: effective dynamics (-A/theta, B/theta),
/// nothing else changes. theta is the timescale in samples.
struct TimeInvariantSystem {
  ContinuousSSM base;
  double theta = 1.0;
  bool translated_warning = false;

  Matrix effective_A() const { return -base.A / theta; }
  Vector effective_B() const { return base.B / theta; }
};

/// Scaled-measure constructor from a sampled frame with duals and
/// derivatives: A = I + quadrature( s * dual'_n(s) * phi_m(s) ),
/// B[n] = dual_n(1). On valid coefficient trajectories the identity block
/// equals the mixed Gram of the frame expansion, so orthonormal input
/// reproduces the HiPPO-LegS closed form; redundant input pins the
/// non-contributing directions at eigenvalue exactly 1.
ContinuousSSM derive_scaled_ssm(const SampledFrame& frame);

/// Sliding-window analog: A[n,m] = dual_n(1) phi_m(1) - quadrature(dual_n phi_m'),
/// B[n] = dual_n(1). Orthonormal Legendre input reproduces HiPPO-LegT.
ContinuousSSM derive_translated_ssm(const SampledFrame& frame);

/// Standard HiPPO-LegS pair: A lower triangular with sqrt(2n+1)sqrt(2k+1)
/// below the diagonal and n+1 on it; B[n] = sqrt(2n+1).
ContinuousSSM hippo_legs_closed_form(Index N);

/// Standard HiPPO-LegT pair: A[n,k] = l_n l_k * (1 if n>=k else (-1)^{n-k}),
/// B[n] = l_n with l_n = sqrt(2n+1).
ContinuousSSM hippo_legt_closed_form(Index N);

TimeInvariantSystem make_time_invariant(const ContinuousSSM& ssm, double theta);

}  // namespace safari
