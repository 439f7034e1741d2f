#include "safari/ssm.hpp"

#include <cmath>

namespace safari {

std::string to_string(Measure m) {
  return m == Measure::Scaled ? "scaled" : "translated";
}

std::string to_string(Species s) {
  switch (s) {
    case Species::HippoLegS: return "hippo-legs";
    case Species::HippoLegT: return "hippo-legt";
    case Species::Walrus: return "walrus";
  }
  return "?";
}

namespace {

void require_constructor_inputs(const SampledFrame& frame, bool need_derivs) {
  if (!frame.has_duals()) throw Error("missing-duals", "frame has no dual rows");
  if (need_derivs && !frame.has_derivatives())
    throw Error("missing-derivatives", "frame has no derivative rows");
}

}  // namespace

ContinuousSSM derive_scaled_ssm(const SampledFrame& frame) {
  require_constructor_inputs(frame, true);
  const Index K = frame.size();
  // dual derivatives: differentiation commutes with the dual transform, so
  // duals' = pinv(G) * values' whenever duals = pinv(G) * values
  Matrix dual_derivs;
  if (frame.kind == FrameKind::LegendreOrthonormal) {
    dual_derivs = frame.derivatives;
  } else {
    dual_derivs = detail::finite_difference_rows(
        frame.duals, 1.0 / static_cast<double>(frame.grid_points()), frame.periodic);
  }
  const Vector sw = frame.grid.cwiseProduct(frame.weights);
  ContinuousSSM ssm;
  ssm.A = Matrix::Identity(K, K) +
          dual_derivs * sw.asDiagonal() * frame.values.transpose();
  ssm.B = frame.right_duals;
  ssm.measure = Measure::Scaled;
  ssm.species = frame.kind == FrameKind::LegendreOrthonormal ? Species::HippoLegS
                                                             : Species::Walrus;
  ssm.frame_ref = frame.name;
  if (!ssm.A.allFinite() || !ssm.B.allFinite())
    throw Error("nonfinite-constructor", "constructed A or B has NaN/Inf");
  return ssm;
}

ContinuousSSM derive_translated_ssm(const SampledFrame& frame) {
  require_constructor_inputs(frame, true);
  ContinuousSSM ssm;
  ssm.A = frame.right_duals * frame.right_values.transpose() -
          frame.duals * frame.weights.asDiagonal() * frame.derivatives.transpose();
  ssm.B = frame.right_duals;
  ssm.measure = Measure::Translated;
  ssm.species = frame.kind == FrameKind::LegendreOrthonormal ? Species::HippoLegT
                                                             : Species::Walrus;
  ssm.frame_ref = frame.name;
  if (!ssm.A.allFinite() || !ssm.B.allFinite())
    throw Error("nonfinite-constructor", "constructed A or B has NaN/Inf");
  return ssm;
}

ContinuousSSM hippo_legs_closed_form(Index N) {
  if (N < 1) throw Error("invalid-order", "N must be >= 1");
  ContinuousSSM ssm;
  ssm.A = Matrix::Zero(N, N);
  ssm.B.resize(N);
  for (Index n = 0; n < N; ++n) {
    const double ln = std::sqrt(2.0 * n + 1.0);
    for (Index k = 0; k < n; ++k) ssm.A(n, k) = ln * std::sqrt(2.0 * k + 1.0);
    ssm.A(n, n) = static_cast<double>(n) + 1.0;
    ssm.B[n] = ln;
  }
  ssm.measure = Measure::Scaled;
  ssm.species = Species::HippoLegS;
  ssm.frame_ref = "closed-form";
  return ssm;
}

ContinuousSSM hippo_legt_closed_form(Index N) {
  if (N < 1) throw Error("invalid-order", "N must be >= 1");
  ContinuousSSM ssm;
  ssm.A.resize(N, N);
  ssm.B.resize(N);
  for (Index n = 0; n < N; ++n) {
    const double ln = std::sqrt(2.0 * n + 1.0);
    for (Index k = 0; k < N; ++k) {
      const double lk = std::sqrt(2.0 * k + 1.0);
      ssm.A(n, k) = n >= k ? ln * lk : ln * lk * ((n - k) % 2 == 0 ? 1.0 : -1.0);
    }
    ssm.B[n] = ln;
  }
  ssm.measure = Measure::Translated;
  ssm.species = Species::HippoLegT;
  ssm.frame_ref = "closed-form";
  return ssm;
}

TimeInvariantSystem make_time_invariant(const ContinuousSSM& ssm, double theta) {
  if (!(theta > 0.0)) throw Error("nonpositive-theta", "theta must be positive");
  TimeInvariantSystem ti;
  ti.base = ssm;
  ti.theta = theta;
  ti.translated_warning = ssm.measure == Measure::Translated;
  return ti;
}

}  // namespace safari
