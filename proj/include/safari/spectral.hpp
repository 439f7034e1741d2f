#pragma once

#include <vector>

#include "safari/ssm.hpp"
#include "safari/types.hpp"

namespace safari {

/// Full complex eigendecomposition with conjugate pairs adjacent and
/// eigenvalues sorted by descending |lambda - 1|, so the retained block of
/// the redundancy split is a prefix.
struct Spectrum {
  ComplexVector eigenvalues;
  ComplexMatrix eigenvectors;   // columns aligned with eigenvalues
  ComplexMatrix inverse_rows;   // rows of V^-1
  double condition_estimate = 0.0;
};

Spectrum eigendecompose(const Matrix& A);

struct RankSplit {
  std::vector<Index> retained;
  std::vector<Index> unit;
  Index n_eff = 0;
};

/// unit = { i : |lambda_i - 1| <= tol_one }, retained = complement.
RankSplit effective_rank_split(const Spectrum& spec, double tol_one = 1e-6);

/// Truncated diagonal system: retained eigenvalues, the matching rows of
/// V^-1 B, and the eigenvector rows to absorb into a downstream output map
/// (C over original coordinates becomes C * v_rows^T over reduced ones).
struct ReducedSystem {
  Index n_eff = 0;
  ComplexVector lambda;
  ComplexVector b_tilde;
  ComplexMatrix v_rows;             // n_eff x N
  bool half_storage = false;
  std::vector<uint8_t> real_mode;   // per stored entry, only under half_storage
};

/// Slice the retained prefix out of the spectrum. Verifies on random probe
/// readouts that the dropped directions carry no kernel mass and throws
/// inconsistent-partition otherwise.
ReducedSystem truncate_system(const ContinuousSSM& ssm, const Spectrum& spec,
                              Index n_eff);

/// Reduction through an orthonormal basis of range(Gram): compresses A and B
/// onto the frame's span before diagonalizing, which is exact for the
/// constructors here (B lies in range(Gram) by construction) and avoids the
/// degenerate eigenvalue-1 cluster that eigen-slicing cannot separate when
/// the span carries a mode at eigenvalue 1.
ReducedSystem reduce_frame_system(const ContinuousSSM& ssm, const SampledFrame& frame,
                                  double rank_rtol = 1e-10);

/// Store one member of each conjugate pair (flagging real modes); downstream
/// real-output computations double the real part of paired contributions.
ReducedSystem compress_conjugates(const ReducedSystem& rs);

enum class DiscretizationMethod { Zoh, Bilinear };

/// Discrete transition: diagonal complex form for reduced systems, dense
/// real form otherwise. Both follow the -A/theta sign convention, so
/// stability means |a_d| <= 1.
struct DiscreteSystem {
  bool diagonal = false;
  // diagonal path
  ComplexVector a_diag;
  ComplexVector b_diag;
  bool half_storage = false;
  std::vector<uint8_t> real_mode;
  // dense path
  Matrix A_dense;
  Vector B_dense;
  double dt = 1.0;
  DiscretizationMethod method = DiscretizationMethod::Zoh;

  Index dim() const { return diagonal ? a_diag.size() : A_dense.rows(); }
};

DiscreteSystem discretize(const TimeInvariantSystem& sys, double dt,
                          DiscretizationMethod method);
DiscreteSystem discretize(const ReducedSystem& sys, double theta, double dt,
                          DiscretizationMethod method);

/// Residual check A V = V diag(lambda) within tol * ||A||_F.
double eigen_residual(const Matrix& A, const Spectrum& spec);

}  // namespace safari
