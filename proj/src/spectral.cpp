#include "safari/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

namespace safari {

namespace {

struct EigenGroup {
  std::vector<Index> members;  // one index (real) or two (conjugate pair)
  double dist_from_one = 0.0;
};

}  // namespace

Spectrum eigendecompose(const Matrix& A) {
  if (!A.allFinite()) throw Error("nonfinite-input", "A has NaN/Inf");
  Eigen::EigenSolver<Matrix> es(A);
  if (es.info() != Eigen::Success)
    throw Error("no-convergence", "QR iteration did not converge");

  const ComplexVector lam = es.eigenvalues();
  const ComplexMatrix V = es.eigenvectors();
  const Index N = lam.size();

  // group conjugate pairs (adjacent by construction from the real Schur
  // form), then sort groups by descending |lambda - 1|
  std::vector<EigenGroup> groups;
  for (Index i = 0; i < N;) {
    EigenGroup g;
    g.members.push_back(i);
    if (lam[i].imag() != 0.0 && i + 1 < N &&
        lam[i + 1] == std::conj(lam[i])) {
      g.members.push_back(i + 1);
      i += 2;
    } else {
      ++i;
    }
    g.dist_from_one = std::abs(lam[g.members[0]] - Complex(1.0, 0.0));
    groups.push_back(std::move(g));
  }
  std::stable_sort(groups.begin(), groups.end(),
                   [](const EigenGroup& a, const EigenGroup& b) {
                     return a.dist_from_one > b.dist_from_one;
                   });

  Spectrum spec;
  spec.eigenvalues.resize(N);
  spec.eigenvectors.resize(N, N);
  Index at = 0;
  for (const EigenGroup& g : groups)
    for (Index m : g.members) {
      // positive-imaginary member first within each pair
      spec.eigenvalues[at] = lam[m];
      spec.eigenvectors.col(at) = V.col(m);
      ++at;
    }
  spec.inverse_rows = spec.eigenvectors.fullPivLu().solve(
      ComplexMatrix::Identity(N, N));
  spec.condition_estimate =
      spec.eigenvectors.norm() * spec.inverse_rows.norm();

  const double resid = eigen_residual(A, spec);
  const double scale = std::max(A.norm(), 1e-30);
  if (resid > 1e-8 * scale)
    throw Error("no-convergence",
                "eigen residual " + std::to_string(resid) + " exceeds 1e-8*||A||");
  return spec;
}

double eigen_residual(const Matrix& A, const Spectrum& spec) {
  return (A.cast<Complex>() * spec.eigenvectors -
          spec.eigenvectors * spec.eigenvalues.asDiagonal())
      .norm();
}

RankSplit effective_rank_split(const Spectrum& spec, double tol_one) {
  RankSplit split;
  for (Index i = 0; i < spec.eigenvalues.size(); ++i) {
    if (std::abs(spec.eigenvalues[i] - Complex(1.0, 0.0)) <= tol_one)
      split.unit.push_back(i);
    else
      split.retained.push_back(i);
  }
  split.n_eff = static_cast<Index>(split.retained.size());
  return split;
}

namespace {

// kernel taps of a dense zoh-discretized system, used for probe checks
Vector probe_kernel_dense(const Matrix& A, const Vector& B, const Vector& C,
                          double theta, double dt, Index L) {
  const Matrix Ad = (-A * (dt / theta)).exp();
  const Vector rhs = (Matrix::Identity(A.rows(), A.cols()) - Ad) * B;
  const Vector Bd = A.fullPivLu().solve(rhs);
  Vector taps(L);
  Vector x = Bd;
  for (Index l = 0; l < L; ++l) {
    taps[l] = C.dot(x);
    x = Ad * x;
  }
  return taps;
}

Vector probe_kernel_reduced(const ReducedSystem& rs, const Vector& C,
                            double theta, double dt, Index L) {
  const Index n = rs.lambda.size();
  // v_rows is n_eff x N: C over the original coordinates becomes C * v_rows^T
  const ComplexVector Ct = rs.v_rows * C.cast<Complex>();
  Vector taps(L);
  ComplexVector ad(n), bd(n);
  for (Index k = 0; k < n; ++k) {
    const Complex z = -rs.lambda[k] * (dt / theta);
    ad[k] = std::exp(z);
    bd[k] = std::abs(z) < 1e-8
                ? Complex(dt / theta) * (1.0 + z / 2.0 + z * z / 6.0) * rs.b_tilde[k]
                : (1.0 - ad[k]) / rs.lambda[k] * rs.b_tilde[k];
  }
  ComplexVector x = bd;
  for (Index l = 0; l < L; ++l) {
    Complex acc = 0.0;
    for (Index k = 0; k < n; ++k) acc += Ct[k] * x[k];
    taps[l] = acc.real();
    x = ad.cwiseProduct(x);
  }
  return taps;
}

}  // namespace

ReducedSystem truncate_system(const ContinuousSSM& ssm, const Spectrum& spec,
                              Index n_eff) {
  const Index N = spec.eigenvalues.size();
  if (n_eff < 0 || n_eff > N)
    throw Error("inconsistent-partition", "n_eff out of range");
  ReducedSystem rs;
  rs.n_eff = n_eff;
  rs.lambda = spec.eigenvalues.head(n_eff);
  rs.b_tilde = spec.inverse_rows.topRows(n_eff) * ssm.B.cast<Complex>();
  rs.v_rows = spec.eigenvectors.leftCols(n_eff).transpose();
  rs.half_storage = false;

  // the dropped directions must carry no kernel mass
  if (n_eff < N) {
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double theta = 100.0, dt = 1.0;
    const Index L = 256;
    for (int probe = 0; probe < 3; ++probe) {
      Vector C(N);
      for (Index i = 0; i < N; ++i) C[i] = gauss(rng);
      const Vector full = probe_kernel_dense(ssm.A, ssm.B, C, theta, dt, L);
      const Vector red = probe_kernel_reduced(rs, C, theta, dt, L);
      if ((full - red).cwiseAbs().maxCoeff() > 1e-6)
        throw Error("inconsistent-partition",
                    "truncated kernel deviates from the full kernel; the "
                    "dropped eigendirections carry signal");
    }
  }
  return rs;
}

ReducedSystem reduce_frame_system(const ContinuousSSM& ssm, const SampledFrame& frame,
                                  double rank_rtol) {
  const Matrix G =
      frame.values * frame.weights.asDiagonal() * frame.values.transpose();
  Eigen::JacobiSVD<Matrix> svd(G, Eigen::ComputeFullU);
  const Vector sv = svd.singularValues();
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv[i] > rank_rtol * sv[0]) ++rank;
  const Matrix Q = svd.matrixU().leftCols(rank);

  const Matrix Ar = Q.transpose() * ssm.A * Q;
  const Vector Br = Q.transpose() * ssm.B;
  const Spectrum spec = eigendecompose(Ar);

  ReducedSystem rs;
  rs.n_eff = rank;
  rs.lambda = spec.eigenvalues;
  rs.b_tilde = spec.inverse_rows * Br.cast<Complex>();
  // rows over the original coordinates: C * (Q V)^T recovers the readout
  rs.v_rows = (Q.cast<Complex>() * spec.eigenvectors).transpose();
  rs.half_storage = false;
  return rs;
}

ReducedSystem compress_conjugates(const ReducedSystem& rs) {
  if (rs.half_storage) return rs;
  const Index n = rs.lambda.size();
  std::vector<uint8_t> used(n, 0);
  ReducedSystem out;
  out.n_eff = rs.n_eff;
  out.half_storage = true;
  std::vector<Index> keep;
  for (Index i = 0; i < n; ++i) {
    if (used[i]) continue;
    if (rs.lambda[i].imag() == 0.0) {
      keep.push_back(i);
      out.real_mode.push_back(1);
      used[i] = 1;
      continue;
    }
    Index partner = -1;
    for (Index j = i + 1; j < n; ++j)
      if (!used[j] && rs.lambda[j] == std::conj(rs.lambda[i])) {
        partner = j;
        break;
      }
    if (partner < 0)
      throw Error("unpaired-complex-eigenvalue",
                  "complex eigenvalue without a conjugate partner; A was not real");
    used[i] = used[partner] = 1;
    keep.push_back(rs.lambda[i].imag() > 0.0 ? i : partner);
    out.real_mode.push_back(0);
  }
  const Index m = static_cast<Index>(keep.size());
  out.lambda.resize(m);
  out.b_tilde.resize(m);
  out.v_rows.resize(m, rs.v_rows.cols());
  for (Index k = 0; k < m; ++k) {
    out.lambda[k] = rs.lambda[keep[k]];
    out.b_tilde[k] = rs.b_tilde[keep[k]];
    out.v_rows.row(k) = rs.v_rows.row(keep[k]);
  }
  return out;
}

namespace {

Complex phi1(Complex z) {
  // (e^z - 1)/z with a series fallback near zero
  if (std::abs(z) < 1e-8) return 1.0 + z / 2.0 + z * z / 6.0;
  return (std::exp(z) - 1.0) / z;
}

}  // namespace

DiscreteSystem discretize(const TimeInvariantSystem& sys, double dt,
                          DiscretizationMethod method) {
  if (!(dt > 0.0)) throw Error("nonpositive-dt", "dt must be positive");
  const Index N = sys.base.dim();
  DiscreteSystem d;
  d.diagonal = false;
  d.dt = dt;
  d.method = method;
  const Matrix F = sys.effective_A() * dt;  // -A dt / theta
  const Vector G = sys.effective_B() * dt;
  if (method == DiscretizationMethod::Zoh) {
    d.A_dense = F.exp();
    // B_d = A^{-1} (I - A_d) B in the -A/theta convention; the augmented
    // exponential handles singular A (it evaluates the same phi1 series)
    Eigen::FullPivLU<Matrix> lu(sys.base.A);
    if (lu.isInvertible()) {
      d.B_dense = lu.solve((Matrix::Identity(N, N) - d.A_dense) * sys.base.B);
    } else {
      Matrix aug = Matrix::Zero(N + 1, N + 1);
      aug.topLeftCorner(N, N) = F;
      aug.topRightCorner(N, 1) = G;
      const Matrix e = aug.exp();
      d.B_dense = e.topRightCorner(N, 1);
    }
  } else {
    const Matrix I = Matrix::Identity(N, N);
    Eigen::FullPivLU<Matrix> lu(I - 0.5 * F);
    d.A_dense = lu.solve(I + 0.5 * F);
    d.B_dense = lu.solve(G);
  }
  if (!d.A_dense.allFinite() || !d.B_dense.allFinite())
    throw Error("nonfinite-discretization", "discrete system has NaN/Inf");
  return d;
}

DiscreteSystem discretize(const ReducedSystem& sys, double theta, double dt,
                          DiscretizationMethod method) {
  if (!(dt > 0.0)) throw Error("nonpositive-dt", "dt must be positive");
  if (!(theta > 0.0)) throw Error("nonpositive-theta", "theta must be positive");
  const Index n = sys.lambda.size();
  DiscreteSystem d;
  d.diagonal = true;
  d.dt = dt;
  d.method = method;
  d.half_storage = sys.half_storage;
  d.real_mode = sys.real_mode;
  d.a_diag.resize(n);
  d.b_diag.resize(n);
  const double r = dt / theta;
  for (Index k = 0; k < n; ++k) {
    const Complex z = -sys.lambda[k] * r;
    if (method == DiscretizationMethod::Zoh) {
      d.a_diag[k] = std::exp(z);
      d.b_diag[k] = r * phi1(z) * sys.b_tilde[k];
    } else {
      const Complex den = 1.0 - 0.5 * z;
      d.a_diag[k] = (1.0 + 0.5 * z) / den;
      d.b_diag[k] = r / den * sys.b_tilde[k];
    }
  }
  return d;
}

}  // namespace safari
