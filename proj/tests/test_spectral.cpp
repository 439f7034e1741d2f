#include <doctest.h>

#include <cmath>
#include <random>

#include "safari/kernel.hpp"
#include "safari/spectral.hpp"

using namespace safari;

namespace {

SampledFrame walrus16() {
  return compute_dual_frame(build_walrus_frame(WaveletFamily::Haar, 3, {512}));
}

Vector dense_kernel(const ContinuousSSM& ssm, const Vector& C, double theta,
                    Index L) {
  const DiscreteSystem d =
      discretize(make_time_invariant(ssm, theta), 1.0, DiscretizationMethod::Zoh);
  return compute_kernel(d, ReadoutMap::dense(C), L).taps;
}

Vector reduced_kernel(const ReducedSystem& rs, const Vector& C, double theta,
                      Index L) {
  const DiscreteSystem d = discretize(rs, theta, 1.0, DiscretizationMethod::Zoh);
  ReadoutMap r;
  r.C = rs.v_rows * C.cast<Complex>();
  return compute_kernel(d, r, L).taps;
}

}  // namespace

TEST_CASE("eigendecompose on diagonal input") {
  Matrix A = Matrix::Zero(3, 3);
  A.diagonal() << 3.0, 1.0, 1.0;
  const Spectrum s = eigendecompose(A);
  CHECK(s.eigenvalues[0].real() == doctest::Approx(3.0));
  CHECK(s.eigenvalues[1].real() == doctest::Approx(1.0));
  CHECK(s.eigenvalues[2].real() == doctest::Approx(1.0));
  // columns are unit coordinate vectors up to permutation/sign
  for (Index c = 0; c < 3; ++c)
    CHECK(s.eigenvectors.col(c).cwiseAbs().maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("rotation generator yields an adjacent conjugate pair") {
  Matrix A(2, 2);
  A << 0.0, -1.0, 1.0, 0.0;
  const Spectrum s = eigendecompose(A);
  CHECK(s.eigenvalues[0].imag() != 0.0);
  CHECK(s.eigenvalues[1] == std::conj(s.eigenvalues[0]));
}

TEST_CASE("hippo-legs spectrum is 1..N") {
  const ContinuousSSM legs = hippo_legs_closed_form(8);
  const Spectrum s = eigendecompose(legs.A);
  // sorted by descending |lambda - 1| => 8,7,...,1
  for (Index i = 0; i < 8; ++i)
    CHECK(std::abs(s.eigenvalues[i] - Complex(8.0 - static_cast<double>(i), 0.0)) <
          1e-8);
  CHECK(eigen_residual(legs.A, s) < 1e-8 * legs.A.norm());
}

TEST_CASE("reconstruction identity V diag(lambda) V^-1 = A") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gauss;
  Matrix A(12, 12);
  for (Index i = 0; i < 12; ++i)
    for (Index j = 0; j < 12; ++j) A(i, j) = gauss(rng);
  const Spectrum s = eigendecompose(A);
  const Matrix back = (s.eigenvectors * s.eigenvalues.asDiagonal() * s.inverse_rows)
                          .real();
  CHECK((back - A).cwiseAbs().maxCoeff() < 1e-8 * A.norm());
}

TEST_CASE("effective rank split is threshold arithmetic") {
  Spectrum s;
  s.eigenvalues.resize(3);
  s.eigenvalues << Complex(3.0, 0.0), Complex(1.0 + 1e-12, 0.0), Complex(1.0, 0.0);
  const RankSplit split = effective_rank_split(s, 1e-9);
  CHECK(split.n_eff == 1);
  REQUIRE(split.retained.size() == 1);
  CHECK(split.retained[0] == 0);
  CHECK(split.unit.size() == 2);
}

TEST_CASE("walrus haar frame satisfies the unit-eigenvalue count") {
  const SampledFrame f = walrus16();
  const ContinuousSSM ssm = derive_scaled_ssm(f);
  const Spectrum s = eigendecompose(ssm.A);
  const RankSplit split = effective_rank_split(s, 1e-6);
  CHECK(split.n_eff == 8);
  CHECK(split.unit.size() == 8);
  // the unit cluster is at 1 to machine precision, not merely 1e-6
  for (Index i : split.unit)
    CHECK(std::abs(s.eigenvalues[i] - Complex(1.0, 0.0)) < 1e-10);
}

TEST_CASE("truncation preserves kernels on the walrus frame") {
  const SampledFrame f = walrus16();
  const ContinuousSSM ssm = derive_scaled_ssm(f);
  const Spectrum s = eigendecompose(ssm.A);
  const RankSplit split = effective_rank_split(s, 1e-6);
  const ReducedSystem rs = truncate_system(ssm, s, split.n_eff);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 20; ++trial) {
    Vector C(ssm.dim());
    for (Index i = 0; i < C.size(); ++i) C[i] = gauss(rng);
    const Vector full = dense_kernel(ssm, C, 700.0, 1024);
    const Vector red = reduced_kernel(rs, C, 700.0, 1024);
    CHECK((full - red).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("n_eff equal to N reduces to plain diagonalization") {
  const ContinuousSSM legs = hippo_legs_closed_form(6);
  const Spectrum s = eigendecompose(legs.A);
  const ReducedSystem rs = truncate_system(legs, s, 6);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  Vector C(6);
  for (Index i = 0; i < 6; ++i) C[i] = gauss(rng);
  const Vector full = dense_kernel(legs, C, 50.0, 256);
  const Vector red = reduced_kernel(rs, C, 50.0, 256);
  CHECK((full - red).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("degenerate truncation is caught") {
  // dropping the hippo-legs eigenvalue at exactly 1 discards real dynamics
  const ContinuousSSM legs = hippo_legs_closed_form(4);
  const Spectrum s = eigendecompose(legs.A);
  const RankSplit split = effective_rank_split(s, 1e-6);
  CHECK(split.n_eff == 3);  // the lambda = 1 mode is spectrally unit
  CHECK_THROWS_WITH_AS(truncate_system(legs, s, split.n_eff),
                       doctest::Contains("inconsistent-partition"), Error);
}

TEST_CASE("frame-subspace reduction handles spans with a unit-eigenvalue mode") {
  // duplicated constants: eigen-slicing cannot separate the constant mode
  // from the redundancy cluster, the subspace compression can
  SampledFrame f;
  f.grid = GridSpec{256}.points();
  f.weights = corrected_midpoint_weights(256);
  f.values = Matrix::Ones(2, 256);
  f.right_values = Vector::Ones(2);
  f.redundancy = 2.0;
  f = compute_dual_frame(f);
  f.derivatives = Matrix::Zero(2, 256);
  const ContinuousSSM ssm = derive_scaled_ssm(f);
  const ReducedSystem rs = reduce_frame_system(ssm, f);
  CHECK(rs.n_eff == 1);
  // its kernel equals the kernel of the one-dimensional constant system
  Vector C2 = Vector::Ones(2);
  const Vector red = reduced_kernel(rs, C2, 40.0, 128);
  ContinuousSSM one;
  one.A = Matrix::Ones(1, 1);
  one.B = Vector::Ones(1);
  const Vector ref = dense_kernel(one, Vector::Ones(1), 40.0, 128);
  CHECK((red - ref).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("conjugate compression") {
  SUBCASE("all-real spectra stay unchanged in size") {
    const ContinuousSSM legs = hippo_legs_closed_form(5);
    const Spectrum s = eigendecompose(legs.A);
    const ReducedSystem rs = truncate_system(legs, s, 5);
    const ReducedSystem c = compress_conjugates(rs);
    CHECK(c.lambda.size() == 5);
    for (uint8_t flag : c.real_mode) CHECK(flag == 1);
  }
  SUBCASE("pairs store one member and reconstruct real kernels") {
    Matrix A(2, 2);
    A << 1.0, -2.0, 2.0, 1.0;  // eigenvalues 1 +- 2i
    ContinuousSSM ssm;
    ssm.A = A;
    ssm.B = Vector::Ones(2);
    const Spectrum s = eigendecompose(A);
    const ReducedSystem rs = truncate_system(ssm, s, 2);
    const ReducedSystem c = compress_conjugates(rs);
    CHECK(c.lambda.size() == 1);
    CHECK(c.real_mode[0] == 0);
    Vector C(2);
    C << 0.3, -1.1;
    const Vector full = reduced_kernel(rs, C, 20.0, 64);
    // compressed path through the readout absorption
    const DiscreteSystem d = discretize(c, 20.0, 1.0, DiscretizationMethod::Zoh);
    ReadoutMap r;
    r.C = c.v_rows * C.cast<Complex>();
    const Vector comp = compute_kernel(d, r, 64).taps;
    CHECK((full - comp).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("walrus compressed kernel equals the uncompressed one") {
    const SampledFrame f = walrus16();
    const ContinuousSSM ssm = derive_scaled_ssm(f);
    const ReducedSystem rs = reduce_frame_system(ssm, f);
    const ReducedSystem c = compress_conjugates(rs);
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss;
    Vector C(ssm.dim());
    for (Index i = 0; i < C.size(); ++i) C[i] = gauss(rng);
    const Vector un = reduced_kernel(rs, C, 300.0, 512);
    const DiscreteSystem d = discretize(c, 300.0, 1.0, DiscretizationMethod::Zoh);
    ReadoutMap r;
    r.C = c.v_rows * C.cast<Complex>();
    const Vector co = compute_kernel(d, r, 512).taps;
    CHECK((un - co).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("discretization") {
  const ContinuousSSM legs = hippo_legs_closed_form(8);
  SUBCASE("dt to zero gives the identity transition") {
    const DiscreteSystem d = discretize(make_time_invariant(legs, 1.0), 1e-8,
                                        DiscretizationMethod::Zoh);
    CHECK((d.A_dense - Matrix::Identity(8, 8)).norm() < 1e-6);
  }
  SUBCASE("scalar zoh matches the exponential") {
    ContinuousSSM one;
    one.A = Matrix::Ones(1, 1);
    one.B = Vector::Ones(1);
    const DiscreteSystem d =
        discretize(make_time_invariant(one, 1.0), 0.5, DiscretizationMethod::Zoh);
    CHECK(d.A_dense(0, 0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  }
  SUBCASE("bilinear and zoh agree to first order") {
    const TimeInvariantSystem ti = make_time_invariant(legs, 1.0);
    const DiscreteSystem z = discretize(ti, 1e-3, DiscretizationMethod::Zoh);
    const DiscreteSystem b = discretize(ti, 1e-3, DiscretizationMethod::Bilinear);
    Vector C = Vector::LinSpaced(8, 1.0, 2.0);
    const Vector kz = compute_kernel(z, ReadoutMap::dense(C), 512).taps;
    const Vector kb = compute_kernel(b, ReadoutMap::dense(C), 512).taps;
    CHECK((kz - kb).cwiseAbs().maxCoeff() < 1e-4);
  }
  SUBCASE("singular A falls back to the series for B_d") {
    ContinuousSSM z;
    z.A = Matrix::Zero(1, 1);
    z.B = Vector::Ones(1);
    const DiscreteSystem d =
        discretize(make_time_invariant(z, 1.0), 0.25, DiscretizationMethod::Zoh);
    CHECK(d.A_dense(0, 0) == doctest::Approx(1.0));
    CHECK(d.B_dense[0] == doctest::Approx(0.25));  // integral of u over dt
  }
  SUBCASE("discrete stability across the sweep range") {
    const SampledFrame f = walrus16();
    const ContinuousSSM ssm = derive_scaled_ssm(f);
    const ReducedSystem rs = reduce_frame_system(ssm, f);
    for (double axis : {1e-4, 1e-3, 1e-2}) {
      const DiscreteSystem d =
          discretize(rs, 1.0 / axis, 1.0, DiscretizationMethod::Zoh);
      CHECK(d.a_diag.cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
    }
  }
}
