#include <doctest.h>

#include <cmath>

#include "safari/ssm.hpp"

using namespace safari;

namespace {

double max_err(const ContinuousSSM& got, const ContinuousSSM& want) {
  return std::max((got.A - want.A).cwiseAbs().maxCoeff(),
                  (got.B - want.B).cwiseAbs().maxCoeff());
}

SampledFrame duplicated_constant_frame() {
  SampledFrame f;
  const GridSpec grid{256};
  f.grid = grid.points();
  f.weights = corrected_midpoint_weights(256);
  f.values = Matrix::Ones(2, 256);
  f.right_values = Vector::Ones(2);
  f.kind = FrameKind::WaveletFrame;
  f.redundancy = 2.0;
  f = compute_dual_frame(f);
  f.derivatives = Matrix::Zero(2, 256);
  return f;
}

}  // namespace

TEST_CASE("closed forms at small orders") {
  const ContinuousSSM legs = hippo_legs_closed_form(2);
  CHECK(legs.A(0, 0) == 1.0);
  CHECK(legs.A(0, 1) == 0.0);
  CHECK(legs.A(1, 0) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
  CHECK(legs.A(1, 1) == 2.0);
  CHECK(legs.B[0] == 1.0);
  CHECK(legs.B[1] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));

  const ContinuousSSM legt = hippo_legt_closed_form(2);
  CHECK(legt.A(0, 0) == doctest::Approx(1.0));
  CHECK(legt.A(0, 1) == doctest::Approx(-std::sqrt(3.0)));
  CHECK(legt.A(1, 0) == doctest::Approx(std::sqrt(3.0)));
  CHECK(legt.A(1, 1) == doctest::Approx(3.0));

  CHECK(hippo_legs_closed_form(1).A(0, 0) == 1.0);
  CHECK(hippo_legt_closed_form(1).A(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("legt is dense while legs is lower triangular") {
  const ContinuousSSM legs = hippo_legs_closed_form(4);
  const ContinuousSSM legt = hippo_legt_closed_form(4);
  CHECK(legs.A.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(legt.A.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().cwiseAbs().maxCoeff() >
        0.1);
}

TEST_CASE("scaled constructor reproduces hippo-legs") {
  SUBCASE("order 1 gives A=[[1]], B=[1]") {
    const SampledFrame f = sample_legendre_basis(1, {64});
    const ContinuousSSM ssm = derive_scaled_ssm(f);
    CHECK(std::abs(ssm.A(0, 0) - 1.0) < 1e-12);
    CHECK(std::abs(ssm.B[0] - 1.0) < 1e-12);
  }
  SUBCASE("order 8 matches the closed form at M=4096") {
    const SampledFrame f = sample_legendre_basis(8, {4096});
    CHECK(max_err(derive_scaled_ssm(f), hippo_legs_closed_form(8)) < 1e-4);
  }
  SUBCASE("error decreases monotonically as the grid doubles") {
    double prev = 1e300;
    for (Index M : {1024, 2048, 4096}) {
      const double err = max_err(derive_scaled_ssm(sample_legendre_basis(16, {M})),
                                 hippo_legs_closed_form(16));
      CHECK(err < prev);
      prev = err;
    }
    CHECK(prev < 1e-4);
  }
}

TEST_CASE("translated constructor reproduces hippo-legt") {
  SUBCASE("order 1") {
    const SampledFrame f = sample_legendre_basis(1, {64});
    const ContinuousSSM ssm = derive_translated_ssm(f);
    CHECK(std::abs(ssm.A(0, 0) - 1.0) < 1e-12);
    CHECK(std::abs(ssm.B[0] - 1.0) < 1e-12);
  }
  SUBCASE("order 4 matches the closed form at M=4096") {
    const SampledFrame f = sample_legendre_basis(4, {4096});
    CHECK(max_err(derive_translated_ssm(f), hippo_legt_closed_form(4)) < 1e-4);
  }
}

TEST_CASE("duplicated-constant frame couplings") {
  const SampledFrame f = duplicated_constant_frame();
  const ContinuousSSM sc = derive_scaled_ssm(f);
  CHECK((sc.B.array() - 0.5).abs().maxCoeff() < 1e-10);
  const ContinuousSSM tr = derive_translated_ssm(f);
  CHECK((tr.A.array() - 0.5).abs().maxCoeff() < 1e-10);
  CHECK((tr.B.array() - 0.5).abs().maxCoeff() < 1e-10);
}

TEST_CASE("constructors demand duals and derivatives") {
  SampledFrame f = build_walrus_frame(WaveletFamily::Haar, 2, {256});
  CHECK_THROWS_WITH_AS(derive_scaled_ssm(f), doctest::Contains("missing-duals"),
                       Error);
  f = compute_dual_frame(f);
  f.derivatives.resize(0, 0);
  CHECK_THROWS_WITH_AS(derive_scaled_ssm(f),
                       doctest::Contains("missing-derivatives"), Error);
}

TEST_CASE("row permutations conjugate the scaled system") {
  SampledFrame f =
      compute_dual_frame(build_walrus_frame(WaveletFamily::Haar, 2, {512}));
  const ContinuousSSM base = derive_scaled_ssm(f);
  // rotate rows by one
  const Index K = f.size();
  Eigen::PermutationMatrix<Eigen::Dynamic> P(K);
  for (Index i = 0; i < K; ++i) P.indices()[i] = static_cast<int>((i + 1) % K);
  SampledFrame g = f;
  g.values = P * f.values;
  g.right_values = P * f.right_values;
  g.kind = f.kind;
  g.redundancy = f.redundancy;
  g.duals.resize(0, 0);
  g.derivatives.resize(0, 0);
  g = compute_dual_frame(g);
  g.derivatives = P * f.derivatives;
  const ContinuousSSM perm = derive_scaled_ssm(g);
  const Matrix expect = P * base.A * P.transpose();
  CHECK((perm.A - expect).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("time-invariant wrapper scales by 1/theta only") {
  const ContinuousSSM legs = hippo_legs_closed_form(2);
  SUBCASE("theta=1 negates A exactly") {
    const TimeInvariantSystem ti = make_time_invariant(legs, 1.0);
    CHECK((ti.effective_A() + legs.A).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("theta=100 divides entrywise") {
    const TimeInvariantSystem ti = make_time_invariant(legs, 100.0);
    CHECK(ti.effective_A()(0, 0) == doctest::Approx(-0.01));
    CHECK(ti.effective_A()(1, 0) == doctest::Approx(-std::sqrt(3.0) / 100.0));
    CHECK(ti.effective_A()(1, 1) == doctest::Approx(-0.02));
    CHECK(ti.effective_A()(0, 1) == 0.0);
  }
  SUBCASE("any positive theta is accepted") {
    CHECK_NOTHROW(make_time_invariant(legs, 1.0 / 300.0));
    CHECK_NOTHROW(make_time_invariant(legs, 1e-3));
  }
  SUBCASE("nonpositive theta is rejected") {
    CHECK_THROWS_WITH_AS(make_time_invariant(legs, 0.0),
                         doctest::Contains("nonpositive-theta"), Error);
  }
  SUBCASE("translated input sets the warning flag") {
    CHECK(make_time_invariant(hippo_legt_closed_form(2), 5.0).translated_warning);
    CHECK_FALSE(make_time_invariant(legs, 5.0).translated_warning);
  }
  SUBCASE("scaling law: theta-scaled dynamics equal theta=1 divided by theta") {
    const TimeInvariantSystem t1 = make_time_invariant(legs, 1.0);
    const TimeInvariantSystem t7 = make_time_invariant(legs, 7.5);
    CHECK((t7.effective_A() - t1.effective_A() / 7.5).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((t7.effective_B() - t1.effective_B() / 7.5).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("spectra of constructed systems stay in the right half plane") {
  const SampledFrame f =
      compute_dual_frame(build_walrus_frame(WaveletFamily::Db2, 4, {1024},
                                            WaveletBoundary::Periodic));
  const ContinuousSSM ssm = derive_scaled_ssm(f);
  const Eigen::VectorXcd lam = ssm.A.eigenvalues();
  CHECK(lam.real().minCoeff() > -1e-8);
}
