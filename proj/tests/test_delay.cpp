#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "safari/delay.hpp"

using namespace safari;

namespace {

SignalSpec small_spec() {
  SignalSpec s;
  s.kind = SignalKind::LowpassGaussian;
  s.length = 512;
  s.cutoff = 0.05;
  s.num_sequences = 8;
  s.seed = 42;
  return s;
}

}  // namespace

TEST_CASE("generated signals are standardized and deterministic") {
  const SignalSpec spec = small_spec();
  const Matrix a = generate_signals(spec);
  const Matrix b = generate_signals(spec);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  for (Index s = 0; s < a.rows(); ++s) {
    CHECK(std::abs(a.row(s).mean()) < 0.05);
    const double sd = std::sqrt(a.row(s).squaredNorm() / a.cols());
    CHECK(std::abs(sd - 1.0) < 0.05);
  }
  SignalSpec other = spec;
  other.seed = 43;
  CHECK((generate_signals(other) - a).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("csv-file stimulus is chunked and standardized") {
  namespace fsys = std::filesystem;
  const fsys::path dir =
      fsys::temp_directory_path() / "safari_delay_csv_test";
  fsys::create_directories(dir);
  {
    std::ofstream out(dir / "sig.csv");
    out << "value\n";
    std::mt19937_64 rng(4);
    std::normal_distribution<double> gauss;
    for (int i = 0; i < 256; ++i) out << 3.0 + 2.0 * gauss(rng) << "\n";
  }
  SignalSpec spec;
  spec.kind = SignalKind::CsvFile;
  spec.csv_path = (dir / "sig.csv").string();
  spec.num_sequences = 4;
  const Matrix u = generate_signals(spec);
  CHECK(u.rows() == 4);
  CHECK(u.cols() == 64);
  for (Index s = 0; s < 4; ++s) {
    CHECK(std::abs(u.row(s).mean()) < 1e-12);
    CHECK(std::abs(std::sqrt(u.row(s).squaredNorm() / 64.0) - 1.0) < 1e-12);
  }
  fsys::remove_all(dir);
}

TEST_CASE("delay dataset shifts and masks") {
  SUBCASE("zero delay reproduces the input") {
    const DelayDataset d = make_delay_dataset(small_spec(), 0);
    CHECK((d.targets - d.inputs).cwiseAbs().maxCoeff() == 0.0);
    CHECK(d.mask_start == 0);
  }
  SUBCASE("a delayed impulse lands where expected") {
    const DelayDataset d = make_delay_dataset(small_spec(), 300);
    CHECK(d.mask_start == 300);
    for (Index t = 300; t < d.inputs.cols(); ++t)
      CHECK(d.targets(0, t) == d.inputs(0, t - 300));
  }
  SUBCASE("delay at or beyond the length is rejected") {
    CHECK_THROWS_WITH_AS(make_delay_dataset(small_spec(), 512),
                         doctest::Contains("delay-exceeds-length"), Error);
  }
}

TEST_CASE("readout fitting") {
  // small dense system driving a known trajectory
  const ContinuousSSM legs = hippo_legs_closed_form(3);
  const DiscreteSystem sys =
      discretize(make_time_invariant(legs, 30.0), 1.0, DiscretizationMethod::Zoh);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> gauss;
  const Index T = 200;
  Vector u(T);
  for (Index t = 0; t < T; ++t) u[t] = gauss(rng);
  ReadoutMap probe;
  probe.C = ComplexVector::Zero(3);
  const ScanResult scan = recurrent_scan(sys, probe, u, true);

  SUBCASE("a state coordinate is fit exactly") {
    const Vector target = scan.states.col(0).real();
    const ReadoutMap r = fit_readout(scan.states, u, target, 0, 0.0, sys);
    CHECK(std::abs(r.C[0].real() - 1.0) < 1e-8);
    CHECK(std::abs(r.C[1].real()) < 1e-8);
    CHECK(std::abs(r.D) < 1e-8);
    // residual at the optimum is numerically zero
    Vector pred = Vector::Zero(T);
    for (Index t = 0; t < T; ++t)
      pred[t] = (r.C.transpose() * scan.states.row(t).transpose())(0).real() +
                r.D * u[t];
    CHECK((pred - target).squaredNorm() / T < 1e-10);
  }
  SUBCASE("orthogonal targets fit to zero coefficients") {
    // residualize a random target against the features
    Matrix X(T, 4);
    X.leftCols(3) = scan.states.real();
    X.col(3) = u;
    Vector target(T);
    for (Index t = 0; t < T; ++t) target[t] = gauss(rng);
    target -= X * (X.transpose() * X).ldlt().solve(X.transpose() * target);
    const ReadoutMap r = fit_readout(scan.states, u, target, 0, 0.0, sys);
    CHECK(r.C.cwiseAbs().maxCoeff() < 1e-8);
    CHECK(std::abs(r.D) < 1e-8);
  }
  SUBCASE("normal equations agree with an svd solve") {
    Vector target(T);
    for (Index t = 0; t < T; ++t) target[t] = gauss(rng);
    const ReadoutMap r = fit_readout(scan.states, u, target, 10, 0.0, sys);
    Matrix X(T - 10, 4);
    X.leftCols(3) = scan.states.real().bottomRows(T - 10);
    X.col(3) = u.tail(T - 10);
    const Vector w =
        X.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(target.tail(T - 10));
    const Vector got = (Vector(4) << r.C.real(), r.D).finished();
    const double mse_w = (X * w - target.tail(T - 10)).squaredNorm() / (T - 10);
    const double mse_r = (X * got - target.tail(T - 10)).squaredNorm() / (T - 10);
    CHECK(std::abs(mse_w - mse_r) < 1e-9);
  }
  SUBCASE("perturbing the optimum never lowers the training loss") {
    Vector target = scan.states.col(1).real() * 0.8;
    for (Index t = 0; t < T; ++t) target[t] += 0.1 * gauss(rng);
    const ReadoutMap r = fit_readout(scan.states, u, target, 0, 0.0, sys);
    Matrix X(T, 4);
    X.leftCols(3) = scan.states.real();
    X.col(3) = u;
    const Vector w0 = (Vector(4) << r.C.real(), r.D).finished();
    const double base = (X * w0 - target).squaredNorm();
    std::mt19937_64 prng(99);
    for (int trial = 0; trial < 20; ++trial) {
      Vector w = w0;
      for (Index i = 0; i < 4; ++i)
        w[i] += 1e-3 * std::normal_distribution<double>()(prng);
      CHECK((X * w - target).squaredNorm() >= base - 1e-12);
    }
  }
}

TEST_CASE("zero delay is solved exactly by feedthrough") {
  SignalSpec spec = small_spec();
  const DelayDataset data = make_delay_dataset(spec, 0);
  const BenchmarkSpecies hippo = prepare_hippo_species(8);
  const DelayResult r = eval_delay(hippo, 200.0, data, 0.75, 0.0, spec.seed);
  CHECK(r.mse < 1e-12);
}

TEST_CASE("species preparation honors the state budget") {
  const BenchmarkSpecies w =
      prepare_walrus_species(16, WaveletFamily::Db2, WaveletBoundary::Periodic, 512);
  CHECK(w.reduced.n_eff == 16);
  CHECK(w.diagonal);
  CHECK_THROWS_WITH_AS(
      prepare_walrus_species(48, WaveletFamily::Db2, WaveletBoundary::Periodic, 512),
      doctest::Contains("invalid-order"), Error);
}

TEST_CASE("hadamard fusion leaves diagonal kernels unchanged") {
  const BenchmarkSpecies w =
      prepare_walrus_species(16, WaveletFamily::Haar, WaveletBoundary::ZeroPad, 512);
  const DiscreteSystem d = w.discretize_at(120.0);
  std::mt19937_64 rng(23);
  std::normal_distribution<double> gauss;
  ReadoutMap r;
  r.C.resize(d.dim());
  for (Index i = 0; i < d.dim(); ++i) r.C[i] = Complex(gauss(rng), gauss(rng));
  const Vector base = compute_kernel(d, r, 256).taps;
  // move B into C elementwise, set B to ones
  DiscreteSystem fused = d;
  ReadoutMap rf = r;
  for (Index i = 0; i < d.dim(); ++i) {
    rf.C[i] *= d.b_diag[i];
    fused.b_diag[i] = 1.0;
  }
  const Vector after = compute_kernel(fused, rf, 256).taps;
  CHECK((base - after).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("single-point sweep grid yields one row per species") {
  DelayBenchConfig cfg;
  cfg.signal = small_spec();
  cfg.theta_axis = {1e-3};
  cfg.delay_grid = {60};
  cfg.workers = 1;
  const std::vector<BenchmarkSpecies> species = {
      prepare_hippo_species(8),
      prepare_walrus_species(8, WaveletFamily::Db2, WaveletBoundary::Periodic, 512)};
  const auto table = sweep_theta(species, cfg, 60);
  CHECK(table.size() == 2);
  CHECK(table[0].delay == 60);
  CHECK(table[0].theta == doctest::Approx(1000.0));
  CHECK(table[0].dt_axis == doctest::Approx(1e-3));
}

TEST_CASE("delay sweep at a single cell reduces to the theta-sweep minimum") {
  DelayBenchConfig cfg;
  cfg.signal = small_spec();
  cfg.theta_axis = {2e-3, 5e-3, 1e-2};
  cfg.theta_axis_delay = cfg.theta_axis;
  cfg.delay_grid = {100};
  const std::vector<BenchmarkSpecies> species = {prepare_hippo_species(8)};
  const auto sweep = sweep_theta(species, cfg, 100);
  double best = 1e300;
  for (const auto& r : sweep) best = std::min(best, r.mse);
  const auto cells = sweep_delay(species, cfg);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].mse == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("identical configs produce identical results") {
  DelayBenchConfig cfg;
  cfg.signal = small_spec();
  cfg.theta_axis = {1e-3, 3e-3};
  const std::vector<BenchmarkSpecies> species = {prepare_hippo_species(8)};
  const auto a = sweep_theta(species, cfg, 40);
  const auto b = sweep_theta(species, cfg, 40);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mse == b[i].mse);  // bitwise equality
    CHECK(a[i].log10_mse == b[i].log10_mse);
  }
}
