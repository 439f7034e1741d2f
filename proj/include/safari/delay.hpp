#pragma once

#include <string>
#include <vector>

#include "safari/kernel.hpp"
#include "safari/spectral.hpp"
#include "safari/types.hpp"

namespace safari {

enum class SignalKind { WhiteGaussian, LowpassGaussian, CsvFile };

/// Benchmark stimulus. Low-pass means white Gaussian noise shaped by a
/// two-pole magnitude rolloff 1/sqrt(1 + (f/cutoff)^4), then standardized
/// to zero mean and unit variance per sequence.
struct SignalSpec {
  SignalKind kind = SignalKind::LowpassGaussian;
  Index length = 2048;
  double cutoff = 0.03;
  Index num_sequences = 32;
  uint64_t seed = 0;
  std::string csv_path;
};

/// Rows are sequences.
Matrix generate_signals(const SignalSpec& spec);

struct DelayDataset {
  Matrix inputs;   // num_sequences x T
  Matrix targets;  // same shape; first L0 columns are masked out of losses
  Index mask_start = 0;
};

DelayDataset make_delay_dataset(const SignalSpec& spec, Index delay);

struct DelayResult {
  std::string species;
  double theta = 0.0;    // timescale, samples
  double dt_axis = 0.0;  // 1/theta, the swept axis value
  Index delay = 0;
  double mse = 0.0;
  double log10_mse = 0.0;
  Index n_eff = 0;
  uint64_t seed = 0;
  double train_fraction = 0.8;
  ReadoutMap readout;
};

/// Ridge least squares over (C, D): features are the (real-stacked) state
/// trajectory plus the input column; returns the minimizer. Throws
/// ill-conditioned-gram when the regularized Gram condition exceeds 1e12.
ReadoutMap fit_readout(const ComplexMatrix& states, const Vector& inputs,
                       const Vector& targets, Index mask_start, double ridge,
                       const DiscreteSystem& sys);

/// A species prepared for the benchmark: HiPPO runs dense (its
/// diagonalization is ill-conditioned); WaLRUS runs as the reduced diagonal
/// system with conjugate compression.
struct BenchmarkSpecies {
  std::string label;
  Species species = Species::HippoLegS;
  Index state_budget = 64;  // HiPPO N == WaLRUS n_eff
  // walrus configuration
  WaveletFamily family = WaveletFamily::Haar;
  WaveletBoundary boundary = WaveletBoundary::ZeroPad;
  Index grid_points = 2048;

  // prepared systems
  bool diagonal = false;
  ContinuousSSM continuous;
  ReducedSystem reduced;

  DiscreteSystem discretize_at(double theta, double dt = 1.0) const;
};

BenchmarkSpecies prepare_hippo_species(Index N);
BenchmarkSpecies prepare_walrus_species(
    Index n_eff, WaveletFamily family = WaveletFamily::Haar,
    WaveletBoundary boundary = WaveletBoundary::ZeroPad, Index grid_points = 2048);

struct DelayBenchConfig {
  SignalSpec signal;
  double train_fraction = 0.8;
  double ridge_scale = 1e-8;  // ridge = scale * trace(Gram)/dim
  std::vector<double> theta_axis;        // Fig-1 sweep: dt = 1/theta values
  std::vector<double> theta_axis_delay;  // per-cell grid for the delay sweep
  std::vector<Index> delay_grid;
  Index workers = 1;

  static DelayBenchConfig defaults();
};

DelayResult eval_delay(const BenchmarkSpecies& species, double theta,
                       const DelayDataset& data, double train_fraction,
                       double ridge_scale, uint64_t seed);

/// One DelayResult per (species, theta-axis point) at fixed delay.
std::vector<DelayResult> sweep_theta(const std::vector<BenchmarkSpecies>& species,
                                     const DelayBenchConfig& cfg, Index delay);

/// Best-theta DelayResult per (species, delay), re-optimizing theta per cell
/// over the delay-sweep grid.
std::vector<DelayResult> sweep_delay(const std::vector<BenchmarkSpecies>& species,
                                     const DelayBenchConfig& cfg);

/// Smallest best log10-MSE difference (first species minus second) over the
/// theta sweep at the given delay; the headline Fig-1 number.
double best_log_mse(const std::vector<DelayResult>& table, const std::string& species);

}  // namespace safari
