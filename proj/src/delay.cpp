#include "safari/delay.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <thread>

namespace safari {

namespace {

// Deterministic standard normals: explicit Box-Muller over mt19937_64 so the
// stream does not depend on the standard library's distribution internals.
Vector gaussian_vector(Index n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&rng]() {
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  };
  Vector out(n);
  for (Index i = 0; i < n; i += 2) {
    const double u1 = uniform(), u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[i] = r * std::cos(2.0 * M_PI * u2);
    if (i + 1 < n) out[i + 1] = r * std::sin(2.0 * M_PI * u2);
  }
  return out;
}

Vector lowpass_shape(const Vector& white, double cutoff) {
  const Index T = white.size();
  ComplexVector X = fft::rfft(white);
  for (Index k = 0; k < X.size(); ++k) {
    const double f = static_cast<double>(k) / static_cast<double>(T);
    X[k] /= std::sqrt(1.0 + std::pow(f / cutoff, 4));
  }
  return fft::irfft(X, T);
}

void standardize(Vector& x) {
  const double mean = x.mean();
  x.array() -= mean;
  const double sd = std::sqrt(x.squaredNorm() / static_cast<double>(x.size()));
  if (sd > 0) x /= sd;
}

Matrix read_csv_signal(const std::string& path, Index num_sequences) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("config-parse", "cannot open signal file " + path);
  std::vector<double> vals;
  char head[4] = {0, 0, 0, 0};
  in.read(head, 4);
  if (in.gcount() == 4 && std::memcmp(head, "SSMK", 4) == 0) {
    uint32_t version = 0;
    uint64_t length = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&length), 8);
    if (version != 1) throw Error("config-parse", "unsupported SSMK version");
    vals.resize(length);
    in.read(reinterpret_cast<char*>(vals.data()),
            static_cast<std::streamsize>(sizeof(double) * length));
    if (!in) throw Error("config-parse", "truncated SSMK stream");
  } else {
    in.clear();
    in.seekg(0);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        vals.push_back(std::stod(line));
      } catch (const std::exception&) {
        if (vals.empty()) continue;  // header row
        throw Error("config-parse", "bad numeric line in " + path);
      }
    }
  }
  const Index per = static_cast<Index>(vals.size()) / num_sequences;
  if (per < 8) throw Error("delay-exceeds-length", "signal file too short");
  Matrix u(num_sequences, per);
  for (Index s = 0; s < num_sequences; ++s)
    for (Index t = 0; t < per; ++t) u(s, t) = vals[static_cast<size_t>(s * per + t)];
  return u;
}

}  // namespace

Matrix generate_signals(const SignalSpec& spec) {
  if (spec.kind == SignalKind::CsvFile) {
    Matrix u = read_csv_signal(spec.csv_path, spec.num_sequences);
    for (Index s = 0; s < u.rows(); ++s) {
      Vector row = u.row(s);
      standardize(row);
      u.row(s) = row.transpose();
    }
    return u;
  }
  Matrix u(spec.num_sequences, spec.length);
  for (Index s = 0; s < spec.num_sequences; ++s) {
    const uint64_t stream = spec.seed ^ (0x9E3779B97F4A7C15ULL * (s + 1));
    Vector row = gaussian_vector(spec.length, stream);
    if (spec.kind == SignalKind::LowpassGaussian)
      row = lowpass_shape(row, spec.cutoff);
    standardize(row);
    u.row(s) = row.transpose();
  }
  return u;
}

DelayDataset make_delay_dataset(const SignalSpec& spec, Index delay) {
  DelayDataset d;
  d.inputs = generate_signals(spec);
  const Index T = d.inputs.cols();
  if (delay < 0 || delay >= T)
    throw Error("delay-exceeds-length",
                "delay " + std::to_string(delay) + " >= length " + std::to_string(T));
  d.targets = Matrix::Zero(d.inputs.rows(), T);
  if (delay == 0)
    d.targets = d.inputs;
  else
    d.targets.rightCols(T - delay) = d.inputs.leftCols(T - delay);
  d.mask_start = delay;
  // generation contract: zero mean, unit variance within 5 percent
  for (Index s = 0; s < d.inputs.rows(); ++s) {
    const double sd =
        std::sqrt(d.inputs.row(s).squaredNorm() / static_cast<double>(T));
    if (std::abs(d.inputs.row(s).mean()) > 0.05 || std::abs(sd - 1.0) > 0.05)
      throw Error("signal-not-standardized", "generated sequence out of tolerance");
  }
  return d;
}

namespace {

// Real feature columns for one time step of a trajectory. Pair modes under
// half storage contribute (2 Re x, -2 Im x); real modes contribute Re x.
Index feature_count(const DiscreteSystem& sys) {
  if (!sys.diagonal) return sys.dim();
  Index nf = 0;
  for (size_t j = 0; j < sys.real_mode.size(); ++j)
    nf += sys.real_mode[j] ? 1 : 2;
  if (!sys.half_storage) nf = 2 * sys.dim();
  return nf;
}

void fill_features(const DiscreteSystem& sys, const ComplexMatrix& states,
                   const Vector& input, Index mask_start, Matrix& X, Index row0) {
  const Index T = states.rows();
  const Index nf = feature_count(sys);
  for (Index t = mask_start; t < T; ++t) {
    const Index r = row0 + t - mask_start;
    Index c = 0;
    if (!sys.diagonal) {
      for (Index j = 0; j < states.cols(); ++j) X(r, c++) = states(t, j).real();
    } else if (sys.half_storage) {
      for (Index j = 0; j < states.cols(); ++j) {
        if (sys.real_mode[static_cast<size_t>(j)]) {
          X(r, c++) = states(t, j).real();
        } else {
          X(r, c++) = 2.0 * states(t, j).real();
          X(r, c++) = -2.0 * states(t, j).imag();
        }
      }
    } else {
      for (Index j = 0; j < states.cols(); ++j) {
        X(r, c++) = states(t, j).real();
        X(r, c++) = -states(t, j).imag();
      }
    }
    X(r, nf) = input[t];
  }
}

ReadoutMap weights_to_readout(const DiscreteSystem& sys, const Vector& w) {
  ReadoutMap r;
  const Index nf = feature_count(sys);
  r.D = w[nf];
  if (!sys.diagonal) {
    r.C.resize(sys.dim());
    for (Index j = 0; j < sys.dim(); ++j) r.C[j] = w[j];
    return r;
  }
  r.C.resize(sys.dim());
  Index c = 0;
  for (Index j = 0; j < sys.dim(); ++j) {
    if (sys.half_storage && sys.real_mode[static_cast<size_t>(j)])
      r.C[j] = Complex(w[c++], 0.0);
    else {
      const double re = w[c++], im = w[c++];
      r.C[j] = Complex(re, im);
    }
  }
  return r;
}

Vector solve_ridge(const Matrix& X, const Vector& y, double ridge_scale,
                   double* ridge_out = nullptr) {
  const Matrix G = X.transpose() * X;
  const Index p = G.rows();
  const double ridge = ridge_scale * G.trace() / static_cast<double>(p);
  Matrix Gr = G + ridge * Matrix::Identity(p, p);
  Eigen::SelfAdjointEigenSolver<Matrix> es(Gr);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12)
    throw Error("ill-conditioned-gram",
                "condition estimate exceeds 1e12; increase the ridge");
  if (ridge_out) *ridge_out = ridge;
  return Gr.ldlt().solve(X.transpose() * y);
}

}  // namespace

ReadoutMap fit_readout(const ComplexMatrix& states, const Vector& inputs,
                       const Vector& targets, Index mask_start, double ridge,
                       const DiscreteSystem& sys) {
  const Index T = states.rows();
  if (inputs.size() != T || targets.size() != T)
    throw Error("shape-mismatch", "states, inputs and targets disagree on T");
  const Index nf = feature_count(sys);
  Matrix X(T - mask_start, nf + 1);
  fill_features(sys, states, inputs, mask_start, X, 0);
  const Vector y = targets.tail(T - mask_start);
  const Vector w = solve_ridge(X, y, ridge);
  return weights_to_readout(sys, w);
}

DiscreteSystem BenchmarkSpecies::discretize_at(double theta, double dt) const {
  if (diagonal) return discretize(reduced, theta, dt, DiscretizationMethod::Zoh);
  return discretize(make_time_invariant(continuous, theta), dt,
                    DiscretizationMethod::Zoh);
}

BenchmarkSpecies prepare_hippo_species(Index N) {
  BenchmarkSpecies s;
  s.label = "hippo-legs";
  s.species = Species::HippoLegS;
  s.state_budget = N;
  s.diagonal = false;
  s.continuous = hippo_legs_closed_form(N);
  return s;
}

BenchmarkSpecies prepare_walrus_species(Index n_eff, WaveletFamily family,
                                        WaveletBoundary boundary, Index grid_points) {
  Index J = 0;
  while ((Index(1) << J) < n_eff) ++J;
  if ((Index(1) << J) != n_eff)
    throw Error("invalid-order", "walrus n_eff must be a power of two");
  BenchmarkSpecies s;
  s.label = "walrus";
  s.species = Species::Walrus;
  s.state_budget = n_eff;
  s.family = family;
  s.boundary = boundary;
  s.grid_points = grid_points;
  s.diagonal = true;
  GridSpec grid{grid_points, GridScheme::UniformMidpoint};
  SampledFrame frame = build_walrus_frame(family, static_cast<int>(J), grid, boundary);
  frame = compute_dual_frame(frame);
  s.continuous = derive_scaled_ssm(frame);
  s.reduced = compress_conjugates(reduce_frame_system(s.continuous, frame));
  return s;
}

DelayResult eval_delay(const BenchmarkSpecies& species, double theta,
                       const DelayDataset& data, double train_fraction,
                       double ridge_scale, uint64_t seed) {
  const Index nseq = data.inputs.rows();
  const Index T = data.inputs.cols();
  const Index ntrain = static_cast<Index>(train_fraction * static_cast<double>(nseq));
  if (ntrain < 1 || ntrain >= nseq)
    throw Error("config-parse", "train fraction leaves no train or eval sequences");

  const DiscreteSystem sys = species.discretize_at(theta);
  const Index nf = feature_count(sys);
  const Index rows_per = T - data.mask_start;

  // scan all sequences once, fill masked feature rows
  Matrix Xtr(ntrain * rows_per, nf + 1);
  Vector ytr(ntrain * rows_per);
  Matrix Xev((nseq - ntrain) * rows_per, nf + 1);
  Vector yev((nseq - ntrain) * rows_per);
  ReadoutMap probe;
  probe.C = ComplexVector::Zero(sys.dim());
  for (Index s = 0; s < nseq; ++s) {
    const Vector u = data.inputs.row(s).transpose();
    const ScanResult scan = recurrent_scan(sys, probe, u, /*keep_states=*/true);
    const bool train = s < ntrain;
    const Index slot = train ? s : s - ntrain;
    Matrix& X = train ? Xtr : Xev;
    fill_features(sys, scan.states, u, data.mask_start, X, slot * rows_per);
    Vector& y = train ? ytr : yev;
    y.segment(slot * rows_per, rows_per) =
        data.targets.row(s).tail(rows_per).transpose();
  }

  const Vector w = solve_ridge(Xtr, ytr, ridge_scale);
  const Vector resid = Xev * w - yev;
  DelayResult r;
  r.species = species.label;
  r.theta = theta;
  r.dt_axis = 1.0 / theta;
  r.delay = data.mask_start;
  r.mse = resid.squaredNorm() / static_cast<double>(resid.size());
  r.log10_mse = std::log10(r.mse);
  r.n_eff = species.state_budget;
  r.seed = seed;
  r.train_fraction = train_fraction;
  r.readout = weights_to_readout(sys, w);
  return r;
}

DelayBenchConfig DelayBenchConfig::defaults() {
  DelayBenchConfig cfg;
  cfg.signal = SignalSpec{};
  auto log_grid = [](double lo, double hi, int n) {
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i)
      g[static_cast<size_t>(i)] =
          std::pow(10.0, std::log10(lo) + (std::log10(hi) - std::log10(lo)) * i /
                                              static_cast<double>(n - 1));
    return g;
  };
  cfg.theta_axis = log_grid(1e-4, 1e-2, 25);
  // short delays need short timescales; the per-cell grid reaches further
  cfg.theta_axis_delay = log_grid(1e-4, 4e-2, 33);
  for (Index l = 50; l <= 500; l += 50) cfg.delay_grid.push_back(l);
  const char* env = std::getenv("SAFARI_WORKERS");
  if (env != nullptr) cfg.workers = std::max(1L, std::atol(env));
  return cfg;
}

namespace {

std::vector<DelayResult> run_cells(
    const std::vector<BenchmarkSpecies>& species,
    const std::vector<std::pair<Index, double>>& cells,  // (delay, dt-axis)
    const DelayBenchConfig& cfg) {
  // datasets are shared per delay value
  std::vector<Index> delays;
  for (const auto& c : cells)
    if (std::find(delays.begin(), delays.end(), c.first) == delays.end())
      delays.push_back(c.first);
  std::vector<DelayDataset> datasets;
  datasets.reserve(delays.size());
  for (Index d : delays) datasets.push_back(make_delay_dataset(cfg.signal, d));

  std::vector<DelayResult> out(cells.size() * species.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= out.size()) return;
      const size_t cell = i / species.size();
      const size_t sp = i % species.size();
      const auto [delay, axis] = cells[cell];
      const size_t di = static_cast<size_t>(
          std::find(delays.begin(), delays.end(), delay) - delays.begin());
      out[i] = eval_delay(species[sp], 1.0 / axis, datasets[di],
                          cfg.train_fraction, cfg.ridge_scale, cfg.signal.seed);
    }
  };
  const Index nw = std::max<Index>(1, cfg.workers);
  if (nw == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (Index t = 0; t < nw; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return out;
}

}  // namespace

std::vector<DelayResult> sweep_theta(const std::vector<BenchmarkSpecies>& species,
                                     const DelayBenchConfig& cfg, Index delay) {
  std::vector<std::pair<Index, double>> cells;
  for (double axis : cfg.theta_axis) cells.emplace_back(delay, axis);
  return run_cells(species, cells, cfg);
}

std::vector<DelayResult> sweep_delay(const std::vector<BenchmarkSpecies>& species,
                                     const DelayBenchConfig& cfg) {
  std::vector<std::pair<Index, double>> cells;
  for (Index d : cfg.delay_grid)
    for (double axis : cfg.theta_axis_delay) cells.emplace_back(d, axis);
  const std::vector<DelayResult> all = run_cells(species, cells, cfg);

  std::vector<DelayResult> best;
  for (const BenchmarkSpecies& sp : species)
    for (Index d : cfg.delay_grid) {
      const DelayResult* b = nullptr;
      for (const DelayResult& r : all)
        if (r.species == sp.label && r.delay == d && (!b || r.mse < b->mse)) b = &r;
      best.push_back(*b);
    }
  return best;
}

double best_log_mse(const std::vector<DelayResult>& table, const std::string& species) {
  double best = 1e300;
  for (const DelayResult& r : table)
    if (r.species == species) best = std::min(best, r.mse);
  if (best == 1e300) throw Error("config-parse", "species not present: " + species);
  return std::log10(best);
}

}  // namespace safari
