#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>

#include "safari/delay.hpp"
#include "safari/io.hpp"
#include "safari/kernel.hpp"
#include "safari/spectral.hpp"
#include "safari/ssm.hpp"

namespace fs = std::filesystem;
using namespace safari;

namespace {

using Config = std::map<std::string, std::string>;

Config default_config() {
  return {
      {"out", "safari_out"},
      {"seed", "0"},
      {"grid_points", "2048"},
      {"tol_one", "1e-6"},
      {"species", "walrus"},
      {"n", "64"},
      {"family", "haar"},
      {"scales", "6"},
      {"boundary", "zero-pad"},
      {"via_frame", "0"},
      {"signal.kind", "lowpass-gaussian"},
      {"signal.cutoff", "0.03"},
      {"signal.length", "2048"},
      {"signal.sequences", "32"},
      {"signal.csv", ""},
      {"sweep.kind", "theta"},
      {"sweep.l0", "300"},
      {"sweep.axis_min", "1e-4"},
      {"sweep.axis_max", "1e-2"},
      {"sweep.axis_points", "25"},
      {"sweep.delay_axis_max", "4e-2"},
      {"sweep.delay_axis_points", "33"},
      {"sweep.l0_min", "50"},
      {"sweep.l0_max", "500"},
      {"sweep.l0_step", "50"},
      {"sweep.ridge", "1e-8"},
      {"sweep.train_fraction", "0.8"},
      {"sweep.svg", "1"},
      {"kernel.theta", "300"},
      {"kernel.length", "1024"},
      {"kernel.readout", "ones"},
      {"verify.order", "8"},
      {"verify.inject_sign_flip", "0"},
  };
}

double fnum(const Config& c, const std::string& k) {
  try {
    return std::stod(c.at(k));
  } catch (const std::exception&) {
    throw Error("config-parse", "bad numeric value for " + k);
  }
}

Index inum(const Config& c, const std::string& k) {
  return static_cast<Index>(std::llround(fnum(c, k)));
}

WaveletFamily parse_family(const std::string& s) {
  if (s == "haar") return WaveletFamily::Haar;
  if (s == "db2") return WaveletFamily::Db2;
  if (s == "db4") return WaveletFamily::Db4;
  throw Error("config-parse", "unknown family '" + s + "' (haar | db2 | db4)");
}

WaveletBoundary parse_boundary(const std::string& s) {
  if (s == "periodic") return WaveletBoundary::Periodic;
  if (s == "zero-pad") return WaveletBoundary::ZeroPad;
  throw Error("config-parse", "unknown boundary '" + s + "' (periodic | zero-pad)");
}

void write_resolved_config(const Config& cfg, const fs::path& dir) {
  std::ofstream out(dir / "config_resolved.cfg");
  for (const auto& [k, v] : cfg) out << k << " = " << v << "\n";
}

fs::path ensure_out(const Config& cfg) {
  fs::path dir(cfg.at("out"));
  fs::create_directories(dir);
  write_resolved_config(cfg, dir);
  return dir;
}

struct BuiltSystem {
  ContinuousSSM ssm;
  SampledFrame frame;  // empty for closed forms
  bool has_frame = false;
};

BuiltSystem build_species(const Config& cfg) {
  const std::string species = cfg.at("species");
  BuiltSystem b;
  if (species == "hippo-legs") {
    b.ssm = hippo_legs_closed_form(inum(cfg, "n"));
    return b;
  }
  if (species == "hippo-legt") {
    b.ssm = hippo_legt_closed_form(inum(cfg, "n"));
    return b;
  }
  if (species == "walrus") {
    const GridSpec grid{inum(cfg, "grid_points")};
    b.frame = compute_dual_frame(
        build_walrus_frame(parse_family(cfg.at("family")),
                           static_cast<int>(inum(cfg, "scales")), grid,
                           parse_boundary(cfg.at("boundary"))));
    b.ssm = derive_scaled_ssm(b.frame);
    b.has_frame = true;
    return b;
  }
  throw Error("config-parse", "unknown species '" + species +
                                  "' (hippo-legs | hippo-legt | walrus)");
}

int cmd_build(const Config& cfg) {
  const fs::path dir = ensure_out(cfg);
  const BuiltSystem b = build_species(cfg);
  write_system_csv((dir / "system.csv").string(), b.ssm);
  if (b.has_frame) write_frame_csv((dir / "frame.csv").string(), b.frame);
  std::cout << "wrote " << (dir / "system.csv").string() << " (N=" << b.ssm.dim()
            << ", species=" << to_string(b.ssm.species) << ")\n";
  if (cfg.at("via_frame") == "1" &&
      (cfg.at("species") == "hippo-legs" || cfg.at("species") == "hippo-legt")) {
    const Index N = inum(cfg, "n");
    const SampledFrame leg =
        sample_legendre_basis(N, GridSpec{inum(cfg, "grid_points")});
    const ContinuousSSM via = cfg.at("species") == "hippo-legs"
                                  ? derive_scaled_ssm(leg)
                                  : derive_translated_ssm(leg);
    const double err = std::max((via.A - b.ssm.A).cwiseAbs().maxCoeff(),
                                (via.B - b.ssm.B).cwiseAbs().maxCoeff());
    std::cout << "constructor-vs-oracle max-abs error: " << format_double(err)
              << "\n";
  }
  return 0;
}

int cmd_eigs(const Config& cfg) {
  const fs::path dir = ensure_out(cfg);
  const BuiltSystem b = build_species(cfg);
  const Spectrum spec = eigendecompose(b.ssm.A);
  const double tol = fnum(cfg, "tol_one");
  const RankSplit split = effective_rank_split(spec, tol);
  write_spectrum_csv((dir / "spectrum.csv").string(), spec, split);

  std::ostringstream audit;
  audit << "n=" << b.ssm.dim() << " tol_one=" << format_double(tol)
        << " unit=" << split.unit.size() << " retained=" << split.n_eff
        << " condition_estimate=" << format_double(spec.condition_estimate) << "\n";
  if (b.has_frame) {
    const Index expected_unit = b.frame.size() - frame_gram_rank(b.frame);
    audit << "redundant-direction count (K - gram rank): " << expected_unit << "\n";
    if (static_cast<Index>(split.unit.size()) != expected_unit)
      audit << "warning: unit count differs from the redundancy count at this "
               "tolerance\n";
  }
  std::cout << audit.str();
  std::ofstream(dir / "audit.txt") << audit.str();
  std::cout << "wrote " << (dir / "spectrum.csv").string() << "\n";
  return 0;
}

int cmd_kernel(const Config& cfg) {
  const fs::path dir = ensure_out(cfg);
  const BuiltSystem b = build_species(cfg);
  const double theta = fnum(cfg, "kernel.theta");
  const Index L = inum(cfg, "kernel.length");
  ReadoutMap readout;
  const Index N = b.ssm.dim();
  if (cfg.at("kernel.readout") == "ones") {
    readout = ReadoutMap::dense(Vector::Ones(N));
  } else if (cfg.at("kernel.readout") == "random") {
    std::mt19937_64 rng(static_cast<uint64_t>(inum(cfg, "seed")));
    std::normal_distribution<double> gauss;
    Vector c(N);
    for (Index i = 0; i < N; ++i) c[i] = gauss(rng);
    readout = ReadoutMap::dense(c);
  } else {
    throw Error("config-parse", "kernel.readout must be ones | random");
  }
  const DiscreteSystem d = discretize(make_time_invariant(b.ssm, theta), 1.0,
                                      DiscretizationMethod::Zoh);
  const Kernel k = compute_kernel(d, readout, L);
  write_kernel_csv((dir / "kernel.csv").string(), k);
  std::cout << "wrote " << (dir / "kernel.csv").string() << " (L=" << L
            << ", theta=" << format_double(theta) << ")\n";
  return 0;
}

SignalSpec signal_from_config(const Config& cfg) {
  SignalSpec s;
  const std::string kind = cfg.at("signal.kind");
  if (kind == "white-gaussian")
    s.kind = SignalKind::WhiteGaussian;
  else if (kind == "lowpass-gaussian")
    s.kind = SignalKind::LowpassGaussian;
  else if (kind == "csv-file")
    s.kind = SignalKind::CsvFile;
  else
    throw Error("config-parse",
                "signal.kind must be white-gaussian | lowpass-gaussian | csv-file");
  s.length = inum(cfg, "signal.length");
  s.cutoff = fnum(cfg, "signal.cutoff");
  s.num_sequences = inum(cfg, "signal.sequences");
  s.seed = static_cast<uint64_t>(inum(cfg, "seed"));
  s.csv_path = cfg.at("signal.csv");
  if (s.kind == SignalKind::CsvFile && s.csv_path.empty())
    throw Error("config-parse", "signal.kind=csv-file needs signal.csv=<path>");
  return s;
}

int cmd_delay(const Config& cfg) {
  const fs::path dir = ensure_out(cfg);
  DelayBenchConfig bench = DelayBenchConfig::defaults();
  bench.signal = signal_from_config(cfg);
  bench.train_fraction = fnum(cfg, "sweep.train_fraction");
  bench.ridge_scale = fnum(cfg, "sweep.ridge");
  auto log_grid = [](double lo, double hi, Index n) {
    std::vector<double> g;
    for (Index i = 0; i < n; ++i)
      g.push_back(std::pow(10.0, std::log10(lo) + (std::log10(hi) - std::log10(lo)) *
                                                      static_cast<double>(i) /
                                                      static_cast<double>(n - 1)));
    return g;
  };
  bench.theta_axis = log_grid(fnum(cfg, "sweep.axis_min"), fnum(cfg, "sweep.axis_max"),
                              inum(cfg, "sweep.axis_points"));
  bench.theta_axis_delay =
      log_grid(fnum(cfg, "sweep.axis_min"), fnum(cfg, "sweep.delay_axis_max"),
               inum(cfg, "sweep.delay_axis_points"));
  bench.delay_grid.clear();
  for (Index l = inum(cfg, "sweep.l0_min"); l <= inum(cfg, "sweep.l0_max");
       l += inum(cfg, "sweep.l0_step"))
    bench.delay_grid.push_back(l);

  const Index budget = inum(cfg, "n");
  const std::vector<BenchmarkSpecies> species = {
      prepare_hippo_species(budget),
      prepare_walrus_species(budget, parse_family(cfg.at("family")),
                             parse_boundary(cfg.at("boundary")),
                             inum(cfg, "grid_points"))};

  const std::string kind = cfg.at("sweep.kind");
  const bool do_theta = kind == "theta" || kind == "both";
  const bool do_delay = kind == "delay" || kind == "both";
  if (!do_theta && !do_delay)
    throw Error("config-parse", "sweep.kind must be theta | delay | both");

  if (do_theta) {
    const Index l0 = inum(cfg, "sweep.l0");
    const auto table = sweep_theta(species, bench, l0);
    write_delay_csv((dir / "delay_theta_sweep.csv").string(), table);
    const double gh = best_log_mse(table, "hippo-legs");
    const double gw = best_log_mse(table, "walrus");
    std::cout << "theta sweep at L0=" << l0 << ": best log10-MSE hippo-legs "
              << format_double(gh) << ", walrus " << format_double(gw) << ", gap "
              << format_double(gh - gw) << " (reference: 0.725)\n";
    if (cfg.at("sweep.svg") == "1") {
      PlotSeries sh{"hippo-legs", {}, {}}, sw{"walrus", {}, {}};
      for (const DelayResult& r : table) {
        PlotSeries& s = r.species == "walrus" ? sw : sh;
        s.x.push_back(r.dt_axis);
        s.y.push_back(r.log10_mse);
      }
      write_svg_plot((dir / "fig_theta_sweep.svg").string(),
                     "delay reconstruction, L0=" + std::to_string(l0),
                     "dt = 1/theta", "log10 MSE", {sh, sw});
    }
  }
  if (do_delay) {
    const auto best = sweep_delay(species, bench);
    write_delay_csv((dir / "delay_l0_sweep.csv").string(), best);
    bool dominated = true;
    for (const DelayResult& r : best)
      if (r.species == "walrus")
        for (const DelayResult& h : best)
          if (h.species == "hippo-legs" && h.delay == r.delay && r.mse > h.mse)
            dominated = false;
    std::cout << "delay sweep: walrus best <= hippo best at every L0: "
              << (dominated ? "yes" : "no") << "\n";
    // monotonicity audit (reported only): count of upward steps in best mse
    for (const BenchmarkSpecies& sp : species) {
      Index up = 0, steps = 0;
      double prev = -1.0;
      for (Index l0 : bench.delay_grid) {
        for (const DelayResult& r : best)
          if (r.species == sp.label && r.delay == l0) {
            if (prev >= 0.0) {
              ++steps;
              if (r.mse >= prev) ++up;
            }
            prev = r.mse;
          }
      }
      std::cout << "monotonicity audit " << sp.label << ": best mse non-decreasing on "
                << up << "/" << steps << " delay steps\n";
    }
    if (cfg.at("sweep.svg") == "1") {
      PlotSeries sh{"hippo-legs", {}, {}}, sw{"walrus", {}, {}};
      for (const DelayResult& r : best) {
        PlotSeries& s = r.species == "walrus" ? sw : sh;
        s.x.push_back(static_cast<double>(r.delay));
        s.y.push_back(r.log10_mse);
      }
      write_svg_plot((dir / "fig_delay_sweep.svg").string(),
                     "best log10 MSE per delay", "L0 (samples)", "log10 MSE",
                     {sh, sw}, /*log_x=*/false);
    }
  }
  return 0;
}

int cmd_verify(const Config& cfg) {
  const Index N = inum(cfg, "verify.order");
  const Index M = inum(cfg, "grid_points");
  const bool inject = cfg.at("verify.inject_sign_flip") == "1";
  bool all_ok = true;
  auto report = [&all_ok](const std::string& name, bool ok, const std::string& info) {
    std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "  " << info << "\n";
    all_ok &= ok;
  };

  // constructor vs closed forms
  {
    SampledFrame leg = sample_legendre_basis(N, GridSpec{M});
    ContinuousSSM via = derive_scaled_ssm(leg);
    if (inject) via.A = 2.0 * Matrix::Identity(N, N) - via.A;  // flipped quadrature
    const ContinuousSSM oracle = hippo_legs_closed_form(N);
    const double err = std::max((via.A - oracle.A).cwiseAbs().maxCoeff(),
                                (via.B - oracle.B).cwiseAbs().maxCoeff());
    report("scaled-constructor-vs-legs", err < 1e-4, "max-abs " + format_double(err));
    const ContinuousSSM viat = derive_translated_ssm(leg);
    const ContinuousSSM oraclet = hippo_legt_closed_form(N);
    const double errt = std::max((viat.A - oraclet.A).cwiseAbs().maxCoeff(),
                                 (viat.B - oraclet.B).cwiseAbs().maxCoeff());
    report("translated-constructor-vs-legt", errt < 1e-4,
           "max-abs " + format_double(errt));
  }

  // redundancy audit on the default haar walrus
  {
    const GridSpec grid{std::max<Index>(M, 512)};
    const SampledFrame f =
        compute_dual_frame(build_walrus_frame(WaveletFamily::Haar, 3, grid));
    const ContinuousSSM ssm = derive_scaled_ssm(f);
    const Spectrum spec = eigendecompose(ssm.A);
    const RankSplit split = effective_rank_split(spec, 1e-6);
    const bool count_ok = static_cast<Index>(split.unit.size()) ==
                          f.size() - f.effective_dimension();
    report("redundancy-unit-count", count_ok,
           "unit=" + std::to_string(split.unit.size()) +
               " expected=" + std::to_string(f.size() - f.effective_dimension()));
    bool kernels_ok = true;
    double worst = 0.0;
    try {
      const ReducedSystem rs = truncate_system(ssm, spec, split.n_eff);
      std::mt19937_64 rng(2);
      std::normal_distribution<double> gauss;
      for (int probe = 0; probe < 5; ++probe) {
        Vector C(ssm.dim());
        for (Index i = 0; i < C.size(); ++i) C[i] = gauss(rng);
        const DiscreteSystem dd = discretize(make_time_invariant(ssm, 700.0), 1.0,
                                             DiscretizationMethod::Zoh);
        const Vector full = compute_kernel(dd, ReadoutMap::dense(C), 1024).taps;
        const DiscreteSystem dr =
            discretize(rs, 700.0, 1.0, DiscretizationMethod::Zoh);
        ReadoutMap r;
        r.C = rs.v_rows * C.cast<Complex>();
        const Vector red = compute_kernel(dr, r, 1024).taps;
        worst = std::max(worst, (full - red).cwiseAbs().maxCoeff());
      }
      kernels_ok = worst < 1e-6;
    } catch (const Error&) {
      kernels_ok = false;
    }
    report("redundancy-truncation-kernels", kernels_ok,
           "max-abs " + format_double(worst));
  }

  // path equivalence, compression, fusion
  {
    const ContinuousSSM legs = hippo_legs_closed_form(16);
    const DiscreteSystem d = discretize(make_time_invariant(legs, 300.0), 1.0,
                                        DiscretizationMethod::Zoh);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss;
    Vector C(16), u(4096);
    for (Index i = 0; i < 16; ++i) C[i] = gauss(rng);
    for (Index i = 0; i < 4096; ++i) u[i] = gauss(rng);
    const ReadoutMap readout = ReadoutMap::dense(C, 0.2);
    const Vector ys = recurrent_scan(d, readout, u).output;
    const Vector yc = convolve(compute_kernel(d, readout, 4096), u, readout.D);
    const double rel = (ys - yc).norm() / yc.norm();
    report("scan-vs-convolution", rel < 1e-8, "rel-l2 " + format_double(rel));

    const SampledFrame f = compute_dual_frame(
        build_walrus_frame(WaveletFamily::Haar, 3, GridSpec{std::max<Index>(M, 512)}));
    const ContinuousSSM ssm = derive_scaled_ssm(f);
    const ReducedSystem rs = reduce_frame_system(ssm, f);
    const ReducedSystem comp = compress_conjugates(rs);
    Vector Cw(ssm.dim());
    for (Index i = 0; i < Cw.size(); ++i) Cw[i] = gauss(rng);
    ReadoutMap ru, rc;
    ru.C = rs.v_rows * Cw.cast<Complex>();
    rc.C = comp.v_rows * Cw.cast<Complex>();
    const Vector ku =
        compute_kernel(discretize(rs, 300.0, 1.0, DiscretizationMethod::Zoh), ru, 512)
            .taps;
    const Vector kc = compute_kernel(
                          discretize(comp, 300.0, 1.0, DiscretizationMethod::Zoh),
                          rc, 512)
                          .taps;
    const double cerr = (ku - kc).cwiseAbs().maxCoeff();
    report("conjugate-compression", cerr < 1e-12, "max-abs " + format_double(cerr));

    DiscreteSystem fused = discretize(comp, 300.0, 1.0, DiscretizationMethod::Zoh);
    ReadoutMap rf = rc;
    for (Index i = 0; i < fused.dim(); ++i) {
      rf.C[i] *= fused.b_diag[i];
      fused.b_diag[i] = 1.0;
    }
    const Vector kf = compute_kernel(fused, rf, 512).taps;
    const double ferr = (kf - kc).cwiseAbs().maxCoeff();
    report("hadamard-fusion", ferr < 1e-12, "max-abs " + format_double(ferr));
  }

  return all_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"frame-constructed state space models: build, analyze, benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "key = value config file");

  Config cfg = default_config();
  const std::vector<std::pair<std::string, std::string>> flag_keys = {
      {"--out", "out"},
      {"--seed", "seed"},
      {"--grid-points", "grid_points"},
      {"--tol-one", "tol_one"},
      {"--species", "species"},
      {"--n", "n"},
      {"--family", "family"},
      {"--scales", "scales"},
      {"--boundary", "boundary"},
      {"--via-frame", "via_frame"},
      {"--signal", "signal.kind"},
      {"--cutoff", "signal.cutoff"},
      {"--seq-length", "signal.length"},
      {"--sequences", "signal.sequences"},
      {"--csv-file", "signal.csv"},
      {"--sweep", "sweep.kind"},
      {"--l0", "sweep.l0"},
      {"--ridge", "sweep.ridge"},
      {"--svg", "sweep.svg"},
      {"--theta", "kernel.theta"},
      {"--length", "kernel.length"},
      {"--readout", "kernel.readout"},
      {"--order", "verify.order"},
      {"--inject-constructor-sign-flip", "verify.inject_sign_flip"},
  };

  std::map<std::string, std::string> flag_values;
  auto add_flags = [&](CLI::App* sub) {
    for (const auto& [flag, key] : flag_keys) {
      if (flag == "--via-frame" || flag == "--inject-constructor-sign-flip")
        sub->add_flag_callback(
            flag, [&flag_values, key = key]() { flag_values[key] = "1"; });
      else
        sub->add_option_function<std::string>(
            flag,
            [&flag_values, key = key](const std::string& v) { flag_values[key] = v; });
    }
  };

  CLI::App* build = app.add_subcommand("build", "construct (A, B) and export CSV");
  CLI::App* eigs = app.add_subcommand("eigs", "spectrum and redundancy audit");
  CLI::App* kernel =
      app.add_subcommand("kernel", "materialize convolution kernel taps");
  CLI::App* delay =
      app.add_subcommand("delay", "delay-reconstruction benchmark sweeps");
  CLI::App* verify = app.add_subcommand("verify", "run the numerical invariant suite");
  for (CLI::App* sub : {build, eigs, kernel, delay, verify}) {
    sub->fallthrough();  // let --config after the subcommand reach the parent
    add_flags(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (!config_path.empty())
      for (const auto& [k, v] : parse_config_file(config_path)) {
        if (!cfg.count(k)) throw Error("config-parse", "unknown config key " + k);
        cfg[k] = v;
      }
    for (const auto& [k, v] : flag_values) cfg[k] = v;

    if (build->parsed()) return cmd_build(cfg);
    if (eigs->parsed()) return cmd_eigs(cfg);
    if (kernel->parsed()) return cmd_kernel(cfg);
    if (delay->parsed()) return cmd_delay(cfg);
    if (verify->parsed()) return cmd_verify(cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code().find("config") != std::string::npos ||
                   e.code().find("invalid") != std::string::npos
               ? 1
               : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
