#pragma once

#include <map>
#include <string>
#include <vector>

#include "safari/delay.hpp"
#include "safari/frames.hpp"
#include "safari/spectral.hpp"
#include "safari/ssm.hpp"
#include "safari/types.hpp"

namespace safari {

/// All floating-point output uses 17 significant digits for round-trips.
std::string format_double(double v);

/// Frame CSV: header row of grid points, one row per frame function.
void write_frame_csv(const std::string& path, const SampledFrame& frame);
Matrix read_frame_csv(const std::string& path, Vector* grid = nullptr);

/// Matrix CSV: one-line header naming species/measure/N, then A rows, then B.
void write_system_csv(const std::string& path, const ContinuousSSM& ssm);

/// Spectrum CSV: re,im,dist_from_one,retained per row.
void write_spectrum_csv(const std::string& path, const Spectrum& spec,
                        const RankSplit& split);

void write_kernel_csv(const std::string& path, const Kernel& kernel);

/// Single-column CSV (optional non-numeric header) or the raw binary stream:
/// 16-byte header {magic "SSMK", u32 version, u64 length} + f64 LE payload.
Vector read_signal(const std::string& path);
void write_signal_binary(const std::string& path, const Vector& signal);
void write_signal_csv(const std::string& path, const Vector& signal);

/// Delay-benchmark results CSV with the fixed schema
/// species,theta,dt,L0,mse,log10_mse,n_eff,seed,train_fraction.
void write_delay_csv(const std::string& path, const std::vector<DelayResult>& rows);

/// Flat key = value config with [section] prefixes ("section.key").
/// File values override built-in defaults; CLI flags override the file.
std::map<std::string, std::string> parse_config_file(const std::string& path);

/// Minimal SVG line plot (log-y), one polyline per labelled series.
struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series, bool log_x = true);

}  // namespace safari
