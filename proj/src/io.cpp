#include "safari/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace safari {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io-error", "cannot write " + path);
  return out;
}

}  // namespace

void write_frame_csv(const std::string& path, const SampledFrame& frame) {
  std::ofstream out = open_out(path);
  for (Index i = 0; i < frame.grid.size(); ++i)
    out << (i ? "," : "") << format_double(frame.grid[i]);
  out << "\n";
  for (Index r = 0; r < frame.size(); ++r) {
    for (Index i = 0; i < frame.values.cols(); ++i)
      out << (i ? "," : "") << format_double(frame.values(r, i));
    out << "\n";
  }
}

Matrix read_frame_csv(const std::string& path, Vector* grid) {
  std::ifstream in(path);
  if (!in) throw Error("io-error", "cannot read " + path);
  std::string line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw Error("io-error", "frame csv needs header + rows");
  const Index M = static_cast<Index>(rows[0].size());
  if (grid != nullptr)
    *grid = Eigen::Map<Vector>(rows[0].data(), M);
  Matrix vals(static_cast<Index>(rows.size()) - 1, M);
  for (size_t r = 1; r < rows.size(); ++r) {
    if (static_cast<Index>(rows[r].size()) != M)
      throw Error("io-error", "ragged frame csv");
    vals.row(static_cast<Index>(r) - 1) =
        Eigen::Map<Vector>(rows[r].data(), M).transpose();
  }
  return vals;
}

void write_system_csv(const std::string& path, const ContinuousSSM& ssm) {
  std::ofstream out = open_out(path);
  out << "# species=" << to_string(ssm.species) << " measure=" << to_string(ssm.measure)
      << " N=" << ssm.dim() << " frame=" << ssm.frame_ref << "\n";
  for (Index r = 0; r < ssm.A.rows(); ++r) {
    for (Index c = 0; c < ssm.A.cols(); ++c)
      out << (c ? "," : "") << format_double(ssm.A(r, c));
    out << "\n";
  }
  for (Index i = 0; i < ssm.B.size(); ++i)
    out << (i ? "," : "") << format_double(ssm.B[i]);
  out << "\n";
}

void write_spectrum_csv(const std::string& path, const Spectrum& spec,
                        const RankSplit& split) {
  std::ofstream out = open_out(path);
  out << "re,im,dist_from_one,retained\n";
  std::vector<char> retained(spec.eigenvalues.size(), 0);
  for (Index i : split.retained) retained[static_cast<size_t>(i)] = 1;
  for (Index i = 0; i < spec.eigenvalues.size(); ++i) {
    const Complex l = spec.eigenvalues[i];
    out << format_double(l.real()) << "," << format_double(l.imag()) << ","
        << format_double(std::abs(l - Complex(1.0, 0.0))) << ","
        << int(retained[static_cast<size_t>(i)]) << "\n";
  }
}

void write_kernel_csv(const std::string& path, const Kernel& kernel) {
  std::ofstream out = open_out(path);
  out << "lag,tap\n";
  for (Index l = 0; l < kernel.length(); ++l)
    out << l << "," << format_double(kernel.taps[l]) << "\n";
}

namespace {

constexpr char kMagic[4] = {'S', 'S', 'M', 'K'};

}  // namespace

void write_signal_binary(const std::string& path, const Vector& signal) {
  std::ofstream out = open_out(path);
  out.write(kMagic, 4);
  const uint32_t version = 1;
  out.write(reinterpret_cast<const char*>(&version), 4);
  const uint64_t length = static_cast<uint64_t>(signal.size());
  out.write(reinterpret_cast<const char*>(&length), 8);
  out.write(reinterpret_cast<const char*>(signal.data()),
            static_cast<std::streamsize>(sizeof(double) * signal.size()));
}

void write_signal_csv(const std::string& path, const Vector& signal) {
  std::ofstream out = open_out(path);
  out << "value\n";
  for (Index i = 0; i < signal.size(); ++i) out << format_double(signal[i]) << "\n";
}

Vector read_signal(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io-error", "cannot read " + path);
  char head[4] = {0, 0, 0, 0};
  in.read(head, 4);
  if (in.gcount() == 4 && std::memcmp(head, kMagic, 4) == 0) {
    uint32_t version = 0;
    uint64_t length = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&length), 8);
    if (version != 1) throw Error("io-error", "unsupported SSMK version");
    Vector v(static_cast<Index>(length));
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * length));
    if (!in) throw Error("io-error", "truncated SSMK stream");
    return v;
  }
  in.clear();
  in.seekg(0);
  std::vector<double> vals;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      vals.push_back(std::stod(line));
    } catch (const std::exception&) {
      if (!first) throw Error("io-error", "bad numeric line in " + path);
    }
    first = false;
  }
  if (vals.empty()) throw Error("io-error", "no samples in " + path);
  return Eigen::Map<Vector>(vals.data(), static_cast<Index>(vals.size()));
}

void write_delay_csv(const std::string& path, const std::vector<DelayResult>& rows) {
  std::ofstream out = open_out(path);
  out << "species,theta,dt,L0,mse,log10_mse,n_eff,seed,train_fraction\n";
  for (const DelayResult& r : rows)
    out << r.species << "," << format_double(r.theta) << ","
        << format_double(r.dt_axis) << "," << r.delay << "," << format_double(r.mse)
        << "," << format_double(r.log10_mse) << "," << r.n_eff << "," << r.seed << ","
        << format_double(r.train_fraction) << "\n";
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config-parse", "cannot open config " + path);
  std::map<std::string, std::string> kv;
  std::string line, section;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("config-parse",
                  path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    kv[section.empty() ? key : section + "." + key] = val;
  }
  return kv;
}

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series, bool log_x) {
  const int W = 760, H = 480, ml = 70, mr = 20, mt = 40, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const PlotSeries& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      const double x = log_x ? std::log10(s.x[i]) : s.x[i];
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (xmin >= xmax) xmax = xmin + 1;
  if (ymin >= ymax) ymax = ymin + 1;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;
  auto px = [&](double x) {
    const double v = log_x ? std::log10(x) : x;
    return ml + (v - xmin) / (xmax - xmin) * (W - ml - mr);
  };
  auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ofstream out = open_out(path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
      << "' viewBox='0 0 " << W << " " << H << "'>\n"
      << "<rect width='100%' height='100%' fill='white'/>\n"
      << "<text x='" << W / 2 << "' y='24' text-anchor='middle' font-size='16'>"
      << title << "</text>\n"
      << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='"
      << H - mb << "' stroke='black'/>\n"
      << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
      << "' stroke='black'/>\n"
      << "<text x='" << (ml + W - mr) / 2 << "' y='" << H - 12
      << "' text-anchor='middle' font-size='12'>" << x_label << "</text>\n"
      << "<text x='16' y='" << (mt + H - mb) / 2
      << "' text-anchor='middle' font-size='12' transform='rotate(-90 16 "
      << (mt + H - mb) / 2 << ")'>" << y_label << "</text>\n";
  for (int g = 0; g <= 4; ++g) {
    const double y = ymin + g / 4.0 * (ymax - ymin);
    out << "<line x1='" << ml << "' y1='" << py(y) << "' x2='" << W - mr << "' y2='"
        << py(y) << "' stroke='#dddddd'/>\n"
        << "<text x='" << ml - 6 << "' y='" << py(y) + 4
        << "' text-anchor='end' font-size='10'>";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", y);
    out << buf << "</text>\n";
  }
  for (size_t si = 0; si < series.size(); ++si) {
    const PlotSeries& s = series[si];
    out << "<polyline fill='none' stroke='" << colors[si % 5]
        << "' stroke-width='1.6' points='";
    for (size_t i = 0; i < s.x.size(); ++i)
      out << px(s.x[i]) << "," << py(s.y[i]) << " ";
    out << "'/>\n"
        << "<text x='" << W - mr - 8 << "' y='" << mt + 16 + 16 * si
        << "' text-anchor='end' font-size='12' fill='" << colors[si % 5] << "'>"
        << s.label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace safari
