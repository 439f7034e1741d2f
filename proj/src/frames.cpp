#include "safari/frames.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <vector>

namespace safari {

Vector GridSpec::points() const {
  Vector s(num_points);
  for (Index i = 0; i < num_points; ++i)
    s[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(num_points);
  return s;
}

namespace {

// Coefficients of f^(order)(0) from samples at nodes k + 1/2, k = 0..p-1,
// in unit-grid coordinates (divide by h^order at the point of use).
Vector onesided_derivative_stencil(int p, int order) {
  Matrix V(p, p);
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k) V(j, k) = std::pow(k + 0.5, j);
  Vector rhs = Vector::Zero(p);
  double fact = 1.0;
  for (int j = 2; j <= order; ++j) fact *= j;
  rhs[order] = fact;
  return V.fullPivLu().solve(rhs);
}

}  // namespace

Vector corrected_midpoint_weights(Index M) {
  const double h = 1.0 / static_cast<double>(M);
  Vector w = Vector::Constant(M, h);
  // Euler-Maclaurin for the midpoint rule: the quadrature defect is
  // (h^2/24)[g1] - (7 h^4/5760)[g3] + (31 h^6/967680)[g5], where [gk] is the
  // k-th derivative difference across the boundary, estimated one-sided.
  struct Term {
    int order;
    double coeff;
    int points;
  };
  const Term terms[] = {{1, 1.0 / 24.0, 8}, {3, -7.0 / 5760.0, 8}};
  for (const Term& t : terms) {
    const int p = static_cast<int>(std::min<Index>(t.points, M));
    if (p <= t.order) continue;
    const Vector d = onesided_derivative_stencil(p, t.order);
    // each term contributes coeff * h^{order+1} * (unit-stencil / h^order)
    const double scale = t.coeff * h;
    for (int k = 0; k < p; ++k) {
      // the mirrored stencil at s=1 carries the odd-order sign flip, which
      // combines with the boundary difference to the same-sign update
      w[k] -= scale * d[k];
      w[M - 1 - k] -= scale * d[k];
    }
  }
  return w;
}

SampledFrame sample_legendre_basis(Index order, const GridSpec& grid) {
  if (order < 1) throw Error("invalid-order", "order must be >= 1");
  const Index M = grid.num_points;
  if (M < 4 * order)
    throw Error("resolution-too-coarse",
                "grid has " + std::to_string(M) + " points; need >= 4*" +
                    std::to_string(order));

  SampledFrame f;
  f.grid = grid.points();
  f.weights = corrected_midpoint_weights(M);
  f.values.resize(order, M);
  f.derivatives.resize(order, M);
  f.right_values.resize(order);
  f.kind = FrameKind::LegendreOrthonormal;
  f.redundancy = 1.0;
  f.name = "legendre-" + std::to_string(order);

  // P_{n+1} = ((2n+1) x P_n - n P_{n-1})/(n+1);  P'_{n+1} = x P'_n + (n+1) P_n
  Vector x = 2.0 * f.grid.array() - 1.0;
  Matrix P(order, M), dP(order, M);
  P.row(0).setOnes();
  dP.row(0).setZero();
  if (order > 1) {
    P.row(1) = x.transpose();
    dP.row(1).setOnes();
  }
  for (Index n = 1; n + 1 < order; ++n) {
    P.row(n + 1) = ((2.0 * n + 1.0) * x.transpose().array() * P.row(n).array() -
                    static_cast<double>(n) * P.row(n - 1).array()) /
                   (n + 1.0);
    dP.row(n + 1) =
        x.transpose().array() * dP.row(n).array() + (n + 1.0) * P.row(n).array();
  }
  for (Index n = 0; n < order; ++n) {
    const double scale = std::sqrt(2.0 * n + 1.0);
    f.values.row(n) = scale * P.row(n);
    f.derivatives.row(n) = 2.0 * scale * dP.row(n);  // d/ds = 2 d/dx
    f.right_values[n] = scale;                       // P_n(1) = 1
  }
  f.duals = f.values;
  f.right_duals = f.right_values;
  return f;
}

namespace detail {

Matrix finite_difference_rows(const Matrix& rows, double h, bool periodic) {
  const Index K = rows.rows(), M = rows.cols();
  Matrix d(K, M);
  if (M < 5) throw Error("resolution-too-coarse", "need >= 5 samples to differentiate");
  for (Index i = 2; i + 2 < M; ++i)
    d.col(i) = (rows.col(i - 2) - 8.0 * rows.col(i - 1) + 8.0 * rows.col(i + 1) -
                rows.col(i + 2)) /
               (12.0 * h);
  if (periodic) {
    // the frame continues across the seam; keep central stencils with wrap
    for (Index i : {Index(0), Index(1), M - 2, M - 1}) {
      auto at = [&](Index j) { return rows.col(((j % M) + M) % M); };
      d.col(i) = (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) /
                 (12.0 * h);
    }
    return d;
  }
  // one-sided fourth-order stencils at a genuine boundary
  const double c[5] = {-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25};
  for (Index i : {Index(0), Index(1)}) {
    d.col(i).setZero();
    for (int k = 0; k < 5; ++k) d.col(i) += c[k] / h * rows.col(i + k);
  }
  for (Index i : {M - 2, M - 1}) {
    d.col(i).setZero();
    for (int k = 0; k < 5; ++k) d.col(i) -= c[k] / h * rows.col(i - k);
  }
  return d;
}

Vector daubechies_filter(WaveletFamily family) {
  switch (family) {
    case WaveletFamily::Db2: {
      Vector h(4);
      h << 0.48296291314453414, 0.8365163037378079, 0.2241438680420134,
          -0.12940952255126037;
      return h;
    }
    case WaveletFamily::Db4: {
      Vector h(8);
      h << 0.23037781330885523, 0.7148465705525415, 0.6308807679295904,
          -0.02798376941698385, -0.18703481171888114, 0.030841381835986965,
          0.032883011666982945, -0.010597401784997278;
      return h;
    }
    case WaveletFamily::Haar:
      throw Error("unsupported-family", "haar has no cascade filter here");
  }
  throw Error("unsupported-family", "unknown wavelet family");
}

}  // namespace detail

namespace {

// C^2 bump spanning 4 grid cells (5 taps), normalized to unit sum.
Vector bump_kernel() {
  Vector b(5);
  for (int i = -2; i <= 2; ++i) {
    const double u = i / 2.5;
    b[i + 2] = std::pow(1.0 - u * u, 3);
  }
  return b / b.sum();
}

Matrix mollify_rows(const Matrix& rows, WaveletBoundary boundary) {
  const Vector b = bump_kernel();
  const int c = 2;
  const Index K = rows.rows(), M = rows.cols();
  Matrix out = Matrix::Zero(K, M);
  for (Index i = 0; i < M; ++i) {
    for (int t = -c; t <= c; ++t) {
      Index j = i + t;
      if (boundary == WaveletBoundary::Periodic)
        j = (j % M + M) % M;
      else if (j < 0 || j >= M)
        continue;
      out.col(i) += b[t + c] * rows.col(j);
    }
  }
  return out;
}

struct CascadeTable {
  Vector values;  // phi on dyadic grid over [0, L-1]
  double step;
};

// Dyadic refinement of the scaling function: integer values from the
// transfer-matrix eigenvector, then phi(x) = sqrt(2) sum h_t phi(2x - t).
CascadeTable cascade_table(const Vector& h, int depth) {
  const int L = static_cast<int>(h.size());
  const int n = L - 2;
  Matrix T = Matrix::Zero(n, n);
  for (int a = 1; a < L - 1; ++a)
    for (int b = 1; b < L - 1; ++b) {
      const int t = 2 * a - b;
      if (t >= 0 && t < L) T(a - 1, b - 1) = std::sqrt(2.0) * h[t];
    }
  Eigen::EigenSolver<Matrix> es(T);
  Index best = 0;
  double bestdist = 1e300;
  for (Index i = 0; i < n; ++i) {
    const double dist = std::abs(es.eigenvalues()[i] - Complex(1.0, 0.0));
    if (dist < bestdist) {
      bestdist = dist;
      best = i;
    }
  }
  Vector phi = Vector::Zero(L);
  phi.segment(1, n) = es.eigenvectors().col(best).real();
  phi /= phi.sum();  // sum_k phi(k) = 1

  std::vector<double> vals(phi.data(), phi.data() + L);
  double step = 1.0;
  for (int d = 0; d < depth; ++d) {
    const size_t m = vals.size();
    std::vector<double> next(2 * m - 1, 0.0);
    for (size_t i = 0; i < m; ++i) next[2 * i] = vals[i];
    for (size_t i = 1; i < next.size(); i += 2) {
      const double x = static_cast<double>(i) * step / 2.0;
      double acc = 0.0;
      for (int t = 0; t < L; ++t) {
        const double y = 2.0 * x - t;
        if (y >= 0.0 && y <= L - 1) {
          const double yi = y / step;
          const auto ii = static_cast<size_t>(std::llround(yi));
          acc += std::sqrt(2.0) * h[t] * vals[ii];
        }
      }
      next[i] = acc;
    }
    vals.swap(next);
    step /= 2.0;
  }
  CascadeTable tab;
  tab.values = Eigen::Map<Vector>(vals.data(), static_cast<Index>(vals.size()));
  tab.step = step;
  return tab;
}

double interp_table(const CascadeTable& tab, double x, int L) {
  if (x < 0.0 || x > L - 1) return 0.0;
  const double xi = x / tab.step;
  Index i0 = static_cast<Index>(std::floor(xi));
  i0 = std::min(i0, tab.values.size() - 2);
  const double fr = xi - static_cast<double>(i0);
  return (1.0 - fr) * tab.values[i0] + fr * tab.values[i0 + 1];
}

// Sample the 2^J scale-J scaling functions phi_{J,k}(s) = 2^{J/2} phi(2^J s - k).
Matrix sample_fine_scaling(const CascadeTable& tab, int L, int J,
                           const Vector& s, WaveletBoundary boundary) {
  const Index M = s.size();
  const Index nk = Index(1) << J;
  Matrix rows = Matrix::Zero(nk, M);
  const double norm = std::pow(2.0, J / 2.0);
  for (Index k = 0; k < nk; ++k)
    for (Index i = 0; i < M; ++i) {
      double x = s[i] * static_cast<double>(nk) - static_cast<double>(k);
      double v = 0.0;
      if (boundary == WaveletBoundary::Periodic) {
        // wrap translates over the period 2^J
        for (double shift = -std::ceil(double(L) / nk) * nk; shift <= L;
             shift += static_cast<double>(nk))
          v += interp_table(tab, x + shift, L);
      } else {
        v = interp_table(tab, x, L);
      }
      rows(k, i) = norm * v;
    }
  return rows;
}

Matrix sample_haar_fine(int J, const Vector& s) {
  const Index nk = Index(1) << J;
  const Index M = s.size();
  Matrix rows = Matrix::Zero(nk, M);
  const double norm = std::pow(2.0, J / 2.0);
  for (Index k = 0; k < nk; ++k)
    for (Index i = 0; i < M; ++i) {
      const double t = s[i] * static_cast<double>(nk) - static_cast<double>(k);
      if (t >= 0.0 && t < 1.0) rows(k, i) = norm;
    }
  return rows;
}

// One analysis step: scale-(j+1) scaling rows -> scale-j scaling and wavelet
// rows via the two-scale relations. Out-of-range fine indices wrap
// (periodic) or drop (zero-pad), so every coarse row is an exact linear
// combination of the fine rows.
void analysis_step(const Matrix& fine, const Vector& h, WaveletBoundary boundary,
                   Matrix& scaling, Matrix& wavelet) {
  const int L = static_cast<int>(h.size());
  Vector g(L);
  for (int t = 0; t < L; ++t) g[t] = ((t % 2) ? -1.0 : 1.0) * h[L - 1 - t];
  const Index n_fine = fine.rows();
  const Index nk = n_fine / 2;
  scaling = Matrix::Zero(nk, fine.cols());
  wavelet = Matrix::Zero(nk, fine.cols());
  for (Index k = 0; k < nk; ++k)
    for (int t = 0; t < L; ++t) {
      Index idx = 2 * k + t;
      if (boundary == WaveletBoundary::Periodic)
        idx %= n_fine;
      else if (idx >= n_fine)
        continue;
      scaling.row(k) += h[t] * fine.row(idx);
      wavelet.row(k) += g[t] * fine.row(idx);
    }
}

Vector haar_filter() {
  Vector h(2);
  h << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  return h;
}

// Values at s = 1 from the last samples (for zero-pad) or across the seam
// (periodic), both via 4-point cubic interpolation at the cell boundary.
Vector right_endpoint(const Matrix& rows, WaveletBoundary boundary) {
  const Index M = rows.cols();
  if (boundary == WaveletBoundary::Periodic)
    return (-rows.col(M - 2) + 9.0 * rows.col(M - 1) + 9.0 * rows.col(0) -
            rows.col(1)) /
           16.0;
  return (-5.0 * rows.col(M - 4) + 21.0 * rows.col(M - 3) -
          35.0 * rows.col(M - 2) + 35.0 * rows.col(M - 1)) /
         16.0;
}

struct WaveletRows {
  Matrix fine;                 // scale-J scaling rows (already mollified for haar)
  std::vector<Matrix> scalings;  // per analysis level, finest first
  std::vector<Matrix> wavelets;
};

WaveletRows build_levels(WaveletFamily family, int j0, int J, const GridSpec& grid,
                         WaveletBoundary boundary) {
  const Vector s = grid.points();
  WaveletRows out;
  Vector h;
  if (family == WaveletFamily::Haar) {
    h = haar_filter();
    out.fine = mollify_rows(sample_haar_fine(J, s), boundary);
  } else {
    h = detail::daubechies_filter(family);
    const int L = static_cast<int>(h.size());
    // refine until the table resolves the grid at the finest scale
    int depth = 2;
    while (std::pow(2.0, -depth) > 0.25 / (grid.num_points * std::pow(2.0, -J)))
      ++depth;
    depth = std::min(depth, 16);
    const CascadeTable tab = cascade_table(h, depth);
    out.fine = sample_fine_scaling(tab, L, J, s, boundary);
  }
  Matrix cur = out.fine;
  for (int j = J - 1; j >= j0; --j) {
    Matrix sc, wv;
    analysis_step(cur, h, boundary, sc, wv);
    out.scalings.push_back(sc);
    out.wavelets.push_back(wv);
    cur = sc;
  }
  return out;
}

SampledFrame assemble_frame(std::vector<const Matrix*> blocks, const GridSpec& grid,
                            WaveletBoundary boundary, double redundancy,
                            const std::string& name) {
  Index K = 0;
  for (const Matrix* b : blocks) K += b->rows();
  SampledFrame f;
  f.grid = grid.points();
  // periodic integrands need no boundary correction (and must not get one:
  // the corrections assume a genuine boundary)
  f.weights = boundary == WaveletBoundary::Periodic
                  ? Vector::Constant(grid.num_points, 1.0 / grid.num_points)
                  : corrected_midpoint_weights(grid.num_points);
  f.values.resize(K, grid.num_points);
  Index at = 0;
  for (const Matrix* b : blocks) {
    f.values.middleRows(at, b->rows()) = *b;
    at += b->rows();
  }
  f.right_values = right_endpoint(f.values, boundary);
  f.kind = FrameKind::WaveletFrame;
  f.redundancy = redundancy;
  f.periodic = boundary == WaveletBoundary::Periodic;
  f.name = name;
  return f;
}

std::string family_name(WaveletFamily family) {
  switch (family) {
    case WaveletFamily::Haar: return "haar";
    case WaveletFamily::Db2: return "db2";
    case WaveletFamily::Db4: return "db4";
  }
  return "?";
}

}  // namespace

int natural_coarsest_scale(WaveletFamily family) {
  switch (family) {
    case WaveletFamily::Haar: return 0;
    case WaveletFamily::Db2: return 2;
    case WaveletFamily::Db4: return 3;
  }
  return 0;
}

SampledFrame build_wavelet_frame(const WaveletFrameSpec& spec, const GridSpec& grid) {
  const int j0 = spec.coarsest_scale, J = spec.finest_scale;
  if (j0 < 0 || J < j0) throw Error("invalid-scales", "need 0 <= j0 <= J");
  if (grid.num_points < 4 * (Index(1) << J))
    throw Error("resolution-too-coarse",
                "grid must resolve the finest scale: M >= 4*2^J");

  const Index size = (spec.include_scaling_functions ? (Index(1) << j0) : 0) +
                     ((Index(1) << (J + 1)) - (Index(1) << j0));
  if (grid.num_points < 4 * size)
    throw Error("resolution-too-coarse", "grid must satisfy M >= 4 * frame size");

  // wavelets at j0..J come from one extra analysis level below the stored
  // fine scale, so build levels down from J+1.
  WaveletRows lv = build_levels(spec.family, j0, J + 1, grid, spec.boundary);
  std::vector<const Matrix*> blocks;
  if (spec.include_scaling_functions) blocks.push_back(&lv.scalings.back());
  for (auto it = lv.wavelets.rbegin(); it != lv.wavelets.rend(); ++it)
    blocks.push_back(&*it);
  SampledFrame f = assemble_frame(blocks, grid, spec.boundary, 1.0,
                                  family_name(spec.family) + "-mra-j" +
                                      std::to_string(j0) + "-J" + std::to_string(J));
  // the system is a (near-)orthonormal basis of its span
  f.redundancy = 1.0;
  f.derivatives = detail::finite_difference_rows(
      f.values, 1.0 / static_cast<double>(grid.num_points), f.periodic);
  return f;
}

SampledFrame build_walrus_frame(WaveletFamily family, int J, const GridSpec& grid,
                                WaveletBoundary boundary) {
  const int j0 = natural_coarsest_scale(family);
  if (J <= j0)
    throw Error("invalid-scales", "finest scale must exceed the family's "
                                  "natural coarsest scale " + std::to_string(j0));
  if (grid.num_points < 4 * (Index(1) << (J + 1)))
    throw Error("resolution-too-coarse",
                "grid must satisfy M >= 4 * frame size = 2^(J+3)");

  WaveletRows lv = build_levels(family, j0, J, grid, boundary);
  std::vector<const Matrix*> blocks{&lv.fine, &lv.scalings.back()};
  for (auto it = lv.wavelets.rbegin(); it != lv.wavelets.rend(); ++it)
    blocks.push_back(&*it);
  SampledFrame f = assemble_frame(
      blocks, grid, boundary, 2.0,
      "walrus-" + family_name(family) + "-J" + std::to_string(J) +
          (boundary == WaveletBoundary::Periodic ? "-per" : "-zp"));
  f.derivatives = detail::finite_difference_rows(
      f.values, 1.0 / static_cast<double>(grid.num_points), f.periodic);
  return f;
}

Index frame_gram_rank(const SampledFrame& frame, double rtol) {
  const Matrix G =
      frame.values * frame.weights.asDiagonal() * frame.values.transpose();
  Eigen::JacobiSVD<Matrix> svd(G);
  const Vector sv = svd.singularValues();
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv[i] > rtol * sv[0]) ++rank;
  return rank;
}

SampledFrame compute_dual_frame(const SampledFrame& frame) {
  if (frame.values.size() == 0) throw Error("missing-values", "empty frame");
  SampledFrame f = frame;
  if (f.kind == FrameKind::LegendreOrthonormal) {
    f.duals = f.values;  // orthonormal frames are self-dual
    f.right_duals = f.right_values;
    return f;
  }
  const Matrix G = f.values * f.weights.asDiagonal() * f.values.transpose();
  Eigen::JacobiSVD<Matrix> svd(G, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector sv = svd.singularValues();
  const double cutoff = 1e-10 * sv[0];
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) ++rank;
  if (rank < f.effective_dimension())
    throw Error("rank-deficient-frame",
                "Gram rank " + std::to_string(rank) + " < expected " +
                    std::to_string(f.effective_dimension()));
  Matrix pinv = Matrix::Zero(G.rows(), G.cols());
  for (Index i = 0; i < rank; ++i)
    pinv += svd.matrixU().col(i) * svd.matrixV().col(i).transpose() / sv[i];
  f.duals = pinv * f.values;
  f.right_duals = pinv * f.right_values;
  return f;
}

SampledFrame frame_derivative(const SampledFrame& frame) {
  if (frame.values.size() == 0) throw Error("missing-values", "empty frame");
  if (frame.has_derivatives()) return frame;
  SampledFrame f = frame;
  f.derivatives = detail::finite_difference_rows(
      f.values, 1.0 / static_cast<double>(f.grid_points()), f.periodic);
  return f;
}

}  // namespace safari
