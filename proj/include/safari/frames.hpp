#pragma once

#include <optional>
#include <string>

#include "safari/types.hpp"

namespace safari {

enum class GridScheme { UniformMidpoint };

/// Uniform-midpoint sampling of [0,1]: points (i+1/2)/M, base weight 1/M.
struct GridSpec {
  Index num_points = 512;
  GridScheme scheme = GridScheme::UniformMidpoint;

  Vector points() const;
};

/// Midpoint quadrature weights with Euler-Maclaurin boundary corrections
/// (h^2 and h^4 terms estimated from one-sided stencils). They sum to 1 and
/// integrate smooth integrands to O(h^6), which the constructor-oracle
/// tolerances need at high polynomial order.
Vector corrected_midpoint_weights(Index num_points);

enum class FrameKind { LegendreOrthonormal, WaveletFrame };
enum class WaveletFamily { Haar, Db2, Db4 };
enum class WaveletBoundary { Periodic, ZeroPad };

/// A family of frame functions sampled on a midpoint grid over [0,1].
/// `values` is K x M (one row per function). Duals and derivatives are
/// empty until filled. `right_values` holds the functions evaluated at
/// s = 1, which the SSM constructors need for their boundary terms.
struct SampledFrame {
  Matrix values;
  Matrix duals;
  Matrix derivatives;
  Vector weights;
  Vector grid;
  Vector right_values;
  Vector right_duals;
  FrameKind kind = FrameKind::WaveletFrame;
  double redundancy = 1.0;
  bool periodic = false;
  std::string name;

  Index size() const { return values.rows(); }
  Index grid_points() const { return values.cols(); }
  bool has_duals() const { return duals.size() > 0; }
  bool has_derivatives() const { return derivatives.size() > 0; }
  Index effective_dimension() const {
    return static_cast<Index>(std::lround(size() / redundancy));
  }
};

struct WaveletFrameSpec {
  WaveletFamily family = WaveletFamily::Haar;
  int coarsest_scale = 0;  // j0
  int finest_scale = 0;    // J
  bool include_scaling_functions = true;
  WaveletBoundary boundary = WaveletBoundary::Periodic;
};

/// Orthonormal shifted Legendre polynomials sqrt(2n+1) P_n(2s-1), n < order,
/// with analytic derivatives. Self-dual.
SampledFrame sample_legendre_basis(Index order, const GridSpec& grid);

/// Multiresolution system: 2^j0 scaling functions at scale j0 (when enabled)
/// plus 2^j wavelets for j = j0..J. Haar rows are mollified with a narrow
/// C^2 bump (4 grid cells wide); the mollification is part of the frame
/// definition. db2/db4 rows come from the cascade table, with coarse scales
/// assembled as exact filter combinations of the fine scaling rows.
SampledFrame build_wavelet_frame(const WaveletFrameSpec& spec, const GridSpec& grid);

/// Redundancy-2 frame used by the WaLRUS species: the 2^J fine scaling
/// functions at scale J joined with the multiresolution system of the same
/// span (scaling at the family's natural coarsest scale, wavelets up to J-1).
/// K = 2^(J+1) over a 2^J-dimensional span.
SampledFrame build_walrus_frame(WaveletFamily family, int finest_scale,
                                const GridSpec& grid,
                                WaveletBoundary boundary = WaveletBoundary::ZeroPad);

/// Coarsest scale at which a family's filter fits without degenerate
/// truncation: smallest j0 with 2^j0 >= filter length.
int natural_coarsest_scale(WaveletFamily family);

/// Canonical dual frame via the pseudo-inverse of the weighted Gram matrix
/// (SVD cutoff 1e-10 * sigma_max). Orthonormal frames short-circuit to
/// duals = values. Throws rank-deficient-frame if the numerical Gram rank
/// falls below K / redundancy.
SampledFrame compute_dual_frame(const SampledFrame& frame);

/// Fill `derivatives` by fourth-order finite differences (one-sided at the
/// boundary). No-op when derivatives are already present.
SampledFrame frame_derivative(const SampledFrame& frame);

/// Numerical rank of the weighted Gram matrix at relative tolerance `rtol`.
Index frame_gram_rank(const SampledFrame& frame, double rtol = 1e-10);

namespace detail {
Matrix finite_difference_rows(const Matrix& rows, double step, bool periodic = false);
Vector daubechies_filter(WaveletFamily family);
}  // namespace detail

}  // namespace safari
