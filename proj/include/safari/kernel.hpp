#pragma once

#include <string>

#include "safari/frames.hpp"
#include "safari/spectral.hpp"
#include "safari/types.hpp"

namespace safari {

/// Output map y = Re(C x) + D u. Over reduced coordinates C is complex and
/// must respect conjugate pairing so kernel taps stay real; over dense
/// coordinates only the real part is used.
struct ReadoutMap {
  ComplexVector C;
  double D = 0.0;

  static ReadoutMap dense(const Vector& c, double d = 0.0) {
    ReadoutMap r;
    r.C = c.cast<Complex>();
    r.D = d;
    return r;
  }
};

struct Kernel {
  Vector taps;
  std::string source;

  Index length() const { return taps.size(); }
};

/// taps[l] = C A_d^l B_d. Diagonal fast path with conjugate doubling under
/// half storage; dense path via iterated matrix-vector products.
Kernel compute_kernel(const DiscreteSystem& sys, const ReadoutMap& readout, Index L);

/// Causal linear convolution truncated to the input length, via real-input
/// FFT zero-padded to the next power of two >= T + L - 1, plus D*u.
Vector convolve(const Kernel& kernel, const Vector& input, double feedthrough = 0.0);

struct ScanResult {
  Vector output;
  // trajectory rows are time steps; complex for diagonal systems
  ComplexMatrix states;
  bool kept_states = false;
};

/// Step-by-step recurrence x <- A_d x + B_d u_n, y_n = Re(C x) + D u_n
/// (the state absorbs u_n before the readout, matching the kernel
/// convention taps[0] = C B_d).
ScanResult recurrent_scan(const DiscreteSystem& sys, const ReadoutMap& readout,
                          const Vector& input, bool keep_states = false);

struct Reconstruction {
  Vector times;     // sample positions in [0, horizon]
  Vector estimate;  // synthesized history on those positions
  double relative_l2_error = -1.0;  // vs truth when provided
};

/// Synthesize the history encoded by a state vector against the frame:
/// f_hat = sum_k x_k phi_k(s), mapped to lag positions through the
/// time-invariant warp s = exp(-(T - tau)/theta) for scaled systems or the
/// linear trailing window for translated ones.
Reconstruction reconstruct_signal(const ComplexVector& state, const SampledFrame& frame,
                                  Measure measure, double theta, double horizon,
                                  const Vector* truth = nullptr);

/// Real-input FFT helpers shared with the benchmark signal generator.
namespace fft {
/// Smallest power of two >= n.
Index next_pow2(Index n);
/// Forward real FFT (size padded to pow2 by the caller).
ComplexVector rfft(const Vector& x);
/// Inverse of rfft, returning the first n samples.
Vector irfft(const ComplexVector& X, Index n);
}  // namespace fft

}  // namespace safari
