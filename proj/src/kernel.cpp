#include "safari/kernel.hpp"

#include <cmath>
#include <unsupported/Eigen/FFT>
#include <vector>

namespace safari {

namespace fft {

Index next_pow2(Index n) {
  Index p = 1;
  while (p < n) p <<= 1;
  return p;
}

ComplexVector rfft(const Vector& x) {
  Eigen::FFT<double> engine;
  std::vector<double> in(x.data(), x.data() + x.size());
  std::vector<Complex> out;
  engine.fwd(out, in);
  return Eigen::Map<ComplexVector>(out.data(), static_cast<Index>(out.size()));
}

Vector irfft(const ComplexVector& X, Index n) {
  Eigen::FFT<double> engine;
  std::vector<Complex> in(X.data(), X.data() + X.size());
  std::vector<double> out;
  engine.inv(out, in);
  Vector y(n);
  for (Index i = 0; i < n; ++i) y[i] = out[static_cast<size_t>(i)];
  return y;
}

}  // namespace fft

Kernel compute_kernel(const DiscreteSystem& sys, const ReadoutMap& readout, Index L) {
  if (L < 1) throw Error("invalid-length", "kernel length must be >= 1");
  Kernel k;
  k.taps.resize(L);
  if (sys.diagonal) {
    const Index n = sys.a_diag.size();
    if (readout.C.size() != n)
      throw Error("readout-size-mismatch", "C does not match the reduced dimension");
    ComplexVector x = sys.b_diag;
    for (Index l = 0; l < L; ++l) {
      Complex acc = 0.0;
      for (Index j = 0; j < n; ++j) {
        const Complex c = readout.C[j] * x[j];
        if (sys.half_storage && !sys.real_mode[static_cast<size_t>(j)])
          acc += 2.0 * c.real();  // conjugate partner contributes its mirror
        else
          acc += c;
      }
      if (std::abs(acc.imag()) > 1e-9 * std::max(1.0, std::abs(acc.real())))
        throw Error("nonreal-kernel",
                    "kernel tap has imaginary residue; conjugate pairing broken");
      k.taps[l] = acc.real();
      x = sys.a_diag.cwiseProduct(x);
    }
  } else {
    const Vector c = readout.C.real();
    Vector x = sys.B_dense;
    for (Index l = 0; l < L; ++l) {
      k.taps[l] = c.dot(x);
      x = sys.A_dense * x;
    }
  }
  k.source = sys.diagonal ? "diagonal" : "dense";
  return k;
}

Vector convolve(const Kernel& kernel, const Vector& input, double feedthrough) {
  const Index T = input.size(), L = kernel.length();
  if (L < 1) throw Error("invalid-length", "kernel is empty");
  const Index n = fft::next_pow2(T + L - 1);
  Vector a = Vector::Zero(n), b = Vector::Zero(n);
  a.head(T) = input;
  b.head(L) = kernel.taps;
  const ComplexVector A = fft::rfft(a), B = fft::rfft(b);
  const Vector full = fft::irfft(A.cwiseProduct(B), n);
  Vector y = full.head(T);
  if (feedthrough != 0.0) y += feedthrough * input;
  return y;
}

ScanResult recurrent_scan(const DiscreteSystem& sys, const ReadoutMap& readout,
                          const Vector& input, bool keep_states) {
  const Index T = input.size();
  const Index n = sys.dim();
  ScanResult r;
  r.output.resize(T);
  r.kept_states = keep_states;
  if (keep_states) r.states.resize(T, n);

  if (sys.diagonal) {
    if (readout.C.size() != n)
      throw Error("readout-size-mismatch", "C does not match the reduced dimension");
    ComplexVector x = ComplexVector::Zero(n);
    for (Index t = 0; t < T; ++t) {
      x = sys.a_diag.cwiseProduct(x) + sys.b_diag * input[t];
      Complex acc = 0.0;
      for (Index j = 0; j < n; ++j) {
        const Complex c = readout.C[j] * x[j];
        if (sys.half_storage && !sys.real_mode[static_cast<size_t>(j)])
          acc += 2.0 * c.real();
        else
          acc += c;
      }
      r.output[t] = acc.real() + readout.D * input[t];
      if (keep_states) r.states.row(t) = x.transpose();
    }
  } else {
    const Vector c = readout.C.real();
    Vector x = Vector::Zero(n);
    for (Index t = 0; t < T; ++t) {
      x = sys.A_dense * x + sys.B_dense * input[t];
      r.output[t] = c.dot(x) + readout.D * input[t];
      if (keep_states) r.states.row(t) = x.cast<Complex>().transpose();
    }
  }
  return r;
}

Reconstruction reconstruct_signal(const ComplexVector& state, const SampledFrame& frame,
                                  Measure measure, double theta, double horizon,
                                  const Vector* truth) {
  if (state.size() != frame.size())
    throw Error("species-frame-mismatch",
                "state dimension does not match the frame size");
  const Index M = frame.grid_points();
  Reconstruction rec;
  rec.times.resize(M);
  rec.estimate.resize(M);
  const ComplexVector synth = frame.values.transpose().cast<Complex>() * state;
  for (Index i = 0; i < M; ++i) {
    const double s = frame.grid[i];
    rec.estimate[i] = synth[i].real();
    rec.times[i] = measure == Measure::Scaled
                       ? horizon + theta * std::log(s)  // s = e^{-(T-tau)/theta}
                       : horizon - theta * (1.0 - s);
  }
  if (truth != nullptr) {
    double num = 0.0, den = 0.0;
    Index used = 0;
    for (Index i = 0; i < M; ++i) {
      const double tau = rec.times[i];
      if (tau < 0.0 || tau > horizon) continue;
      const auto idx = static_cast<Index>(std::min<double>(
          std::max(0.0, std::round(tau)), static_cast<double>(truth->size() - 1)));
      const double d = rec.estimate[i] - (*truth)[idx];
      num += d * d;
      den += (*truth)[idx] * (*truth)[idx];
      ++used;
    }
    rec.relative_l2_error = used > 0 ? std::sqrt(num / std::max(den, 1e-300)) : -1.0;
  }
  return rec;
}

}  // namespace safari
