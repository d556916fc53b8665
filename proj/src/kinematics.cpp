#include "biomech/kinematics.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace biomech {

Eigen::MatrixXd finite_diff_matrix(const Eigen::MatrixXd& values, double fps) {
  const int T = static_cast<int>(values.rows());
  if (T < 3) throw std::invalid_argument("sequence too short for derivatives");
  if (fps <= 0.0) throw std::invalid_argument("fps must be positive");
  if (!values.allFinite()) throw std::invalid_argument("non-finite input to finite_diff");
  const double dt = 1.0 / fps;
  Eigen::MatrixXd d(T, values.cols());
  d.row(0) = (values.row(1) - values.row(0)) / dt;
  d.row(T - 1) = (values.row(T - 1) - values.row(T - 2)) / dt;
  for (int t = 1; t < T - 1; ++t) d.row(t) = (values.row(t + 1) - values.row(t - 1)) / (2.0 * dt);
  return d;
}

DerivativeSequence finite_diff(const MotionSequence& seq) {
  seq.validate();
  DerivativeSequence out;
  out.order = 1;
  out.fps = seq.fps;
  out.values = finite_diff_matrix(seq.positions, seq.fps);
  return out;
}

DerivativeSequence finite_diff(const DerivativeSequence& seq) {
  DerivativeSequence out;
  out.order = seq.order + 1;
  out.fps = seq.fps;
  out.values = finite_diff_matrix(seq.values, seq.fps);
  return out;
}

Eigen::MatrixXd second_derivative_matrix(const Eigen::MatrixXd& values, double fps) {
  const int T = static_cast<int>(values.rows());
  if (T < 3) throw std::invalid_argument("sequence too short for derivatives");
  const double dt2 = 1.0 / (fps * fps);
  Eigen::MatrixXd d(T, values.cols());
  for (int t = 1; t < T - 1; ++t)
    d.row(t) = (values.row(t + 1) - 2.0 * values.row(t) + values.row(t - 1)) / dt2;
  d.row(0) = d.row(1);
  d.row(T - 1) = d.row(T - 2);
  return d;
}

MagnitudeSpectrum spectrum(const Eigen::VectorXd& channel, double fps,
                           SpectrumNormalization norm) {
  const int T = static_cast<int>(channel.size());
  if (T < 4) throw std::invalid_argument("signal too short for spectrum (T >= 4 required)");
  if (!channel.allFinite()) throw std::invalid_argument("non-finite input to spectrum");

  Eigen::FFT<double> fft;
  std::vector<double> x(channel.data(), channel.data() + T);
  std::vector<std::complex<double>> X;
  fft.fwd(X, x);

  const int K = T / 2 + 1;
  MagnitudeSpectrum spec;
  spec.bins.resize(K);
  for (int k = 0; k < K; ++k) spec.bins[k] = std::abs(X[k]);
  spec.bin_hz = fps / static_cast<double>(T);
  spec.normalization = SpectrumNormalization::kNone;
  if (norm == SpectrumNormalization::kUnitL2) {
    const double n = spec.bins.norm();
    if (n > 0.0) spec.bins /= n;
    spec.normalization = SpectrumNormalization::kUnitL2;
  }
  return spec;
}

BandNorms band_norms(const MagnitudeSpectrum& spec, double low_frac, double high_frac) {
  if (spec.normalization != SpectrumNormalization::kUnitL2)
    throw std::invalid_argument("band_norms requires a unit-L2 normalized spectrum");
  if (!(low_frac >= 0.0 && low_frac < 1.0 && high_frac > low_frac && high_frac <= 1.0))
    throw std::invalid_argument("band fractions must satisfy 0 <= low < high <= 1");
  const int K = spec.size();
  const int low_end = static_cast<int>(std::floor(low_frac * K));
  const int high_begin = static_cast<int>(std::ceil(high_frac * K));
  BandNorms b;
  if (low_end > 0) b.low = spec.bins.head(low_end).norm();
  if (high_begin < K) b.high = spec.bins.tail(K - high_begin).norm();
  return b;
}

}  // namespace biomech
