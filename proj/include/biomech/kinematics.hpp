#pragma once

#include <Eigen/Dense>

#include "biomech/motion.hpp"

namespace biomech {

// Time derivative of a channel stack, one derivative order per application.
struct DerivativeSequence {
  int order = 1;              // 1 velocity (m/s), 2 acceleration (m/s^2), 3 jerk (m/s^3)
  double fps = 0.0;
  Eigen::MatrixXd values;     // T x C, same T as the source

  int frames() const { return static_cast<int>(values.rows()); }
};

// Central differences on interior frames, first-order one-sided at the two
// endpoints. Exact on linear signals in the interior.
Eigen::MatrixXd finite_diff_matrix(const Eigen::MatrixXd& values, double fps);
DerivativeSequence finite_diff(const MotionSequence& seq);
DerivativeSequence finite_diff(const DerivativeSequence& seq);

// Direct 3-point second-difference stencil (x[i+1] - 2x[i] + x[i-1]) / dt^2,
// endpoints copied from the adjacent interior value. Exact (zero jerk) on
// quadratics, which the smoothness metric relies on.
Eigen::MatrixXd second_derivative_matrix(const Eigen::MatrixXd& values, double fps);

enum class SpectrumNormalization { kNone, kUnitL2 };

// One-sided magnitude spectrum of a real signal, K = floor(T/2)+1 bins of
// raw |DFT| values (unnormalized transform). With unit-L2 normalization the
// bins are scaled to unit Euclidean norm; an all-zero signal stays all-zero.
struct MagnitudeSpectrum {
  Eigen::VectorXd bins;
  double bin_hz = 0.0;
  SpectrumNormalization normalization = SpectrumNormalization::kNone;

  int size() const { return static_cast<int>(bins.size()); }
};

MagnitudeSpectrum spectrum(const Eigen::VectorXd& channel, double fps,
                           SpectrumNormalization norm = SpectrumNormalization::kNone);

// L2 masses of the low band [0, floor(low_frac*K)) and the high band
// [ceil(high_frac*K), K) of a unit-L2 spectrum.
struct BandNorms {
  double low = 0.0;
  double high = 0.0;
};

BandNorms band_norms(const MagnitudeSpectrum& spec, double low_frac, double high_frac);

}  // namespace biomech
