#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "biomech/kinematics.hpp"
#include "biomech/rng.hpp"

using namespace biomech;

namespace {

MotionSequence wrap(const Eigen::MatrixXd& positions, double fps) {
  MotionSequence s;
  s.fps = fps;
  s.positions = positions;
  for (int j = 0; j < positions.cols() / 3; ++j) s.joint_names.push_back("j" + std::to_string(j));
  return s;
}

// brute-force O(T^2) DFT magnitudes, one-sided
Eigen::VectorXd naive_dft_mag(const Eigen::VectorXd& x) {
  const int T = static_cast<int>(x.size());
  const int K = T / 2 + 1;
  Eigen::VectorXd mag(K);
  for (int k = 0; k < K; ++k) {
    double re = 0.0, im = 0.0;
    for (int t = 0; t < T; ++t) {
      const double ang = -2.0 * M_PI * k * t / T;
      re += x[t] * std::cos(ang);
      im += x[t] * std::sin(ang);
    }
    mag[k] = std::hypot(re, im);
  }
  return mag;
}

}  // namespace

TEST_CASE("finite_diff: constant position gives exactly zero velocity") {
  Eigen::MatrixXd pos = Eigen::MatrixXd::Constant(10, 3, 1.75);
  const DerivativeSequence v = finite_diff(wrap(pos, 30.0));
  CHECK(v.order == 1);
  CHECK(v.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("finite_diff: central difference is exact on linear motion") {
  const double fps = 25.0, vel = -0.7;
  Eigen::MatrixXd pos(12, 3);
  for (int t = 0; t < 12; ++t) {
    pos(t, 0) = vel * t / fps;
    pos(t, 1) = 2.0 + 0.1 * t / fps;
    pos(t, 2) = 0.0;
  }
  const DerivativeSequence v = finite_diff(wrap(pos, fps));
  for (int t = 1; t < 11; ++t) {
    CHECK(v.values(t, 0) == doctest::Approx(vel).epsilon(1e-13));
    CHECK(v.values(t, 1) == doctest::Approx(0.1).epsilon(1e-13));
  }
}

TEST_CASE("finite_diff: two applications on t^2 give 2.0 on interior frames") {
  const double fps = 20.0;
  const int T = 16;
  Eigen::MatrixXd pos(T, 3);
  pos.setZero();
  for (int t = 0; t < T; ++t) {
    const double time = t / fps;
    pos(t, 0) = time * time;
  }
  const DerivativeSequence acc = finite_diff(finite_diff(wrap(pos, fps)));
  CHECK(acc.order == 2);
  // both applications are fully central on [2, T-3]
  for (int t = 2; t <= T - 3; ++t) CHECK(acc.values(t, 0) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("finite_diff: too-short sequences are rejected") {
  Eigen::MatrixXd pos = Eigen::MatrixXd::Zero(2, 3);
  CHECK_THROWS_WITH_AS(finite_diff(wrap(pos, 30.0)), "sequence too short for derivatives",
                       std::invalid_argument);
}

TEST_CASE("finite_diff is linear") {
  Rng rng(11);
  Eigen::MatrixXd x(9, 6), y(9, 6);
  for (int t = 0; t < 9; ++t)
    for (int c = 0; c < 6; ++c) {
      x(t, c) = rng.uniform(-1, 1);
      y(t, c) = rng.uniform(-1, 1);
    }
  const double a = 2.5, b = -0.75;
  const Eigen::MatrixXd lhs = finite_diff_matrix(a * x + b * y, 30.0);
  const Eigen::MatrixXd rhs = a * finite_diff_matrix(x, 30.0) + b * finite_diff_matrix(y, 30.0);
  const double scale = rhs.cwiseAbs().maxCoeff();
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-13 * std::max(1.0, scale));
}

TEST_CASE("second_derivative: exact on quadratics including near boundaries") {
  const double fps = 10.0;
  const int T = 8;
  Eigen::MatrixXd pos(T, 1);
  for (int t = 0; t < T; ++t) {
    const double time = t / fps;
    pos(t, 0) = 3.0 * time * time - 0.5 * time + 2.0;
  }
  const Eigen::MatrixXd acc = second_derivative_matrix(pos, fps);
  for (int t = 1; t < T - 1; ++t) CHECK(acc(t, 0) == doctest::Approx(6.0).epsilon(1e-10));
}

TEST_CASE("spectrum: constant signal concentrates at bin zero") {
  Eigen::VectorXd x = Eigen::VectorXd::Constant(32, 3.25);
  const MagnitudeSpectrum spec = spectrum(x, 32.0);
  CHECK(spec.size() == 17);
  CHECK(spec.bins[0] == doctest::Approx(32 * 3.25).epsilon(1e-12));
  for (int k = 1; k < spec.size(); ++k) CHECK(spec.bins[k] < 1e-10);
  CHECK(spec.bin_hz == doctest::Approx(1.0));
}

TEST_CASE("spectrum: pure tone peaks at its own bin") {
  const int T = 48, k_tone = 7;
  Eigen::VectorXd x(T);
  for (int t = 0; t < T; ++t) x[t] = std::sin(2.0 * M_PI * k_tone * t / T);
  const MagnitudeSpectrum spec = spectrum(x, 48.0);
  for (int k = 0; k < spec.size(); ++k) {
    if (k == k_tone)
      CHECK(spec.bins[k] == doctest::Approx(T / 2.0).epsilon(1e-9));
    else
      CHECK(spec.bins[k] < 1e-9);
  }
}

TEST_CASE("spectrum: matches the brute-force DFT on random signals") {
  for (int T : {8, 64, 257}) {
    Rng rng(100 + T);
    Eigen::VectorXd x(T);
    for (int t = 0; t < T; ++t) x[t] = rng.uniform(-1, 1);
    const MagnitudeSpectrum spec = spectrum(x, 30.0);
    const Eigen::VectorXd oracle = naive_dft_mag(x);
    REQUIRE(spec.size() == oracle.size());
    const double scale = oracle.cwiseAbs().maxCoeff();
    for (int k = 0; k < spec.size(); ++k)
      CHECK(std::abs(spec.bins[k] - oracle[k]) <= 1e-9 * scale);
  }
}

TEST_CASE("spectrum: Parseval identity with one-sided fold weights") {
  for (int T : {16, 21}) {
    Rng rng(9 + T);
    Eigen::VectorXd x(T);
    for (int t = 0; t < T; ++t) x[t] = rng.uniform(-2, 2);
    const MagnitudeSpectrum spec = spectrum(x, 30.0);
    double sum = 0.0;
    for (int k = 0; k < spec.size(); ++k) {
      const bool edge = (k == 0) || (T % 2 == 0 && k == spec.size() - 1);
      sum += (edge ? 1.0 : 2.0) * spec.bins[k] * spec.bins[k];
    }
    const double energy = T * x.squaredNorm();
    CHECK(sum == doctest::Approx(energy).epsilon(1e-9));
  }
}

TEST_CASE("spectrum rejects short signals") {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(spectrum(x, 30.0), std::invalid_argument);
}

TEST_CASE("band_norms: pure DC and pure Nyquist limits") {
  MagnitudeSpectrum spec;
  spec.bins = Eigen::VectorXd::Zero(17);
  spec.normalization = SpectrumNormalization::kUnitL2;
  spec.bins[0] = 1.0;
  BandNorms b = band_norms(spec, 0.1, 0.5);
  CHECK(b.low == 1.0);
  CHECK(b.high == 0.0);

  spec.bins.setZero();
  spec.bins[16] = 1.0;
  b = band_norms(spec, 0.1, 0.5);
  CHECK(b.low == 0.0);
  CHECK(b.high == 1.0);
}

TEST_CASE("band_norms: two-tone bands match direct summation") {
  const int T = 64;
  Eigen::VectorXd x(T);
  for (int t = 0; t < T; ++t)
    x[t] = 2.0 * std::sin(2.0 * M_PI * 1 * t / T) + 0.5 * std::sin(2.0 * M_PI * 30 * t / T);
  const MagnitudeSpectrum spec = spectrum(x, 30.0, SpectrumNormalization::kUnitL2);
  const BandNorms b = band_norms(spec, 0.10, 0.50);
  const int K = spec.size();
  const int low_end = static_cast<int>(std::floor(0.10 * K));
  const int high_begin = static_cast<int>(std::ceil(0.50 * K));
  double low_sq = 0.0, high_sq = 0.0, mid_sq = 0.0;
  for (int k = 0; k < K; ++k) {
    const double e = spec.bins[k] * spec.bins[k];
    if (k < low_end)
      low_sq += e;
    else if (k >= high_begin)
      high_sq += e;
    else
      mid_sq += e;
  }
  CHECK(b.low == doctest::Approx(std::sqrt(low_sq)).epsilon(1e-12));
  CHECK(b.high == doctest::Approx(std::sqrt(high_sq)).epsilon(1e-12));
  // unit-L2 band split
  CHECK(b.low * b.low + mid_sq + b.high * b.high == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("band_norms rejects unnormalized spectra and bad fractions") {
  Eigen::VectorXd x = Eigen::VectorXd::Random(16);
  const MagnitudeSpectrum raw = spectrum(x, 30.0);
  CHECK_THROWS_AS(band_norms(raw, 0.1, 0.5), std::invalid_argument);
  const MagnitudeSpectrum unit = spectrum(x, 30.0, SpectrumNormalization::kUnitL2);
  CHECK_THROWS_AS(band_norms(unit, 0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(band_norms(unit, 0.6, 0.5), std::invalid_argument);
}
