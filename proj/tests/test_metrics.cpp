#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "biomech/metrics.hpp"
#include "biomech/rng.hpp"

using namespace biomech;

namespace {

// root, chest, foot_l, foot_r
Skeleton walker() {
  Skeleton s;
  s.joints.push_back({"root", std::nullopt, {0, 0.9, 0}});
  s.joints.push_back({"chest", 0, {0, 0.3, 0}});
  s.joints.push_back({"foot_l", 0, {0.1, -0.9, 0.1}});
  s.joints.push_back({"foot_r", 0, {-0.1, -0.9, -0.1}});
  s.foot_left = 2;
  s.foot_right = 3;
  s.lowest_candidates = {2, 3};
  return s;
}

MotionSequence static_pose(int T, double foot_y = 0.0) {
  MotionSequence m;
  m.fps = 20.0;
  m.joint_names = {"root", "chest", "foot_l", "foot_r"};
  m.positions.resize(T, 12);
  for (int t = 0; t < T; ++t) {
    m.positions.row(t) << 0.0, 0.9, 0.0, 0.0, 1.2, 0.0, 0.1, foot_y, 0.1, -0.1, foot_y, -0.1;
  }
  return m;
}

}  // namespace

TEST_CASE("foot skating: static grounded feet score zero") {
  CHECK(foot_skating(static_pose(12), walker(), MetricConfig{}) == 0.0);
}

TEST_CASE("foot skating: both feet sliding at 1 m/s score (1-e^-1)(T-2)/T") {
  const int T = 24;
  MotionSequence m = static_pose(T);
  for (int t = 0; t < T; ++t) {
    const double x = t / m.fps;  // 1 m/s in x
    m.positions(t, 6) = x;
    m.positions(t, 9) = x;
  }
  const double got = foot_skating(m, walker(), MetricConfig{});
  const double expected = (1.0 - std::exp(-1.0)) * (T - 2) / static_cast<double>(T);
  CHECK(std::abs(got - expected) < 1e-9);
}

TEST_CASE("foot skating: airborne feet never skate") {
  const int T = 16;
  MotionSequence m = static_pose(T);
  for (int t = 0; t < T; ++t) {
    m.positions(t, 6) = t / m.fps;  // 1 m/s
    m.positions(t, 7) = 0.5;        // half a meter up
  }
  CHECK(foot_skating(m, walker(), MetricConfig{}) == 0.0);
}

TEST_CASE("foot skating: paper-raw aggregation reports mean frame scores") {
  const int T = 10;
  MetricConfig cfg;
  cfg.aggregation = MetricAggregation::kPaperRaw;
  CHECK(foot_skating(static_pose(T), walker(), cfg) == 1.0);
}

TEST_CASE("foot skating preconditions") {
  Skeleton s = walker();
  s.foot_left = -1;
  CHECK_THROWS_AS(foot_skating(static_pose(8), s, MetricConfig{}), std::invalid_argument);
  CHECK_THROWS_AS(foot_skating(static_pose(2), walker(), MetricConfig{}), std::invalid_argument);
}

TEST_CASE("ground clearance: grounded pose has no float or penetration") {
  const GroundClearance gc = ground_clearance(static_pose(10), walker(), MetricConfig{});
  CHECK(gc.floating == 0.0);
  CHECK(gc.penetrate == 0.0);
}

TEST_CASE("ground clearance: constant float at 0.25 m") {
  const GroundClearance gc = ground_clearance(static_pose(10, 0.25), walker(), MetricConfig{});
  CHECK(std::abs(gc.floating - (1.0 - std::exp(-0.20))) < 1e-9);
  CHECK(gc.penetrate == 0.0);
}

TEST_CASE("ground clearance: constant penetration at -0.10 m") {
  const GroundClearance gc = ground_clearance(static_pose(10, -0.10), walker(), MetricConfig{});
  CHECK(gc.floating == 0.0);
  CHECK(std::abs(gc.penetrate - (1.0 - std::exp(-0.10))) < 1e-9);
}

TEST_CASE("ground clearance requires candidates") {
  Skeleton s = walker();
  s.lowest_candidates.clear();
  CHECK_THROWS_AS(ground_clearance(static_pose(8), s, MetricConfig{}), std::invalid_argument);
}

TEST_CASE("foot clip: wide, coincident and boundary separations") {
  MotionSequence wide = static_pose(10);
  CHECK(foot_clip(wide, walker(), MetricConfig{}) == 0.0);  // ~0.28 m apart

  MotionSequence touching = static_pose(10);
  for (int t = 0; t < 10; ++t) {
    touching.positions.block<1, 3>(t, 9) = touching.positions.block<1, 3>(t, 6);
  }
  CHECK(std::abs(foot_clip(touching, walker(), MetricConfig{}) - (1.0 - std::exp(-0.05))) < 1e-9);

  MotionSequence boundary = static_pose(10);
  for (int t = 0; t < 10; ++t) {
    boundary.positions.block<1, 3>(t, 9) = boundary.positions.block<1, 3>(t, 6);
    boundary.positions(t, 9) += 0.05;  // exactly clip_dist apart
  }
  CHECK(foot_clip(boundary, walker(), MetricConfig{}) == 0.0);
}

TEST_CASE("speed: static motion and constant-displacement arithmetic") {
  CHECK(speed_metric(static_pose(10), MetricConfig{}) == 0.0);

  MotionSequence m;
  m.fps = 20.0;
  m.joint_names = {"a"};
  m.positions.resize(6, 3);
  for (int t = 0; t < 6; ++t) m.positions.row(t) << 0.02 * t, 0.0, 0.0;
  CHECK(speed_metric(m, MetricConfig{}) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("speed equals brute-force displacement summation") {
  Rng rng(5);
  MotionSequence m;
  m.fps = 30.0;
  m.joint_names = {"a", "b"};
  m.positions.resize(14, 6);
  for (int t = 0; t < 14; ++t)
    for (int c = 0; c < 6; ++c) m.positions(t, c) = rng.uniform(-1, 1);
  double sum = 0.0;
  for (int t = 1; t < 14; ++t)
    for (int j = 0; j < 2; ++j)
      sum += (m.positions.block<1, 3>(t, 3 * j) - m.positions.block<1, 3>(t - 1, 3 * j)).norm() *
             m.fps;
  CHECK(speed_metric(m, MetricConfig{}) == doctest::Approx(sum / (13.0 * 2.0)).epsilon(1e-12));
}

TEST_CASE("smoothness: zero for constant velocity and constant acceleration") {
  // dyadic step and fps keep every intermediate exactly representable
  MotionSequence lin;
  lin.fps = 16.0;
  lin.joint_names = {"a"};
  lin.positions.resize(10, 3);
  for (int t = 0; t < 10; ++t) lin.positions.row(t) << 0.25 * t, 0.0, 0.0;
  CHECK(smoothness_metric(lin, MetricConfig{}) == 0.0);

  MotionSequence quad = lin;
  for (int t = 0; t < 10; ++t) quad.positions(t, 1) = 0.03125 * t * t;
  CHECK(smoothness_metric(quad, MetricConfig{}) == 0.0);
}

TEST_CASE("smoothness: sinusoid matches the brute-force jerk oracle") {
  const double fps = 50.0, A = 0.2, omega = 2.0 * M_PI * 2.0;
  const int T = 64;
  MotionSequence m;
  m.fps = fps;
  m.joint_names = {"a"};
  m.positions.setZero(T, 3);
  for (int t = 0; t < T; ++t) m.positions(t, 1) = A * std::sin(omega * t / fps);

  // brute force: central second difference then backward absolute jerk
  const double dt = 1.0 / fps;
  std::vector<double> acc(T, 0.0);
  for (int t = 1; t < T - 1; ++t)
    acc[t] = (m.positions(t + 1, 1) - 2.0 * m.positions(t, 1) + m.positions(t - 1, 1)) / (dt * dt);
  acc[0] = acc[1];
  acc[T - 1] = acc[T - 2];
  double sum = 0.0;
  int count = 0;
  for (int t = 2; t <= T - 2; ++t) {
    sum += std::abs(acc[t] - acc[t - 1]) / dt;
    count += 3;  // three channels, two of them zero
  }
  const double oracle = sum / count;
  CHECK(smoothness_metric(m, MetricConfig{}) == doctest::Approx(oracle).epsilon(1e-12));
  // amplitude * omega^3 * mean|cos| ballpark with discretization attenuation
  const double analytic = A * omega * omega * omega * (2.0 / M_PI) / 3.0;
  CHECK(smoothness_metric(m, MetricConfig{}) == doctest::Approx(analytic).epsilon(0.15));
}

TEST_CASE("speed and smoothness scale linearly / cubically under time rescaling") {
  const double fps = 100.0, A = 0.1;
  const int T = 200;
  auto sine_motion = [&](double hz) {
    MotionSequence m;
    m.fps = fps;
    m.joint_names = {"a"};
    m.positions.setZero(T, 3);
    for (int t = 0; t < T; ++t) m.positions(t, 0) = A * std::sin(2.0 * M_PI * hz * t / fps);
    return m;
  };
  const MetricConfig cfg;
  const double s1 = speed_metric(sine_motion(1.0), cfg);
  const double s2 = speed_metric(sine_motion(2.0), cfg);
  CHECK(s2 / s1 == doctest::Approx(2.0).epsilon(0.02));
  const double j1 = smoothness_metric(sine_motion(1.0), cfg);
  const double j2 = smoothness_metric(sine_motion(2.0), cfg);
  CHECK(j2 / j1 == doctest::Approx(8.0).epsilon(0.02));
}

TEST_CASE("consistency: slow drift gives VC near zero") {
  MotionSequence m;
  m.fps = 20.0;
  m.joint_names = {"a"};
  const int T = 64;
  m.positions.setZero(T, 3);
  // velocity dominated by the lowest non-DC bin
  for (int t = 0; t < T; ++t) m.positions(t, 0) = std::cos(2.0 * M_PI * 1.0 * t / T);
  const double vc = consistency(m, MetricConfig{}, ConsistencyKind::kVelocity);
  CHECK(std::abs(vc) < 0.05);
}

TEST_CASE("consistency: mid-band motion drives the ratio toward the cap") {
  MotionSequence m;
  m.fps = 20.0;
  m.joint_names = {"a"};
  const int T = 64;  // K = 33, low bins [0,3), high bins [17,33)
  m.positions.setZero(T, 3);
  for (int t = 0; t < T; ++t) m.positions(t, 0) = std::sin(2.0 * M_PI * 8.0 * t / T);
  MetricConfig cfg;
  // the one-sided endpoint rows of the derivative leak a little band mass,
  // so the ratio is large but the exact singular cap needs empty bands
  const double vc = consistency(m, cfg, ConsistencyKind::kVelocity);
  CHECK(vc > 10.0);
}

TEST_CASE("consistency: cap fires exactly when no band mass is available") {
  MetricConfig cfg;
  // zero derivative in every channel: a static motion
  MotionSequence m;
  m.fps = 20.0;
  m.joint_names = {"a"};
  m.positions = Eigen::MatrixXd::Constant(32, 3, 0.5);
  CHECK(consistency(m, cfg, ConsistencyKind::kVelocity) == cfg.consistency_cap);
  CHECK(consistency(m, cfg, ConsistencyKind::kAcceleration) == cfg.consistency_cap);
}

TEST_CASE("consistency formula limit cases are exact") {
  CHECK(consistency_from_bands(1.0, 0.0, 100.0) == 0.0);
  CHECK(consistency_from_bands(0.0, 0.0, 100.0) == 100.0);
  CHECK(consistency_from_bands(0.6, 0.2, 100.0) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("full report: static grounded pose zeroes the six contact metrics") {
  const MetricReport r = full_report(static_pose(16), walker(), MetricConfig{});
  CHECK(r.speed_mps == 0.0);
  CHECK(r.smoothness == 0.0);
  CHECK(r.foot_skating == 0.0);
  CHECK(r.floating == 0.0);
  CHECK(r.penetrate == 0.0);
  CHECK(r.clip == 0.0);
  CHECK(r.frames == 16);
}

TEST_CASE("reference tables store the published ground-truth rows") {
  const ReferenceStats& h = reference_stats("humanml3d-gt");
  CHECK(h.vc == 0.124);
  CHECK(h.ac == 0.682);
  CHECK(h.speed_mps == 0.358);
  CHECK(h.smoothness == 2.60);
  CHECK(h.floating == 0.205);
  CHECK(h.foot_skating == 0.057);
  CHECK(h.penetrate == 0.000);
  CHECK(h.clip == 0.000);
  const ReferenceStats& k = reference_stats("kitml-gt");
  CHECK(k.vc == 0.352);
  CHECK(k.ac == 1.379);
  CHECK(k.speed_mps == 0.926);
  CHECK(k.smoothness == 3.06);
  CHECK(k.floating == 0.550);
  CHECK(k.foot_skating == 0.309);
  CHECK(k.penetrate == 0.208);
  CHECK(k.clip == 0.001);
  CHECK_THROWS_AS(reference_stats("unknown"), std::invalid_argument);
}

TEST_CASE("compare_to_reference: reference against itself is all zeros") {
  const ReferenceStats& ref = reference_stats("humanml3d-gt");
  MetricReport r;
  r.vc = ref.vc;
  r.ac = ref.ac;
  r.speed_mps = ref.speed_mps;
  r.smoothness = ref.smoothness;
  r.floating = ref.floating;
  r.foot_skating = ref.foot_skating;
  r.penetrate = ref.penetrate;
  r.clip = ref.clip;
  const MetricDeviations d = compare_to_reference(r, ref);
  CHECK(d.vc == 0.0);
  CHECK(d.ac == 0.0);
  CHECK(d.speed_mps == 0.0);
  CHECK(d.smoothness == 0.0);
  CHECK(d.floating == 0.0);
  CHECK(d.foot_skating == 0.0);
  CHECK(d.penetrate == 0.0);
  CHECK(d.clip == 0.0);

  MetricReport shifted = r;
  shifted.floating += 0.100;
  CHECK(compare_to_reference(shifted, ref).floating == doctest::Approx(0.100).epsilon(1e-12));
}

TEST_CASE("report JSON round trip preserves all fields") {
  MetricReport r = full_report(static_pose(12, 0.07), walker(), MetricConfig{});
  const std::string text = report_to_json(r, {{"command", "metrics"}});
  const MetricReport back = report_from_json(text, "test");
  // canonical serialization keeps 9 significant digits
  CHECK(back.vc == doctest::Approx(r.vc).epsilon(1e-9));
  CHECK(back.ac == doctest::Approx(r.ac).epsilon(1e-9));
  CHECK(back.speed_mps == doctest::Approx(r.speed_mps).epsilon(1e-9));
  CHECK(back.smoothness == doctest::Approx(r.smoothness).epsilon(1e-9));
  CHECK(back.floating == doctest::Approx(r.floating).epsilon(1e-9));
  CHECK(back.foot_skating == doctest::Approx(r.foot_skating).epsilon(1e-9));
  CHECK(back.penetrate == doctest::Approx(r.penetrate).epsilon(1e-9));
  CHECK(back.clip == doctest::Approx(r.clip).epsilon(1e-9));
  CHECK(back.frames == r.frames);
  CHECK(back.config.float_height_m == r.config.float_height_m);
}

TEST_CASE("contact metrics are invariant to x/z translation") {
  Rng rng(21);
  MotionSequence m = static_pose(20, 0.12);
  for (int t = 0; t < 20; ++t)
    for (int c = 0; c < 12; ++c) m.positions(t, c) += 0.01 * rng.uniform(-1, 1);
  const MetricConfig cfg;
  const Skeleton skel = walker();
  const MetricReport base = full_report(m, skel, cfg);
  MotionSequence shifted = m;
  for (int j = 0; j < 4; ++j) {
    shifted.positions.col(3 * j).array() += 12.5;      // x
    shifted.positions.col(3 * j + 2).array() -= 3.25;  // z
  }
  const MetricReport moved = full_report(shifted, skel, cfg);
  CHECK(moved.foot_skating == doctest::Approx(base.foot_skating).epsilon(1e-9));
  CHECK(moved.floating == doctest::Approx(base.floating).epsilon(1e-12));
  CHECK(moved.penetrate == doctest::Approx(base.penetrate).epsilon(1e-12));
  CHECK(moved.clip == doctest::Approx(base.clip).epsilon(1e-9));
}

TEST_CASE("penalty metrics grow monotonically with violation magnitude") {
  const MetricConfig cfg;
  const Skeleton skel = walker();
  double prev_float = -1.0, prev_pen = -1.0;
  for (double h : {0.08, 0.15, 0.30, 0.60}) {
    const GroundClearance gc = ground_clearance(static_pose(10, h), skel, cfg);
    CHECK(gc.floating > prev_float);
    prev_float = gc.floating;
  }
  for (double h : {-0.05, -0.15, -0.40}) {
    const GroundClearance gc = ground_clearance(static_pose(10, h), skel, cfg);
    CHECK(gc.penetrate > prev_pen);
    prev_pen = gc.penetrate;
  }
}

TEST_CASE("metrics are invariant under relabeling of non-special joints") {
  Rng rng(31);
  MotionSequence m = static_pose(20, 0.05);
  for (int t = 0; t < 20; ++t)
    for (int c = 0; c < 12; ++c) m.positions(t, c) += 0.02 * rng.uniform(-1, 1);
  const MetricConfig cfg;
  const MetricReport base = full_report(m, walker(), cfg);

  // swap joints 0 and 1 (root and chest), feet keep their indices
  MotionSequence swapped = m;
  swapped.positions.middleCols(0, 3) = m.positions.middleCols(3, 3);
  swapped.positions.middleCols(3, 3) = m.positions.middleCols(0, 3);
  const MetricReport perm = full_report(swapped, walker(), cfg);
  CHECK(perm.vc == doctest::Approx(base.vc).epsilon(1e-12));
  CHECK(perm.ac == doctest::Approx(base.ac).epsilon(1e-12));
  CHECK(perm.speed_mps == doctest::Approx(base.speed_mps).epsilon(1e-12));
  CHECK(perm.smoothness == doctest::Approx(base.smoothness).epsilon(1e-12));
  CHECK(perm.foot_skating == doctest::Approx(base.foot_skating).epsilon(1e-12));
}
