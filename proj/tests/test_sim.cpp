#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>

#include "biomech/kinematics.hpp"
#include "biomech/motion_io.hpp"
#include "biomech/sim.hpp"

using namespace biomech;

namespace {

namespace fs = std::filesystem;

SimScenario pendulum(double length, double angle0, double fps, double duration) {
  SimScenario s;
  s.kind = ScenarioKind::kPendulumChain;
  s.link_lengths = {length};
  s.masses = {1.0};
  s.initial_angles = {angle0};
  s.fps = fps;
  s.duration_s = duration;
  return s;
}

SimScenario gait(double speed) {
  SimScenario s;
  s.kind = ScenarioKind::kGait;
  s.gait_speed = speed;
  s.gait_cadence = 1.7;
  s.fps = 20.0;
  s.duration_s = 3.2;
  return s;
}

}  // namespace

TEST_CASE("pendulum: small-angle period matches 2*pi*sqrt(L/g) within 1%") {
  const double L = 1.0;
  const SimOutput out = simulate(pendulum(L, 0.05, 120.0, 10.0));
  // link angle from the sampled positions
  std::vector<double> crossings;
  double prev_theta = 0.0;
  for (int t = 0; t < out.motion.frames(); ++t) {
    const double x = out.motion.positions(t, 3);
    const double y = out.motion.positions(t, 4);
    const double theta = std::atan2(x, out.skeleton.joints[0].offset.y() - y);
    if (t > 0 && prev_theta < 0.0 && theta >= 0.0) {
      const double frac = -prev_theta / (theta - prev_theta);
      crossings.push_back((t - 1 + frac) / out.motion.fps);
    }
    prev_theta = theta;
  }
  REQUIRE(crossings.size() >= 4);
  const double period =
      (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
  const double expected = 2.0 * M_PI * std::sqrt(L / 9.81);
  CHECK(std::abs(period - expected) / expected < 0.01);
}

TEST_CASE("pendulum: frictionless energy drift below 1% over 10 s") {
  const double L = 1.0, m = 1.0, g = 9.81;
  const SimOutput out = simulate(pendulum(L, 0.5, 240.0, 10.0));
  const Eigen::MatrixXd vel = finite_diff_matrix(out.motion.positions, out.motion.fps);
  std::vector<double> energy;
  for (int t = 1; t < out.motion.frames() - 1; ++t) {
    const double ke = 0.5 * m * vel.block<1, 3>(t, 3).squaredNorm();
    const double pe = m * g * out.motion.positions(t, 4);
    energy.push_back(ke + pe);
  }
  const double e0 = energy.front();
  const double scale = m * g * L * (1.0 - std::cos(0.5));  // swing energy above the rest point
  double max_drift = 0.0;
  for (double e : energy) max_drift = std::max(max_drift, std::abs(e - e0));
  CHECK(max_drift / scale < 0.01);
}

TEST_CASE("pendulum: analytic accelerations match finite differences of the motion") {
  const SimOutput out = simulate(pendulum(0.8, 0.6, 120.0, 2.0));
  const Eigen::MatrixXd fd_acc =
      second_derivative_matrix(out.motion.positions, out.motion.fps);
  double max_err = 0.0;
  for (int t = 2; t < out.motion.frames() - 2; ++t)
    max_err = std::max(max_err, (fd_acc.row(t) - out.accel_gt.row(t)).cwiseAbs().maxCoeff());
  CHECK(max_err < 0.05);
}

TEST_CASE("zero gravity, zero velocity: exactly static with zero acceleration") {
  SimScenario s = pendulum(1.0, 0.4, 30.0, 1.0);
  s.gravity = 0.0;
  const SimOutput out = simulate(s);
  for (int t = 1; t < out.motion.frames(); ++t)
    CHECK((out.motion.positions.row(t) - out.motion.positions.row(0)).cwiseAbs().maxCoeff() ==
          0.0);
  CHECK(out.accel_gt.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("bouncing mass settles onto the penalty spring") {
  SimScenario s;
  s.kind = ScenarioKind::kBouncingMass;
  s.masses = {1.0};
  s.drop_height = 1.0;
  s.fps = 30.0;
  s.duration_s = 4.0;
  const SimOutput out = simulate(s);
  const int T = out.motion.frames();
  // rest height within tolerance of the ground plane (static spring sag is
  // mg/k ~ 2e-3)
  CHECK(std::abs(out.motion.positions(T - 1, 1)) < 0.01);
  const MetricReport r = full_report(out.motion, out.skeleton, MetricConfig{});
  CHECK(r.penetrate < 0.02);
}

TEST_CASE("simulation blow-up is detected with a step index") {
  SimScenario s = pendulum(1.0, 0.0, 30.0, 1.0);
  s.initial_rates = {5e6};
  bool threw = false;
  try {
    simulate(s);
  } catch (const std::runtime_error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("blow-up") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("gait: commanded speed is realized within 2%") {
  const double v = 1.2;
  const SimOutput out = gait_pattern(gait(v));
  // brute-force displacement oracle over the emitted frames
  const int T = out.motion.frames();
  const int J = out.motion.joint_count();
  double sum = 0.0;
  for (int t = 1; t < T; ++t)
    for (int j = 0; j < J; ++j)
      sum += (out.motion.positions.block<1, 3>(t, 3 * j) -
              out.motion.positions.block<1, 3>(t - 1, 3 * j))
                 .norm() *
             out.motion.fps;
  const double brute = sum / ((T - 1.0) * J);
  const double metric = speed_metric(out.motion, MetricConfig{});
  CHECK(metric == doctest::Approx(brute).epsilon(1e-12));
  // root advances at the commanded speed
  const double root_speed = (out.motion.positions(T - 1, 0) - out.motion.positions(0, 0)) /
                            ((T - 1.0) / out.motion.fps);
  CHECK(root_speed == doctest::Approx(v).epsilon(0.02));
  // every joint travels with the walker, so the mean is near the command
  CHECK(metric == doctest::Approx(v).epsilon(0.10));
}

TEST_CASE("gait: stance feet are exactly still and never skate") {
  const SimOutput out = gait_pattern(gait(1.3));
  const Skeleton& skel = out.skeleton;
  const int T = out.motion.frames();
  int stance_frames = 0;
  for (int foot : {skel.foot_left, skel.foot_right}) {
    for (int t = 1; t < T; ++t) {
      const double y = out.motion.positions(t, 3 * foot + 1);
      const double y_prev = out.motion.positions(t - 1, 3 * foot + 1);
      if (y == 0.0 && y_prev == 0.0) {
        ++stance_frames;
        CHECK(out.motion.positions.block<1, 3>(t, 3 * foot) ==
              out.motion.positions.block<1, 3>(t - 1, 3 * foot));
      }
    }
  }
  CHECK(stance_frames > T / 2);
  CHECK(foot_skating(out.motion, skel, MetricConfig{}) == 0.0);
  // one foot is always planted: no float, no penetration
  const GroundClearance gc = ground_clearance(out.motion, skel, MetricConfig{});
  CHECK(gc.floating == 0.0);
  CHECK(gc.penetrate == 0.0);
}

TEST_CASE("gait: zero amplitude degenerates to pure translation") {
  SimScenario s = gait(1.1);
  s.amplitude_scale = 0.0;
  const SimOutput out = gait_pattern(s);
  const int T = out.motion.frames();
  for (int j = 0; j < 5; ++j) {
    for (int t = 1; t < T; ++t) {
      const Eigen::Vector3d step = (out.motion.positions.block<1, 3>(t, 3 * j) -
                                    out.motion.positions.block<1, 3>(t - 1, 3 * j))
                                       .transpose();
      CHECK(step.y() == 0.0);
      CHECK(step.z() == 0.0);
      CHECK(step.x() == doctest::Approx(1.1 / 20.0).epsilon(1e-9));
    }
  }
  CHECK(speed_metric(out.motion, MetricConfig{}) == doctest::Approx(1.1).epsilon(1e-9));
}

TEST_CASE("simulate is bit-deterministic") {
  const SimScenario s = gait(1.25);
  const SimOutput a = simulate(s);
  const SimOutput b = simulate(s);
  CHECK(a.motion.positions == b.motion.positions);
  CHECK(a.accel_gt == b.accel_gt);
  CHECK(a.torque_proxy == b.torque_proxy);

  const SimOutput c = simulate(pendulum(1.0, 0.3, 60.0, 2.0));
  const SimOutput d = simulate(pendulum(1.0, 0.3, 60.0, 2.0));
  CHECK(c.motion.positions == d.motion.positions);
}

TEST_CASE("corpus: manifest entries, determinism and self-consistency") {
  const std::string dir1 = (fs::temp_directory_path() / "biomech_corpus_a").string();
  const std::string dir2 = (fs::temp_directory_path() / "biomech_corpus_b").string();
  fs::remove_all(dir1);
  fs::remove_all(dir2);

  const std::vector<SimScenario> scenarios = default_corpus_scenarios(7, 3);
  const CorpusManifest m1 = make_corpus(scenarios, dir1);
  REQUIRE(m1.clips.size() == 3);

  // same scenarios, byte-identical corpus
  make_corpus(scenarios, dir2);
  for (const auto& name :
       {"manifest.json", "clip_000_motion.json", "clip_001_accel.json", "clip_002_torque.json"}) {
    CHECK(read_text_file((fs::path(dir1) / name).string()) ==
          read_text_file((fs::path(dir2) / name).string()));
  }

  // manifest metrics equal recomputation from the stored files
  const CorpusManifest loaded = load_manifest((fs::path(dir1) / "manifest.json").string());
  for (const CorpusEntry& e : loaded.clips) {
    const MotionSequence seq = load_motion((fs::path(dir1) / e.motion_path).string());
    const Skeleton skel = load_skeleton((fs::path(dir1) / e.skeleton_path).string());
    const MetricReport r = full_report(seq, skel, MetricConfig{});
    // manifest values carry the canonical 9-significant-digit precision
    CHECK(r.vc == doctest::Approx(e.metrics.vc).epsilon(1e-8));
    CHECK(r.speed_mps == doctest::Approx(e.metrics.speed_mps).epsilon(1e-8));
    CHECK(r.foot_skating == doctest::Approx(e.metrics.foot_skating).epsilon(1e-8));
  }

  // default corpus scenarios draw speeds deterministically
  const std::vector<SimScenario> again = default_corpus_scenarios(7, 3);
  for (int i = 0; i < 3; ++i) CHECK(scenarios[i].gait_speed == again[i].gait_speed);
}

TEST_CASE("scenario JSON round trip") {
  SimScenario s = pendulum(0.9, 0.2, 60.0, 5.0);
  s.initial_rates = {0.5};
  s.seed = 99;
  const std::string text = scenario_to_json(s);
  const SimScenario back = scenario_from_json_text(text, "test");
  CHECK(back.kind == s.kind);
  CHECK(back.link_lengths == s.link_lengths);
  CHECK(back.initial_angles == s.initial_angles);
  CHECK(back.initial_rates == s.initial_rates);
  CHECK(back.fps == s.fps);
  CHECK(back.seed == s.seed);
}

TEST_CASE("scenario validation rejects bad parameters") {
  SimScenario s = pendulum(1.0, 0.1, 30.0, 0.1);  // only 3 frames
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  SimScenario s2 = pendulum(-1.0, 0.1, 30.0, 2.0);
  CHECK_THROWS_AS(s2.validate(), std::invalid_argument);
  SimScenario s3 = gait(1.0);
  s3.gait_cadence = 0.0;
  CHECK_THROWS_AS(s3.validate(), std::invalid_argument);
}
