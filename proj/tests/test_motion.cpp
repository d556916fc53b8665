#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "biomech/motion.hpp"
#include "biomech/motion_io.hpp"
#include "biomech/rng.hpp"

using namespace biomech;

namespace {

namespace fs = std::filesystem;

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("biomech_motion_" + name)).string();
}

Skeleton chain_skeleton(const std::vector<Eigen::Vector3d>& offsets) {
  Skeleton s;
  for (size_t i = 0; i < offsets.size(); ++i) {
    Joint j;
    j.name = "j" + std::to_string(i);
    if (i > 0) j.parent = static_cast<int>(i) - 1;
    j.offset = offsets[i];
    s.joints.push_back(j);
  }
  s.foot_left = static_cast<int>(offsets.size()) - 1;
  s.foot_right = static_cast<int>(offsets.size()) - 1;
  s.lowest_candidates = {0};
  return s;
}

RotationalPoseSequence zero_pose(int frames, int joints, double fps) {
  RotationalPoseSequence p;
  p.fps = fps;
  p.root_translation = Eigen::MatrixXd::Zero(frames, 3);
  p.joint_rotations = Eigen::MatrixXd::Zero(frames, 3 * joints);
  return p;
}

// independent Rodrigues rotation, used only by the transform-chain oracle
Eigen::Matrix3d rodrigues(const Eigen::Vector3d& r) {
  const double angle = r.norm();
  if (angle == 0.0) return Eigen::Matrix3d::Identity();
  const Eigen::Vector3d a = r / angle;
  Eigen::Matrix3d k;
  k << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
  return Eigen::Matrix3d::Identity() + std::sin(angle) * k +
         (1.0 - std::cos(angle)) * (k * k);
}

}  // namespace

TEST_CASE("fk: identity rotations give cumulative offsets") {
  const Skeleton skel = chain_skeleton({{0, 0, 0}, {0.5, 0, 0}, {0.25, 0.1, 0}});
  const MotionSequence out = forward_kinematics(zero_pose(2, 3, 30.0), skel);
  CHECK(out.fps == 30.0);
  CHECK(out.joint(0, 0) == Eigen::Vector3d(0, 0, 0));
  CHECK(out.joint(0, 1) == Eigen::Vector3d(0.5, 0, 0));
  CHECK(out.joint(1, 2) == Eigen::Vector3d(0.75, 0.1, 0));
}

TEST_CASE("fk: quarter turn about z sends (L,0,0) to (0,L,0)") {
  const double L = 0.7;
  const Skeleton skel = chain_skeleton({{0, 0, 0}, {L, 0, 0}});
  RotationalPoseSequence pose = zero_pose(1, 2, 20.0);
  pose.joint_rotations(0, 2) = M_PI / 2.0;  // root rotation about +z
  const MotionSequence out = forward_kinematics(pose, skel);
  CHECK(out.joint(0, 1).x() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.joint(0, 1).y() == doctest::Approx(L).epsilon(1e-12));
  CHECK(out.joint(0, 1).z() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("fk: random tree matches the homogeneous transform-chain oracle") {
  Skeleton skel;
  skel.joints.push_back({"root", std::nullopt, {0, 0, 0}});
  skel.joints.push_back({"a", 0, {0.3, 0.1, 0.0}});
  skel.joints.push_back({"b", 0, {-0.2, 0.4, 0.1}});
  skel.joints.push_back({"c", 1, {0.0, -0.5, 0.2}});
  skel.joints.push_back({"d", 1, {0.1, 0.1, 0.1}});
  skel.foot_left = 3;
  skel.foot_right = 4;
  skel.lowest_candidates = {3, 4};

  Rng rng(42);
  const int T = 4, J = 5;
  RotationalPoseSequence pose = zero_pose(T, J, 25.0);
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < 3; ++c) pose.root_translation(t, c) = rng.uniform(-1, 1);
    for (int j = 0; j < 3 * J; ++j) pose.joint_rotations(t, j) = rng.uniform(-1.5, 1.5);
  }
  const MotionSequence out = forward_kinematics(pose, skel);

  for (int t = 0; t < T; ++t) {
    std::vector<Eigen::Matrix4d> world(J);
    for (int j = 0; j < J; ++j) {
      Eigen::Matrix4d local = Eigen::Matrix4d::Identity();
      local.block<3, 3>(0, 0) = rodrigues(pose.rotation(t, j));
      local.block<3, 1>(0, 3) = skel.joints[j].offset;
      if (!skel.joints[j].parent) {
        Eigen::Matrix4d root_shift = Eigen::Matrix4d::Identity();
        root_shift.block<3, 1>(0, 3) = pose.root_translation.row(t).transpose();
        world[j] = root_shift * local;
      } else {
        world[j] = world[*skel.joints[j].parent] * local;
      }
      const Eigen::Vector3d expected = world[j].block<3, 1>(0, 3);
      CHECK((out.joint(t, j) - expected).norm() < 1e-12);
    }
  }
}

TEST_CASE("fk: rigidity - parent distances equal offset norms") {
  Skeleton skel = chain_skeleton({{0, 0, 0}, {0.4, 0.2, 0.0}, {0.0, 0.3, 0.3}, {0.2, 0, 0.6}});
  Rng rng(7);
  const int T = 8, J = 4;
  RotationalPoseSequence pose = zero_pose(T, J, 30.0);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < 3 * J; ++j) pose.joint_rotations(t, j) = rng.uniform(-2.0, 2.0);
  const MotionSequence out = forward_kinematics(pose, skel);
  for (int t = 0; t < T; ++t)
    for (int j = 1; j < J; ++j) {
      const double d = (out.joint(t, j) - out.joint(t, *skel.joints[j].parent)).norm();
      const double L = skel.joints[j].offset.norm();
      CHECK(std::abs(d - L) <= 1e-12 * std::max(1.0, L));
    }
}

TEST_CASE("fk: zero pose equals translated rest pose exactly") {
  const Skeleton skel = chain_skeleton({{0, 0.9, 0}, {0.1, -0.4, 0}, {0.0, -0.5, 0.05}});
  RotationalPoseSequence pose = zero_pose(3, 3, 30.0);
  pose.root_translation.col(0).setConstant(1.25);
  const MotionSequence out = forward_kinematics(pose, skel);
  Eigen::Vector3d acc(1.25, 0, 0);
  for (int j = 0; j < 3; ++j) {
    acc += skel.joints[j].offset;
    CHECK(out.joint(2, j) == acc);
  }
}

TEST_CASE("fk: joint-count mismatch and non-finite inputs are rejected") {
  const Skeleton skel = chain_skeleton({{0, 0, 0}, {1, 0, 0}});
  CHECK_THROWS_AS(forward_kinematics(zero_pose(2, 3, 30.0), skel), std::invalid_argument);
  RotationalPoseSequence pose = zero_pose(2, 2, 30.0);
  pose.joint_rotations(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(forward_kinematics(pose, skel), std::invalid_argument);
}

TEST_CASE("pose canonicalization wraps rotation norms below 2*pi") {
  RotationalPoseSequence pose = zero_pose(1, 1, 30.0);
  pose.joint_rotations(0, 0) = 7.0;  // |r| > 2*pi
  pose.canonicalize();
  CHECK(pose.rotation(0, 0).norm() < 2.0 * M_PI);
  CHECK(pose.rotation(0, 0).x() == doctest::Approx(7.0 - 2.0 * M_PI));
  pose.validate();
}

TEST_CASE("motion file: minimal dims load") {
  const std::string path = temp_path("minimal.json");
  write_text_file(path,
                  R"({"fps":20,"joints":["a"],"frames":[[[0.1,0.2,0.3]],[[0.4,0.5,0.6]]]})");
  const MotionSequence seq = load_motion(path);
  CHECK(seq.frames() == 2);
  CHECK(seq.joint_count() == 1);
  CHECK(seq.fps == 20.0);
  CHECK(seq.joint(1, 0).z() == 0.6);
}

TEST_CASE("motion file: save/load round trip is byte-identical and lossless") {
  MotionSequence seq;
  seq.fps = 60.0;
  seq.joint_names = {"a", "b"};
  Rng rng(3);
  seq.positions.resize(5, 6);
  for (int t = 0; t < 5; ++t)
    for (int c = 0; c < 6; ++c) seq.positions(t, c) = rng.uniform(-800.0, 800.0);

  const std::string p1 = temp_path("rt1.json");
  const std::string p2 = temp_path("rt2.json");
  save_motion(seq, p1);
  save_motion(seq, p1);  // overwrite; determinism below compares fresh saves
  const MotionSequence loaded = load_motion(p1);
  save_motion(loaded, p2);
  CHECK(read_text_file(p1) == read_text_file(p2));

  // load . save is the identity on file-borne values
  const MotionSequence reloaded = load_motion(p2);
  CHECK(reloaded.positions == loaded.positions);
  CHECK(reloaded.fps == loaded.fps);
}

TEST_CASE("motion file: two saves of one sequence are byte-identical") {
  MotionSequence seq;
  seq.fps = 20.0;
  seq.joint_names = {"a"};
  seq.positions.resize(1, 3);
  seq.positions << 0.25, 1.0 / 3.0, -0.125;
  const std::string p1 = temp_path("det1.json");
  const std::string p2 = temp_path("det2.json");
  save_motion(seq, p1);
  save_motion(seq, p2);
  CHECK(read_text_file(p1) == read_text_file(p2));
}

TEST_CASE("motion file: non-finite entries are reported with frame and joint") {
  const std::string path = temp_path("nan.json");
  // null is the JSON stand-in lenient writers use for NaN
  write_text_file(path, R"({"fps":20,"joints":["a","b"],"frames":[[[0,0,0],[0,0,0]],[[0,0,0],[1,null,2]]]})");
  bool threw = false;
  try {
    load_motion(path);
  } catch (const std::exception& e) {
    threw = true;
    const std::string msg = e.what();
    CHECK(msg.find("frame 1") != std::string::npos);
    CHECK(msg.find("joint 1") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("motion file: fps <= 0 and malformed schema are rejected") {
  const std::string path = temp_path("badfps.json");
  write_text_file(path, R"({"fps":0,"joints":["a"],"frames":[[[0,0,0]]]})");
  CHECK_THROWS(load_motion(path));
  write_text_file(path, R"({"joints":["a"],"frames":[[[0,0,0]]]})");
  CHECK_THROWS(load_motion(path));
  write_text_file(path, "not json at all");
  CHECK_THROWS(load_motion(path));
}

TEST_CASE("skeleton file round trip and validation") {
  Skeleton s;
  s.joints.push_back({"root", std::nullopt, {0, 1, 0}});
  s.joints.push_back({"foot_l", 0, {0.1, -1, 0}});
  s.joints.push_back({"foot_r", 0, {-0.1, -1, 0}});
  s.foot_left = 1;
  s.foot_right = 2;
  s.lowest_candidates = {1, 2};
  const std::string path = temp_path("skel.json");
  save_skeleton(s, path);
  const Skeleton loaded = load_skeleton(path);
  CHECK(loaded.joint_count() == 3);
  CHECK(loaded.joints[1].parent == 0);
  CHECK(loaded.foot_right == 2);
  CHECK(loaded.lowest_candidates == std::vector<int>{1, 2});

  Skeleton bad = s;
  bad.joints[1].parent = 2;  // not topologically sorted
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("pose file round trip") {
  RotationalPoseSequence pose = zero_pose(3, 2, 24.0);
  pose.root_translation(1, 0) = 0.5;
  pose.joint_rotations(2, 4) = 1.25;
  const std::string path = temp_path("pose.json");
  save_pose(pose, path);
  const RotationalPoseSequence loaded = load_pose(path);
  CHECK(loaded.fps == 24.0);
  CHECK(loaded.root_translation == pose.root_translation);
  CHECK(loaded.joint_rotations == pose.joint_rotations);
}
