#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "biomech/skeleton.hpp"

namespace biomech {

// T x 3J joint positions in meters, one frame per row, channels grouped as
// (x0,y0,z0, x1,y1,z1, ...). Y-up, ground plane at y = 0. Immutable by
// convention after construction.
struct MotionSequence {
  double fps = 0.0;
  std::vector<std::string> joint_names;
  Eigen::MatrixXd positions;  // T x 3J

  int frames() const { return static_cast<int>(positions.rows()); }
  int joint_count() const { return static_cast<int>(positions.cols()) / 3; }

  Eigen::Vector3d joint(int frame, int j) const {
    return positions.block<1, 3>(frame, 3 * j).transpose();
  }
  void set_joint(int frame, int j, const Eigen::Vector3d& p) {
    positions.block<1, 3>(frame, 3 * j) = p.transpose();
  }

  void validate() const;  // T >= 1, fps > 0, finite values
};

// T x J axis-angle rotations (radians * unit axis) plus root translation.
struct RotationalPoseSequence {
  double fps = 0.0;
  Eigen::MatrixXd root_translation;  // T x 3
  Eigen::MatrixXd joint_rotations;   // T x 3J, axis-angle per joint

  int frames() const { return static_cast<int>(root_translation.rows()); }
  int joint_count() const { return static_cast<int>(joint_rotations.cols()) / 3; }

  Eigen::Vector3d rotation(int frame, int j) const {
    return joint_rotations.block<1, 3>(frame, 3 * j).transpose();
  }

  // wraps rotation-vector norms into [0, 2*pi)
  void canonicalize();
  void validate() const;
};

// Chains per-joint rotations depth-first over the tree and accumulates
// offsets; the root joint additionally carries root_translation.
MotionSequence forward_kinematics(const RotationalPoseSequence& pose, const Skeleton& skel);

}  // namespace biomech
