#include "biomech/motion.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <stdexcept>

namespace biomech {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void require_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw std::invalid_argument(std::string("non-finite ") + what);
}

Eigen::Matrix3d axis_angle_matrix(const Eigen::Vector3d& r) {
  const double angle = r.norm();
  if (angle == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, r / angle).toRotationMatrix();
}

}  // namespace

void MotionSequence::validate() const {
  if (frames() < 1) throw std::invalid_argument("motion must have at least one frame");
  if (fps <= 0.0) throw std::invalid_argument("fps must be positive");
  if (positions.cols() % 3 != 0) throw std::invalid_argument("position columns must be 3*J");
  require_finite(positions, "position");
  if (!joint_names.empty() && static_cast<int>(joint_names.size()) != joint_count())
    throw std::invalid_argument("joint name count does not match positions");
}

void RotationalPoseSequence::canonicalize() {
  for (int t = 0; t < frames(); ++t) {
    for (int j = 0; j < joint_count(); ++j) {
      Eigen::Vector3d r = rotation(t, j);
      const double angle = r.norm();
      if (angle >= kTwoPi) {
        const double wrapped = angle - kTwoPi * std::floor(angle / kTwoPi);
        joint_rotations.block<1, 3>(t, 3 * j) =
            (wrapped == 0.0 ? Eigen::Vector3d::Zero().eval()
                            : Eigen::Vector3d(r * (wrapped / angle)))
                .transpose();
      }
    }
  }
}

void RotationalPoseSequence::validate() const {
  if (frames() < 1) throw std::invalid_argument("pose must have at least one frame");
  if (fps <= 0.0) throw std::invalid_argument("fps must be positive");
  if (joint_rotations.rows() != root_translation.rows())
    throw std::invalid_argument("rotation and translation frame counts differ");
  if (joint_rotations.cols() % 3 != 0 || root_translation.cols() != 3)
    throw std::invalid_argument("pose arrays have wrong shape");
  require_finite(root_translation, "root translation");
  require_finite(joint_rotations, "joint rotation");
  for (int t = 0; t < frames(); ++t)
    for (int j = 0; j < joint_count(); ++j)
      if (rotation(t, j).norm() >= kTwoPi)
        throw std::invalid_argument("rotation vector norm exceeds 2*pi; canonicalize first");
}

MotionSequence forward_kinematics(const RotationalPoseSequence& pose, const Skeleton& skel) {
  skel.validate();
  pose.validate();
  const int J = skel.joint_count();
  if (pose.joint_count() != J)
    throw std::invalid_argument("pose has " + std::to_string(pose.joint_count()) +
                                " joints, skeleton has " + std::to_string(J));
  const int T = pose.frames();

  MotionSequence out;
  out.fps = pose.fps;
  out.joint_names.reserve(J);
  for (const Joint& j : skel.joints) out.joint_names.push_back(j.name);
  out.positions.resize(T, 3 * J);

  std::vector<Eigen::Matrix3d> world_rot(J);
  std::vector<Eigen::Vector3d> world_pos(J);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < J; ++j) {
      const Eigen::Matrix3d local = axis_angle_matrix(pose.rotation(t, j));
      if (!skel.joints[j].parent) {
        world_pos[j] = pose.root_translation.row(t).transpose() + skel.joints[j].offset;
        world_rot[j] = local;
      } else {
        const int p = *skel.joints[j].parent;
        world_pos[j] = world_pos[p] + world_rot[p] * skel.joints[j].offset;
        world_rot[j] = world_rot[p] * local;
      }
      out.positions.block<1, 3>(t, 3 * j) = world_pos[j].transpose();
    }
  }
  return out;
}

}  // namespace biomech
