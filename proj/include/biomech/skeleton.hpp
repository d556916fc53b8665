#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace biomech {

struct Joint {
  std::string name;
  std::optional<int> parent;  // none for the root
  Eigen::Vector3d offset;     // meters, in parent frame
};

// Joint hierarchy. Joints are topologically sorted (parent index < own
// index) with exactly one root. Y is up, the ground plane is y = 0.
struct Skeleton {
  std::vector<Joint> joints;
  int foot_left = -1;
  int foot_right = -1;
  std::vector<int> lowest_candidates;  // joints queried for the lowest point

  int joint_count() const { return static_cast<int>(joints.size()); }
  int index_of(const std::string& name) const;

  // throws std::invalid_argument on ordering/index/finiteness violations
  void validate() const;
};

}  // namespace biomech
