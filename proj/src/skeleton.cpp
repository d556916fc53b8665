#include "biomech/skeleton.hpp"

#include <cmath>
#include <stdexcept>

namespace biomech {

int Skeleton::index_of(const std::string& name) const {
  for (int i = 0; i < joint_count(); ++i)
    if (joints[i].name == name) return i;
  return -1;
}

void Skeleton::validate() const {
  if (joints.empty()) throw std::invalid_argument("skeleton has no joints");
  int roots = 0;
  for (int i = 0; i < joint_count(); ++i) {
    const Joint& j = joints[i];
    if (!j.parent) {
      ++roots;
    } else if (*j.parent < 0 || *j.parent >= i) {
      throw std::invalid_argument("skeleton joints are not topologically sorted at joint " +
                                  std::to_string(i));
    }
    if (!j.offset.allFinite())
      throw std::invalid_argument("non-finite offset at joint " + std::to_string(i));
  }
  if (roots != 1) throw std::invalid_argument("skeleton must have exactly one root");
  auto check_index = [&](int idx, const char* what) {
    if (idx < 0 || idx >= joint_count())
      throw std::invalid_argument(std::string(what) + " index out of range");
  };
  check_index(foot_left, "foot_left");
  check_index(foot_right, "foot_right");
  for (int c : lowest_candidates) check_index(c, "lowest_candidates");
}

}  // namespace biomech
