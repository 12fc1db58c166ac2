#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "rigkit/core/types.hpp"

namespace rigkit {

using Quat = Eigen::Quaterniond;

/// Local parent-relative rotations keyed by joint name, plus the root
/// translation. fk_pose requires an entry for every non-spring joint.
struct Pose {
  Vec3 root_translation = Vec3::Zero();
  std::map<std::string, Quat> rotations;

  static Pose identity(const SkeletonTree& tree);
};

struct MotionFrame {
  Vec3 root_translation = Vec3::Zero();
  std::map<std::string, Quat> rotations;  // may cover only a joint subset
};

struct Motion {
  double fps = 30.0;
  std::vector<MotionFrame> frames;
};

/// Expands a motion frame into a full pose for `tree`: joints named by the
/// frame take its rotation, every other non-spring joint gets identity.
/// Throws RangeError naming the first frame joint missing from the tree.
Pose retarget_frame(const SkeletonTree& tree, const MotionFrame& frame);

std::string motion_to_json(const Motion& motion);
Motion motion_from_json(const std::string& text);
Motion load_motion(const std::string& path);
void save_motion(const Motion& motion, const std::string& path);

}  // namespace rigkit
