#pragma once

#include <Eigen/Geometry>

#include "rigkit/physics/pose.hpp"

namespace rigkit {

struct FkResult {
  std::vector<Vec3> head;
  std::vector<Vec3> tail;
  std::vector<Quat> world_rot;
};

/// Hierarchical forward kinematics root-to-leaves. Local rotations are
/// parent-relative with rest joint frames world-aligned; bone rest lengths
/// are preserved exactly. Spring joints missing from the pose follow their
/// parent with identity local rotation; a missing non-spring entry throws.
FkResult fk_pose(const SkeletonTree& tree, const Pose& pose);

/// The posed skeleton as a new tree (same names, types and hierarchy).
SkeletonTree pose_tree(const SkeletonTree& tree, const Pose& pose);

/// Pose equivalent to applying `first`, then `second` on the posed
/// skeleton: fk_pose(tree, compose) == fk_pose(pose_tree(tree, first), second).
Pose compose_poses(const SkeletonTree& tree, const Pose& first, const Pose& second);

/// Rest-to-posed rigid transform per joint, for skinning.
std::vector<Eigen::Affine3d> rest_to_posed_transforms(const SkeletonTree& tree, const FkResult& fk);

}  // namespace rigkit
