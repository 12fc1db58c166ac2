#include "rigkit/physics/fk.hpp"

namespace rigkit {

namespace {

Quat local_rotation(const SkeletonTree& tree, const Pose& pose, int i) {
  const auto& j = tree.joints[static_cast<size_t>(i)];
  auto it = pose.rotations.find(j.name);
  if (it == pose.rotations.end()) {
    if (j.type.kind == BoneKind::Spring) return Quat::Identity();
    throw RangeError("pose is missing non-spring joint '" + j.name + "'");
  }
  return it->second.normalized();
}

}  // namespace

FkResult fk_pose(const SkeletonTree& tree, const Pose& pose) {
  const int n = tree.joint_count();
  FkResult out;
  out.head.resize(static_cast<size_t>(n));
  out.tail.resize(static_cast<size_t>(n));
  out.world_rot.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& j = tree.joints[static_cast<size_t>(i)];
    const Quat local = local_rotation(tree, pose, i);
    const Vec3 rest_offset = j.tail - j.head;
    if (!j.parent) {
      out.world_rot[static_cast<size_t>(i)] = local;
      out.head[static_cast<size_t>(i)] = j.head + pose.root_translation;
    } else {
      const size_t p = static_cast<size_t>(*j.parent);
      out.world_rot[static_cast<size_t>(i)] = out.world_rot[p] * local;
      out.head[static_cast<size_t>(i)] = out.tail[p];
    }
    out.tail[static_cast<size_t>(i)] = out.head[static_cast<size_t>(i)] + out.world_rot[static_cast<size_t>(i)] * rest_offset;
  }
  return out;
}

SkeletonTree pose_tree(const SkeletonTree& tree, const Pose& pose) {
  FkResult fk = fk_pose(tree, pose);
  SkeletonTree out = tree;
  for (int i = 0; i < tree.joint_count(); ++i) {
    out.joints[static_cast<size_t>(i)].head = fk.head[static_cast<size_t>(i)];
    out.joints[static_cast<size_t>(i)].tail = fk.tail[static_cast<size_t>(i)];
  }
  return out;
}

Pose compose_poses(const SkeletonTree& tree, const Pose& first, const Pose& second) {
  FkResult fk1 = fk_pose(tree, first);
  Pose out;
  out.root_translation = first.root_translation + second.root_translation;
  for (int i = 0; i < tree.joint_count(); ++i) {
    const auto& j = tree.joints[static_cast<size_t>(i)];
    if (j.type.kind == BoneKind::Spring) continue;
    auto q1 = first.rotations.at(j.name);
    auto q2 = second.rotations.at(j.name);
    if (!j.parent) {
      out.rotations[j.name] = (q2 * q1).normalized();
    } else {
      // The second pose acts on the posed skeleton; expressed in rest
      // coordinates its local rotation conjugates by the parent's world
      // rotation under the first pose.
      const Quat wp = fk1.world_rot[static_cast<size_t>(*j.parent)];
      out.rotations[j.name] = (wp.conjugate() * q2 * wp * q1).normalized();
    }
  }
  return out;
}

std::vector<Eigen::Affine3d> rest_to_posed_transforms(const SkeletonTree& tree, const FkResult& fk) {
  std::vector<Eigen::Affine3d> out;
  out.reserve(static_cast<size_t>(tree.joint_count()));
  for (int i = 0; i < tree.joint_count(); ++i) {
    Eigen::Affine3d m = Eigen::Translation3d(fk.head[static_cast<size_t>(i)]) * fk.world_rot[static_cast<size_t>(i)] * Eigen::Translation3d(-tree.joints[static_cast<size_t>(i)].head);
    out.push_back(m);
  }
  return out;
}

}  // namespace rigkit
