#pragma once

#include "rigkit/core/types.hpp"
#include "rigkit/physics/pose.hpp"

namespace rigkit {

/// Symmetric chamfer distance between joint-tail point sets.
double chamfer_j2j(const SkeletonTree& pred, const SkeletonTree& gt);

/// Joints against closest points on the other rig's bone segments.
double chamfer_j2b(const SkeletonTree& pred, const SkeletonTree& gt);

/// Densely sampled bone segments against each other.
double chamfer_b2b(const SkeletonTree& pred, const SkeletonTree& gt, int samples_per_bone = 64);

/// Mean over vertices of the L1 row difference.
double skin_l1(const SkinWeights& pred, const SkinWeights& gt);

/// Mean squared vertex error of the motion-deformed meshes (LBS plus
/// spring simulation where spring parameters are present), averaged over
/// all frames of all motions. Both rigs must share the mesh vertex count;
/// motions must retarget onto both skeletons.
double motion_l2(const RigAsset& pred, const RigAsset& gt, const std::vector<Motion>& motions, double dt = 1.0 / 30.0);

}  // namespace rigkit
