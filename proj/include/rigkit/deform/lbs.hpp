#pragma once

#include <Eigen/Geometry>

#include "rigkit/core/types.hpp"

namespace rigkit {

/// Linear blend skinning: v' = sum_j W(v,j) * M_j * v with one rigid
/// rest-to-posed transform per joint. Throws RangeError on shape mismatch.
std::vector<Vec3> lbs_deform(const Mesh& mesh, const SkeletonTree& tree, const SkinWeights& weights, const std::vector<Eigen::Affine3d>& posed_transforms);

}  // namespace rigkit
