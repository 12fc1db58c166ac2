#pragma once

#include "rigkit/core/types.hpp"

namespace rigkit {

/// Uniform scale + translation mapping model coordinates into [-1,1]^3.
struct NormalizationTransform {
  double scale = 1.0;
  Vec3 translation = Vec3::Zero();  // applied after scaling

  Vec3 apply(const Vec3& p) const { return p * scale + translation; }
  Vec3 invert(const Vec3& p) const { return (p - translation) / scale; }
};

/// Fits the union of mesh vertices and joint heads/tails into [-1,1]^3 with
/// a single uniform scale and translation. The longest axis spans the full
/// range; the others are centered. Throws RangeError on a degenerate
/// bounding box (zero extent in all axes).
std::pair<RigAsset, NormalizationTransform> normalize_rig(const RigAsset& asset);

/// Applies an arbitrary uniform transform to every coordinate of the asset
/// (mesh vertices, joint heads/tails). Normals are unaffected.
RigAsset transform_rig(const RigAsset& asset, const NormalizationTransform& t);

}  // namespace rigkit
