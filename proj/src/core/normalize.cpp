#include "rigkit/core/normalize.hpp"

#include <algorithm>
#include <limits>

namespace rigkit {

RigAsset transform_rig(const RigAsset& asset, const NormalizationTransform& t) {
  RigAsset out = asset;
  for (auto& v : out.mesh.vertices) v = t.apply(v);
  for (auto& j : out.skeleton.joints) {
    j.tail = t.apply(j.tail);
    j.head = t.apply(j.head);
  }
  return out;
}

std::pair<RigAsset, NormalizationTransform> normalize_rig(const RigAsset& asset) {
  if (asset.mesh.vertices.empty() && asset.skeleton.joints.empty()) {
    throw RangeError("normalize_rig: empty asset");
  }
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());
  auto grow = [&](const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  };
  for (const auto& v : asset.mesh.vertices) grow(v);
  for (const auto& j : asset.skeleton.joints) {
    grow(j.tail);
    grow(j.head);
  }
  const Vec3 extent = hi - lo;
  const double longest = extent.maxCoeff();
  if (longest <= 0.0) {
    throw RangeError("normalize_rig: degenerate bounding box");
  }
  NormalizationTransform t;
  t.scale = 2.0 / longest;
  const Vec3 center = 0.5 * (lo + hi);
  t.translation = -center * t.scale;
  return {transform_rig(asset, t), t};
}

}  // namespace rigkit
