#include "rigkit/deform/lbs.hpp"

namespace rigkit {

std::vector<Vec3> lbs_deform(const Mesh& mesh, const SkeletonTree& tree, const SkinWeights& weights, const std::vector<Eigen::Affine3d>& posed_transforms) {
  if (weights.joint_count != tree.joint_count() || static_cast<int>(posed_transforms.size()) != tree.joint_count()) {
    throw RangeError("lbs_deform: transform/weight shape does not match the skeleton");
  }
  if (weights.vertex_count() != mesh.vertex_count()) {
    throw RangeError("lbs_deform: weight rows do not match the mesh");
  }
  std::vector<Vec3> out(mesh.vertices.size(), Vec3::Zero());
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const Vec3& rest = mesh.vertices[static_cast<size_t>(v)];
    Vec3 acc = Vec3::Zero();
    for (const auto& [j, w] : weights.rows[static_cast<size_t>(v)]) {
      acc += w * (posed_transforms[static_cast<size_t>(j)] * rest);
    }
    out[static_cast<size_t>(v)] = acc;
  }
  return out;
}

}  // namespace rigkit
