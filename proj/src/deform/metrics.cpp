#include "rigkit/deform/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rigkit/deform/lbs.hpp"
#include "rigkit/physics/spring.hpp"

namespace rigkit {

namespace {

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = (p - a).dot(ab) / len2;
  if (t <= 0.0) return (p - a).norm();
  if (t >= 1.0) return (p - b).norm();  // endpoint form is exact for p == b
  return (p - (a + t * ab)).norm();
}

std::vector<Vec3> tails(const SkeletonTree& t) {
  std::vector<Vec3> out;
  out.reserve(t.joints.size());
  for (const auto& j : t.joints) out.push_back(j.tail);
  return out;
}

double directed_points(const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
  double sum = 0.0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) best = std::min(best, (p - q).norm());
    sum += best;
  }
  return sum / static_cast<double>(from.size());
}

double directed_points_to_segments(const std::vector<Vec3>& from, const SkeletonTree& to) {
  double sum = 0.0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& j : to.joints) best = std::min(best, point_segment_distance(p, j.head, j.tail));
    sum += best;
  }
  return sum / static_cast<double>(from.size());
}

std::vector<Vec3> sample_segments(const SkeletonTree& t, int per_bone) {
  std::vector<Vec3> out;
  out.reserve(t.joints.size() * static_cast<size_t>(per_bone));
  for (const auto& j : t.joints) {
    for (int s = 0; s < per_bone; ++s) {
      const double u = (s + 0.5) / per_bone;
      out.push_back(j.head + u * (j.tail - j.head));
    }
  }
  return out;
}

void require_nonempty(const SkeletonTree& pred, const SkeletonTree& gt, const char* what) {
  if (pred.joints.empty() || gt.joints.empty()) throw RangeError(std::string(what) + ": empty skeleton");
}

}  // namespace

double chamfer_j2j(const SkeletonTree& pred, const SkeletonTree& gt) {
  require_nonempty(pred, gt, "chamfer_j2j");
  const auto p = tails(pred);
  const auto g = tails(gt);
  return 0.5 * (directed_points(p, g) + directed_points(g, p));
}

double chamfer_j2b(const SkeletonTree& pred, const SkeletonTree& gt) {
  require_nonempty(pred, gt, "chamfer_j2b");
  return 0.5 * (directed_points_to_segments(tails(pred), gt) + directed_points_to_segments(tails(gt), pred));
}

double chamfer_b2b(const SkeletonTree& pred, const SkeletonTree& gt, int samples_per_bone) {
  require_nonempty(pred, gt, "chamfer_b2b");
  const auto p = sample_segments(pred, samples_per_bone);
  const auto g = sample_segments(gt, samples_per_bone);
  return 0.5 * (directed_points(p, g) + directed_points(g, p));
}

double skin_l1(const SkinWeights& pred, const SkinWeights& gt) {
  if (pred.joint_count != gt.joint_count || pred.vertex_count() != gt.vertex_count()) {
    throw RangeError("skin_l1: shape mismatch");
  }
  if (pred.vertex_count() == 0) throw RangeError("skin_l1: empty weights");
  double total = 0.0;
  for (int v = 0; v < pred.vertex_count(); ++v) {
    auto a = pred.dense_row(v);
    auto b = gt.dense_row(v);
    double row = 0.0;
    for (int j = 0; j < pred.joint_count; ++j) row += std::abs(a[static_cast<size_t>(j)] - b[static_cast<size_t>(j)]);
    total += row;
  }
  return total / static_cast<double>(pred.vertex_count());
}

double motion_l2(const RigAsset& pred, const RigAsset& gt, const std::vector<Motion>& motions, double dt) {
  if (pred.mesh.vertex_count() != gt.mesh.vertex_count()) {
    throw RangeError("motion_l2: meshes disagree on vertex count");
  }
  if (motions.empty()) throw RangeError("motion_l2: no motions");

  double total = 0.0;
  long frames_total = 0;
  for (const auto& motion : motions) {
    std::vector<Pose> pred_poses, gt_poses;
    for (const auto& frame : motion.frames) {
      pred_poses.push_back(retarget_frame(pred.skeleton, frame));
      gt_poses.push_back(retarget_frame(gt.skeleton, frame));
    }
    auto pred_layout = spring_layout(pred.skeleton);
    auto gt_layout = spring_layout(gt.skeleton);
    auto pred_states = init_spring_states(pred.skeleton, pred_layout);
    auto gt_states = init_spring_states(gt.skeleton, gt_layout);
    auto pred_frames = simulate(pred.skeleton, pred_poses, layout_params(pred.skeleton, pred_layout), pred_states, dt);
    auto gt_frames = simulate(gt.skeleton, gt_poses, layout_params(gt.skeleton, gt_layout), gt_states, dt);

    for (size_t f = 0; f < pred_frames.size(); ++f) {
      auto pv = lbs_deform(gt.mesh, pred.skeleton, pred.skin, frame_transforms(pred.skeleton, pred_frames[f]));
      auto gv = lbs_deform(gt.mesh, gt.skeleton, gt.skin, frame_transforms(gt.skeleton, gt_frames[f]));
      double err = 0.0;
      for (size_t v = 0; v < pv.size(); ++v) err += (pv[v] - gv[v]).squaredNorm();
      total += err / static_cast<double>(pv.size());
      ++frames_total;
    }
  }
  return total / static_cast<double>(frames_total);
}

}  // namespace rigkit
