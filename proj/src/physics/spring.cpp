#include "rigkit/physics/spring.hpp"

namespace rigkit {

using simcore::DoubleAlgebra;
using simcore::GQuat;
using simcore::SpringLayout;

Vec3 spring_step(const SpringState& state, const SpringParams& params, const Vec3& parent_head_next, const ParentRotations& rot, double dt) {
  if (dt <= 0.0) throw RangeError("spring_step: dt must be positive");
  const Quat effective = rot.rot_head.conjugate() * rot.rot_tail;
  const Vec3 stiffness_dir = effective * state.rest_dir;
  Vec3 fallback = state.current_tail - parent_head_next;
  const double fn = fallback.norm();
  fallback = fn > 1e-12 ? Vec3(fallback / fn) : state.rest_dir;
  return simcore::spring_step_core<DoubleAlgebra>(state.current_tail, state.previous_tail, parent_head_next, stiffness_dir, params.gravity_dir, params.drag, params.stiffness, params.gravity, state.rest_length, dt, fallback);
}

SpringLayout spring_layout(const SkeletonTree& tree) {
  SpringLayout layout;
  std::vector<int> entry_of(static_cast<size_t>(tree.joint_count()), -1);
  for (int i = 0; i < tree.joint_count(); ++i) {
    const auto& j = tree.joints[static_cast<size_t>(i)];
    if (j.type.kind != BoneKind::Spring) continue;
    entry_of[static_cast<size_t>(i)] = layout.count();
    layout.joint.push_back(i);
    const int parent = j.parent ? *j.parent : -1;
    layout.parent_joint.push_back(parent);
    layout.parent_entry.push_back(parent >= 0 ? entry_of[static_cast<size_t>(parent)] : -1);
    double len = tree.bone_length(i);
    if (len <= 0.0) throw RangeError("spring joint '" + j.name + "' has zero rest length");
    layout.rest_len.push_back(len);
    layout.rest_dir.push_back((j.tail - j.head) / len);
  }
  return layout;
}

std::vector<SpringState> init_spring_states(const SkeletonTree& tree, const SpringLayout& layout) {
  std::vector<SpringState> states;
  states.reserve(static_cast<size_t>(layout.count()));
  for (int e = 0; e < layout.count(); ++e) {
    const auto& j = tree.joints[static_cast<size_t>(layout.joint[static_cast<size_t>(e)])];
    SpringState s;
    s.current_tail = j.tail;
    s.previous_tail = j.tail;
    s.rest_length = layout.rest_len[static_cast<size_t>(e)];
    s.rest_dir = layout.rest_dir[static_cast<size_t>(e)];
    states.push_back(s);
  }
  return states;
}

std::vector<SpringParams> layout_params(const SkeletonTree& tree, const SpringLayout& layout) {
  std::vector<SpringParams> params;
  params.reserve(static_cast<size_t>(layout.count()));
  for (int e = 0; e < layout.count(); ++e) {
    const auto& j = tree.joints[static_cast<size_t>(layout.joint[static_cast<size_t>(e)])];
    params.push_back(j.spring.value_or(SpringParams{}));
  }
  return params;
}

std::vector<SimFrame> simulate(const SkeletonTree& tree, const std::vector<Pose>& poses, const std::vector<SpringParams>& params, std::vector<SpringState>& states, double dt) {
  if (dt <= 0.0) throw RangeError("simulate: dt must be positive");
  const SpringLayout layout = spring_layout(tree);
  if (static_cast<int>(params.size()) != layout.count() || static_cast<int>(states.size()) != layout.count()) {
    throw RangeError("simulate: params/states must match the spring layout");
  }

  simcore::SpringChainState<DoubleAlgebra> chain;
  for (const auto& s : states) {
    chain.cur.push_back(s.current_tail);
    chain.prev.push_back(s.previous_tail);
  }
  std::vector<double> eta_d, eta_s, eta_g;
  std::vector<Eigen::Vector3d> gdir;
  for (const auto& p : params) {
    eta_d.push_back(p.drag);
    eta_s.push_back(p.stiffness);
    eta_g.push_back(p.gravity);
    gdir.push_back(p.gravity_dir);
  }

  std::vector<SimFrame> frames;
  frames.reserve(poses.size());
  for (const auto& pose : poses) {
    FkResult fk = fk_pose(tree, pose);
    std::vector<Vec3> anchor_pos(static_cast<size_t>(layout.count()), Vec3::Zero());
    std::vector<GQuat<DoubleAlgebra>> anchor_rot(static_cast<size_t>(layout.count()), GQuat<DoubleAlgebra>::identity());
    for (int e = 0; e < layout.count(); ++e) {
      if (layout.parent_entry[static_cast<size_t>(e)] >= 0) continue;
      const int pj = layout.parent_joint[static_cast<size_t>(e)];
      if (pj < 0) throw RangeError("spring joint cannot be the skeleton root");
      anchor_pos[static_cast<size_t>(e)] = fk.tail[static_cast<size_t>(pj)];
      anchor_rot[static_cast<size_t>(e)] = GQuat<DoubleAlgebra>::from_eigen(fk.world_rot[static_cast<size_t>(pj)]);
    }
    auto res = simcore::spring_frame_update<DoubleAlgebra>(layout, anchor_pos, anchor_rot, eta_d, eta_s, eta_g, gdir, dt, chain);

    SimFrame frame;
    frame.head = fk.head;
    frame.tail = fk.tail;
    frame.world_rot = fk.world_rot;
    for (int e = 0; e < layout.count(); ++e) {
      const size_t j = static_cast<size_t>(layout.joint[static_cast<size_t>(e)]);
      frame.head[j] = res.head[static_cast<size_t>(e)];
      frame.tail[j] = res.tail[static_cast<size_t>(e)];
      const auto& q = res.world_rot[static_cast<size_t>(e)];
      frame.world_rot[j] = Quat(q.w, q.v.x(), q.v.y(), q.v.z());
    }
    frames.push_back(std::move(frame));
  }

  for (int e = 0; e < layout.count(); ++e) {
    states[static_cast<size_t>(e)].current_tail = chain.cur[static_cast<size_t>(e)];
    states[static_cast<size_t>(e)].previous_tail = chain.prev[static_cast<size_t>(e)];
  }
  return frames;
}

std::vector<Eigen::Affine3d> frame_transforms(const SkeletonTree& tree, const SimFrame& frame) {
  std::vector<Eigen::Affine3d> out;
  out.reserve(static_cast<size_t>(tree.joint_count()));
  for (int i = 0; i < tree.joint_count(); ++i) {
    out.push_back(Eigen::Translation3d(frame.head[static_cast<size_t>(i)]) * frame.world_rot[static_cast<size_t>(i)] * Eigen::Translation3d(-tree.joints[static_cast<size_t>(i)].head));
  }
  return out;
}

}  // namespace rigkit
