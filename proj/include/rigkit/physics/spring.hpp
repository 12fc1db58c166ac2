#pragma once

#include <Eigen/Geometry>

#include "rigkit/physics/fk.hpp"
#include "rigkit/physics/sim_core.hpp"

namespace rigkit {

/// Verlet state of one spring bone.
struct SpringState {
  Vec3 current_tail = Vec3::Zero();
  Vec3 previous_tail = Vec3::Zero();
  double rest_length = 1.0;
  Vec3 rest_dir = Vec3(0, 0, -1);  // unit rest bone direction, also the last-resort fallback
};

/// Parent world rotations entering the stiffness term: `rot_head` at rest,
/// `rot_tail` in the current frame. The stiffness target direction is
/// (rot_head^-1 * rot_tail) applied to the bone's rest direction.
struct ParentRotations {
  Quat rot_head = Quat::Identity();
  Quat rot_tail = Quat::Identity();
};

/// One Verlet update: returns the new tail with |tail - head| equal to the
/// rest length exactly. A vanishing displacement preserves the previous
/// bone direction instead of erroring.
Vec3 spring_step(const SpringState& state, const SpringParams& params, const Vec3& parent_head_next, const ParentRotations& rot, double dt);

/// Spring joints of the tree in simulation order (parents first).
simcore::SpringLayout spring_layout(const SkeletonTree& tree);

/// Rest states (previous == current == rest tail) aligned with spring_layout.
std::vector<SpringState> init_spring_states(const SkeletonTree& tree, const simcore::SpringLayout& layout);

/// Spring parameters per layout entry, from the joint records; joints
/// without parameters get all-zero coefficients.
std::vector<SpringParams> layout_params(const SkeletonTree& tree, const simcore::SpringLayout& layout);

struct SimFrame {
  std::vector<Vec3> head;
  std::vector<Vec3> tail;
  std::vector<Quat> world_rot;
};

/// Full simulation: per frame, FK over non-spring joints, then the spring
/// chains in parent-first order. Returns world positions for every joint
/// per frame. `states` must be initialized at rest and is advanced in place.
std::vector<SimFrame> simulate(const SkeletonTree& tree, const std::vector<Pose>& poses, const std::vector<SpringParams>& params, std::vector<SpringState>& states, double dt);

/// Rest-to-posed rigid transforms for one simulated frame.
std::vector<Eigen::Affine3d> frame_transforms(const SkeletonTree& tree, const SimFrame& frame);

inline constexpr double kDefaultFrameDt = 1.0 / 30.0;

}  // namespace rigkit
