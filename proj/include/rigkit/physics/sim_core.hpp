#pragma once

// Algebra-generic spring-bone simulation core. The same code path runs on
// plain doubles (physics API) and on reverse-mode autodiff values (neural
// training), so the differentiability contract is checked against the very
// code that ships.

#include <cmath>
#include <vector>

#include <Eigen/Geometry>

#include "rigkit/core/types.hpp"

namespace rigkit::simcore {

// ---- double algebra ------------------------------------------------------

inline double dot(const Eigen::Vector3d& a, const Eigen::Vector3d& b) { return a.dot(b); }
inline Eigen::Vector3d cross(const Eigen::Vector3d& a, const Eigen::Vector3d& b) { return a.cross(b); }
inline double norm(const Eigen::Vector3d& a) { return a.norm(); }
inline double primal(double s) { return s; }

struct DoubleAlgebra {
  using V3 = Eigen::Vector3d;
  using S = double;
  static V3 lift_vec(const Eigen::Vector3d& v) { return v; }
  static S lift(double s) { return s; }
};

// ---- generic quaternion --------------------------------------------------

template <class A>
struct GQuat {
  typename A::S w;
  typename A::V3 v;

  static GQuat identity() { return {A::lift(1.0), A::lift_vec(Eigen::Vector3d::Zero())}; }

  static GQuat from_eigen(const Eigen::Quaterniond& q) {
    return {A::lift(q.w()), A::lift_vec(q.vec())};
  }
};

template <class A>
typename A::V3 rotate(const GQuat<A>& q, const typename A::V3& p) {
  auto t = cross(q.v, p);
  return p + (t * q.w + cross(q.v, t)) * A::lift(2.0);
}

template <class A>
GQuat<A> conjugate(const GQuat<A>& q) {
  return {q.w, q.v * A::lift(-1.0)};
}

template <class A>
GQuat<A> qmul(const GQuat<A>& a, const GQuat<A>& b) {
  return {a.w * b.w - dot(a.v, b.v), cross(a.v, b.v) + b.v * a.w + a.v * b.w};
}

/// Minimal rotation taking unit vector `a` onto unit vector `b`.
/// Antiparallel inputs fall back to a 180-degree turn about a perpendicular
/// axis chosen from the primal values.
template <class A>
GQuat<A> from_two_vectors(const typename A::V3& a, const typename A::V3& b) {
  using std::sqrt;
  auto w = A::lift(1.0) + dot(a, b);
  auto v = cross(a, b);
  auto n2 = w * w + dot(v, v);
  if (primal(n2) < 1e-24) {
    // a == -b: rotate pi about any axis orthogonal to a.
    Eigen::Vector3d ap(primal(dot(a, A::lift_vec(Eigen::Vector3d::UnitX()))),
                       primal(dot(a, A::lift_vec(Eigen::Vector3d::UnitY()))),
                       primal(dot(a, A::lift_vec(Eigen::Vector3d::UnitZ()))));
    Eigen::Vector3d axis = std::abs(ap.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    Eigen::Vector3d perp = ap.cross(axis).normalized();
    return {A::lift(0.0), A::lift_vec(perp)};
  }
  auto inv = A::lift(1.0) / sqrt(n2);
  return {w * inv, v * inv};
}

// ---- Verlet spring step ---------------------------------------------------

/// One Verlet update of a spring bone tail. Inertia uses the current and
/// previous tails damped by the drag coefficient, stiffness pulls along
/// `stiffness_dir`, gravity along `gravity_dir`; the bone length is
/// restored exactly after integration. A vanishing displacement keeps
/// `fallback_dir` instead of dividing by zero.
template <class A>
typename A::V3 spring_step_core(const typename A::V3& t_cur, const typename A::V3& t_prev,
                                const typename A::V3& h_next, const typename A::V3& stiffness_dir,
                                const typename A::V3& gravity_dir, const typename A::S& eta_d,
                                const typename A::S& eta_s, const typename A::S& eta_g,
                                double rest_len, double dt, const typename A::V3& fallback_dir) {
  auto inertia = (t_cur - t_prev) * (A::lift(1.0) - eta_d);
  auto stiff = stiffness_dir * eta_s;
  auto grav = gravity_dir * eta_g;
  auto dx = (inertia + stiff + grav) * A::lift(dt);
  auto n = norm(dx);
  if (primal(n) < 1e-12) {
    return h_next + fallback_dir * A::lift(rest_len);
  }
  return h_next + dx * (A::lift(rest_len) / n);
}

// ---- per-frame chain update -----------------------------------------------

/// Static description of the spring joints of a tree, in simulation order
/// (storage order, so parents precede children).
struct SpringLayout {
  std::vector<int> joint;         // skeleton joint index
  std::vector<int> parent_entry;  // index into this layout, -1 if the parent is not a spring joint
  std::vector<int> parent_joint;  // skeleton joint index of the parent (-1 for a spring root)
  std::vector<double> rest_len;
  std::vector<Eigen::Vector3d> rest_dir;  // unit rest bone direction (world)

  int count() const { return static_cast<int>(joint.size()); }
};

template <class A>
struct SpringChainState {
  std::vector<typename A::V3> cur;
  std::vector<typename A::V3> prev;
};

template <class A>
struct SpringFrameResult {
  std::vector<typename A::V3> head;
  std::vector<typename A::V3> tail;
  std::vector<GQuat<A>> world_rot;  // swing rotation rest -> current
};

/// Advances every spring joint by one frame, parents first. `anchor_pos`
/// and `anchor_rot` give the posed tail and world rotation of each
/// non-spring parent (indexed per layout entry; unused when the parent is a
/// spring joint). Updates `state` in place.
template <class A>
SpringFrameResult<A> spring_frame_update(const SpringLayout& layout,
                                         const std::vector<typename A::V3>& anchor_pos,
                                         const std::vector<GQuat<A>>& anchor_rot,
                                         const std::vector<typename A::S>& eta_d,
                                         const std::vector<typename A::S>& eta_s,
                                         const std::vector<typename A::S>& eta_g,
                                         const std::vector<Eigen::Vector3d>& gravity_dir,
                                         double dt, SpringChainState<A>& state) {
  SpringFrameResult<A> out;
  const int n = layout.count();
  out.head.reserve(static_cast<size_t>(n));
  out.tail.reserve(static_cast<size_t>(n));
  out.world_rot.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int pe = layout.parent_entry[static_cast<size_t>(i)];
    typename A::V3 h_next = pe < 0 ? anchor_pos[static_cast<size_t>(i)] : out.tail[static_cast<size_t>(pe)];
    GQuat<A> parent_rot = pe < 0 ? anchor_rot[static_cast<size_t>(i)] : out.world_rot[static_cast<size_t>(pe)];

    auto rest_dir = A::lift_vec(layout.rest_dir[static_cast<size_t>(i)]);
    auto stiffness_dir = rotate(parent_rot, rest_dir);

    // Fallback direction if the net displacement vanishes: keep the bone
    // direction implied by the current tail, or the rest direction when
    // even that degenerates.
    Eigen::Vector3d cur_p(primal(dot(state.cur[static_cast<size_t>(i)] - h_next, A::lift_vec(Eigen::Vector3d::UnitX()))),
                          primal(dot(state.cur[static_cast<size_t>(i)] - h_next, A::lift_vec(Eigen::Vector3d::UnitY()))),
                          primal(dot(state.cur[static_cast<size_t>(i)] - h_next, A::lift_vec(Eigen::Vector3d::UnitZ()))));
    typename A::V3 fallback = cur_p.norm() > 1e-12 ? (state.cur[static_cast<size_t>(i)] - h_next) * (A::lift(1.0) / norm(state.cur[static_cast<size_t>(i)] - h_next))
                                                   : rest_dir;

    auto t_next = spring_step_core<A>(state.cur[static_cast<size_t>(i)], state.prev[static_cast<size_t>(i)], h_next,
                                      stiffness_dir, A::lift_vec(gravity_dir[static_cast<size_t>(i)]),
                                      eta_d[static_cast<size_t>(i)], eta_s[static_cast<size_t>(i)], eta_g[static_cast<size_t>(i)],
                                      layout.rest_len[static_cast<size_t>(i)], dt, fallback);

    auto dir = (t_next - h_next) * (A::lift(1.0 / layout.rest_len[static_cast<size_t>(i)]));
    out.world_rot.push_back(from_two_vectors<A>(rest_dir, dir));
    out.head.push_back(h_next);
    out.tail.push_back(t_next);
    state.prev[static_cast<size_t>(i)] = state.cur[static_cast<size_t>(i)];
    state.cur[static_cast<size_t>(i)] = t_next;
  }
  return out;
}

}  // namespace rigkit::simcore
