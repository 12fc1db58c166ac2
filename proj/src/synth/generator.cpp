#include "rigkit/synth/generator.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "rigkit/core/normalize.hpp"
#include "rigkit/core/repair.hpp"
#include "rigkit/core/validate.hpp"
#include "rigkit/deform/lbs.hpp"
#include "rigkit/physics/fk.hpp"
#include "rigkit/token/vocabulary.hpp"

namespace rigkit {

namespace {

double uni(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  return d(rng);
}

int uni_int(std::mt19937_64& rng, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  return d(rng);
}

bool flip(std::mt19937_64& rng, double p) { return uni(rng, 0.0, 1.0) < p; }

Vec3 jitter3(std::mt19937_64& rng, double amp) { return Vec3(uni(rng, -amp, amp), uni(rng, -amp, amp), uni(rng, -amp, amp)); }

/// Skeleton under construction; joints append with explicit parents and
/// are re-topologized by sort_children at the end.
struct Builder {
  SkeletonTree tree;
  int chain_count = 0;

  int add(const std::string& name, int parent, const Vec3& tail, BoneType type = BoneType::plain()) {
    JointRecord j;
    j.name = name;
    j.tail = tail;
    j.type = std::move(type);
    if (parent >= 0) {
      j.parent = parent;
      j.head = tree.joints[static_cast<size_t>(parent)].tail;
    } else {
      j.head = tail;
    }
    tree.joints.push_back(std::move(j));
    return tree.joint_count() - 1;
  }

  /// Chain of `len` joints stepping from the parent; returns the tip.
  int chain(const std::string& prefix, int parent, int len, const Vec3& step, std::mt19937_64& rng, double amp = 0.01) {
    int cur = parent;
    for (int k = 0; k < len; ++k) {
      cur = add(prefix + std::to_string(k), cur, tree.joints[static_cast<size_t>(cur)].tail + step + jitter3(rng, amp));
    }
    return cur;
  }

  /// Well-separated single-joint decorations on random existing joints;
  /// smears the bone-count distribution the way accessory bones do.
  void decorations(int count, std::mt19937_64& rng) {
    for (int i = 0; i < count; ++i) {
      const int parent = uni_int(rng, 0, tree.joint_count() - 1);
      for (int attempt = 0; attempt < 20; ++attempt) {
        Vec3 dir = jitter3(rng, 1.0);
        if (dir.norm() < 1e-6) continue;
        Vec3 pos = tree.joints[static_cast<size_t>(parent)].tail + uni(rng, 0.06, 0.12) * dir.normalized();
        bool ok = true;
        for (const auto& j : tree.joints) {
          if ((j.tail - pos).norm() < 0.04) ok = false;
        }
        if (ok) {
          add("detail" + std::to_string(tree.joint_count()), parent, pos);
          break;
        }
      }
    }
  }

  /// Spring chain with fresh chain id and random coefficients.
  int spring_chain(int parent, int len, const Vec3& first_step, const Vec3& step, std::mt19937_64& rng) {
    const int id = chain_count++;
    SpringParams params;
    params.drag = uni(rng, 0.1, 0.6);
    params.stiffness = uni(rng, 0.0, 0.4);
    params.gravity = uni(rng, 0.2, 1.0);
    params.gravity_dir = Vec3(0, 0, -1);
    int cur = parent;
    for (int k = 0; k < len; ++k) {
      const Vec3 s = (k == 0 ? first_step : step) + jitter3(rng, 0.008);
      cur = add("s" + std::to_string(id) + "_" + std::to_string(k), cur, tree.joints[static_cast<size_t>(cur)].tail + s, BoneType::spring(id, k));
      tree.joints.back().spring = params;
    }
    return cur;
  }
};

// ---- class recipes ----------------------------------------------------------

/// Humanoid matching the registry body template (28 slots), optionally
/// with both 12-slot hands. Proportions are jittered per asset.
SkeletonTree build_biped(std::mt19937_64& rng, bool hands) {
  const auto& reg = default_template_registry();
  const double h = uni(rng, 0.85, 1.1);  // overall height factor
  const double w = uni(rng, 0.9, 1.1);   // shoulder width factor
  std::map<std::string, Vec3> at;
  at["hips"] = Vec3(0, 0, 0.50 * h);
  at["spine"] = Vec3(0, 0, 0.58 * h);
  at["chest"] = Vec3(0, 0, 0.66 * h);
  at["upper_chest"] = Vec3(0, 0, 0.74 * h);
  at["neck"] = Vec3(0, 0, 0.82 * h);
  at["head"] = Vec3(0, 0, 0.90 * h);
  at["head_tip"] = Vec3(0, 0, 1.00 * h);
  at["breast.L"] = Vec3(0.07 * w, -0.08, 0.70 * h);
  at["breast.R"] = Vec3(-0.07 * w, -0.08, 0.70 * h);
  at["pelvis_tip"] = Vec3(0, -0.07, 0.42 * h);
  for (int side = 0; side < 2; ++side) {
    const double sx = side == 0 ? 1.0 : -1.0;
    const std::string s = side == 0 ? ".L" : ".R";
    at["shoulder" + s] = Vec3(sx * 0.10 * w, 0, 0.78 * h);
    at["upper_arm" + s] = Vec3(sx * 0.28 * w, 0, 0.76 * h);
    at["forearm" + s] = Vec3(sx * 0.44 * w, 0, 0.74 * h);
    at["hand" + s] = Vec3(sx * 0.55 * w, 0, 0.73 * h);
    at["thigh" + s] = Vec3(sx * 0.09 * w, 0, 0.28 * h);
    at["shin" + s] = Vec3(sx * 0.10 * w, 0, 0.08 * h);
    at["foot" + s] = Vec3(sx * 0.11 * w, -0.06, 0.02 * h);
    at["toe" + s] = Vec3(sx * 0.11 * w, -0.14, 0.015 * h);
    at["toe_tip" + s] = Vec3(sx * 0.11 * w, -0.19, 0.012 * h);
    // Hand fragment: palm plus finger chains fanned along y.
    at["palm" + s] = Vec3(sx * 0.60 * w, 0.0, 0.725 * h);
    const double fingers[4][2] = {{0.035, -0.030}, {0.015, 0.028}, {0.0, 0.030}, {-0.015, 0.028}};
    const char* names[4] = {"thumb", "index", "middle", "ring"};
    for (int fi = 0; fi < 4; ++fi) {
      const int bones = fi == 0 ? 2 : 3;
      for (int k = 0; k < bones; ++k) {
        at[std::string(names[fi]) + std::to_string(k + 1) + s] = Vec3(sx * (0.60 + (fi == 0 ? 0.015 : 0.022) * (k + 1)) * w, fingers[fi][0] + 0.004 * k * (fi == 0 ? -1.0 : 1.0), 0.725 * h + 0.001 * fi);
      }
    }
  }

  Builder b;
  auto instantiate = [&](const SkeletonTemplate& tmpl, int attach) {
    std::vector<int> slot_idx(tmpl.slots.size(), -1);
    for (size_t s = 0; s < tmpl.slots.size(); ++s) {
      const int parent = tmpl.slots[s].parent_slot < 0 ? attach : slot_idx[static_cast<size_t>(tmpl.slots[s].parent_slot)];
      Vec3 pos = at.at(tmpl.slots[s].bone_name) + jitter3(rng, 0.006);
      slot_idx[s] = b.add(tmpl.slots[s].bone_name, parent, pos, BoneType::tmpl(tmpl.id, static_cast<int>(s)));
    }
    return slot_idx;
  };
  instantiate(*reg.find("biped:body"), -1);
  if (hands) {
    instantiate(*reg.find("biped:hand_l"), b.tree.find_joint("hand.L"));
    instantiate(*reg.find("biped:hand_r"), b.tree.find_joint("hand.R"));
  }
  return b.tree;
}

SkeletonTree build_vroid(std::mt19937_64& rng, const GenSpec& spec) {
  Builder b;
  b.tree = build_biped(rng, true);
  // Recover the running chain counter from existing content (none yet).
  const int chains = uni_int(rng, spec.vroid_min_chains, spec.vroid_max_chains);
  const int head = b.tree.find_joint("head");
  // Skirt chains hang from the pelvis tip so the root keeps a low
  // out-degree (many chains on the root would look like the star-root
  // pathology the repair pass hunts for).
  const int pelvis = b.tree.find_joint("pelvis_tip");
  for (int c = 0; c < chains; ++c) {
    const int len = 1 + (uni_int(rng, 0, 9) < 6 ? 0 : uni_int(rng, 1, 2));  // mostly 1, some 2-3
    const bool hair = flip(rng, 0.7);
    const int attach = hair ? head : pelvis;
    const double ang = uni(rng, 0.0, 2.0 * M_PI);
    const double r = hair ? uni(rng, 0.05, 0.12) : uni(rng, 0.08, 0.16);
    Vec3 first(r * std::cos(ang), r * std::sin(ang), hair ? uni(rng, -0.06, 0.04) : uni(rng, -0.10, -0.05));
    Vec3 step(0.01 * std::cos(ang), 0.01 * std::sin(ang), -uni(rng, 0.05, 0.09));
    b.spring_chain(attach, len, first, step, rng);
  }
  return b.tree;
}

SkeletonTree build_quadruped(std::mt19937_64& rng, const GenSpec& spec) {
  Builder b;
  const double l = uni(rng, 0.9, 1.15);
  int hips = b.add("hips", -1, Vec3(0, -0.25 * l, 0.35));
  const int nspine = uni_int(rng, 2, 4);
  int cur = hips;
  for (int i = 0; i < nspine; ++i) {
    cur = b.add("spine" + std::to_string(i), cur, Vec3(0, (-0.25 + 0.5 * (i + 1) / (nspine + 1)) * l, 0.36 + 0.01 * (i % 2)) + jitter3(rng, 0.008));
  }
  int chest = b.add("chest", cur, Vec3(0, 0.25 * l, 0.36) + jitter3(rng, 0.008));
  int neck = b.add("neck", chest, Vec3(0, 0.33 * l, 0.44) + jitter3(rng, 0.008));
  int head = b.add("head", neck, Vec3(0, 0.42 * l, 0.50) + jitter3(rng, 0.008));
  b.add("snout", head, Vec3(0, 0.50 * l, 0.47) + jitter3(rng, 0.008));
  if (flip(rng, 0.5)) {
    b.add("ear.L", head, Vec3(0.05, 0.40 * l, 0.56) + jitter3(rng, 0.006));
    b.add("ear.R", head, Vec3(-0.05, 0.40 * l, 0.56) + jitter3(rng, 0.006));
  }
  for (int side = 0; side < 2; ++side) {
    const double sx = side == 0 ? 1.0 : -1.0;
    const std::string s = side == 0 ? ".L" : ".R";
    for (int front = 0; front < 2; ++front) {
      const int base = front ? chest : hips;
      const double y = front ? 0.22 * l : -0.22 * l;
      const std::string leg = (front ? "front" : "rear") + s;
      int upper = b.add("upper_" + leg, base, Vec3(sx * 0.09, y, 0.22) + jitter3(rng, 0.006));
      int lower = b.add("lower_" + leg, upper, Vec3(sx * 0.10, y + 0.02, 0.10) + jitter3(rng, 0.006));
      b.add("foot_" + leg, lower, Vec3(sx * 0.10, y + 0.05, 0.015) + jitter3(rng, 0.004));
    }
  }
  const int tail_len = uni_int(rng, 2, 5);
  if (flip(rng, spec.spring_tail_rate)) {
    b.spring_chain(hips, tail_len, Vec3(0, -0.10, 0.02), Vec3(0, -0.07, -0.01), rng);
  } else {
    b.chain("tail", hips, tail_len, Vec3(0, -0.08, 0.0), rng);
  }
  b.decorations(uni_int(rng, 0, 6), rng);
  return b.tree;
}

SkeletonTree build_bird(std::mt19937_64& rng, const GenSpec& spec) {
  Builder b;
  int hips = b.add("hips", -1, Vec3(0, -0.1, 0.4));
  int chest = b.add("chest", hips, Vec3(0, 0.08, 0.46) + jitter3(rng, 0.008));
  int neck_end = b.chain("neck", chest, uni_int(rng, 1, 3), Vec3(0, 0.09, 0.07), rng);
  int head = b.add("head", neck_end, b.tree.joints[static_cast<size_t>(neck_end)].tail + Vec3(0, 0.08, 0.04));
  b.add("beak", head, b.tree.joints[static_cast<size_t>(head)].tail + Vec3(0, 0.07, -0.01));
  if (flip(rng, 0.4)) b.chain("crest", head, uni_int(rng, 1, 2), Vec3(0, -0.02, 0.05), rng);
  for (int side = 0; side < 2; ++side) {
    const double sx = side == 0 ? 1.0 : -1.0;
    const std::string s = side == 0 ? ".L" : ".R";
    const int wing_len = uni_int(rng, 2, 5);
    b.chain("wing" + s + "_", chest, wing_len, Vec3(sx * 0.11, 0.01, 0.015), rng);
    int thigh = b.add("thigh" + s, hips, Vec3(sx * 0.05, -0.02, 0.30) + jitter3(rng, 0.006));
    int shin = b.add("shin" + s, thigh, Vec3(sx * 0.06, 0.0, 0.16) + jitter3(rng, 0.006));
    b.add("foot" + s, shin, Vec3(sx * 0.06, 0.04, 0.02) + jitter3(rng, 0.004));
  }
  const int tail_len = uni_int(rng, 1, 3);
  if (flip(rng, spec.spring_tail_rate * 0.6)) {
    b.spring_chain(hips, tail_len, Vec3(0, -0.1, -0.02), Vec3(0, -0.07, -0.02), rng);
  } else {
    b.chain("tail", hips, tail_len, Vec3(0, -0.09, -0.02), rng);
  }
  b.decorations(uni_int(rng, 0, 6), rng);
  return b.tree;
}

SkeletonTree build_insect(std::mt19937_64& rng, const GenSpec&) {
  Builder b;
  int thorax = b.add("thorax", -1, Vec3(0, 0, 0.2));
  b.chain("abdomen", thorax, uni_int(rng, 1, 4), Vec3(0, -0.10, -0.005), rng);
  int head = b.add("head", thorax, Vec3(0, 0.11, 0.21) + jitter3(rng, 0.005));
  const int ant = uni_int(rng, 1, 3);
  b.chain("antenna.L_", head, ant, Vec3(0.035, 0.05, 0.03), rng);
  b.chain("antenna.R_", head, ant, Vec3(-0.035, 0.05, 0.03), rng);
  const int leg_segments = uni_int(rng, 1, 2);
  for (int side = 0; side < 2; ++side) {
    const double sx = side == 0 ? 1.0 : -1.0;
    const std::string s = side == 0 ? ".L" : ".R";
    for (int leg = 0; leg < 3; ++leg) {
      const double y = 0.06 - 0.06 * leg;
      int hipj = b.add("coxa" + std::to_string(leg) + s, thorax, Vec3(sx * 0.09, y, 0.17) + jitter3(rng, 0.004));
      for (int seg = 0; seg < leg_segments; ++seg) {
        hipj = b.add("leg" + std::to_string(leg) + "_" + std::to_string(seg) + s, hipj, b.tree.joints[static_cast<size_t>(hipj)].tail + Vec3(sx * 0.05, -0.005, -0.06) + jitter3(rng, 0.004));
      }
      b.add("tarsus" + std::to_string(leg) + s, hipj, b.tree.joints[static_cast<size_t>(hipj)].tail + Vec3(sx * 0.03, -0.005, -0.05) + jitter3(rng, 0.004));
    }
  }
  b.decorations(uni_int(rng, 0, 6), rng);
  return b.tree;
}

SkeletonTree build_static(std::mt19937_64& rng, const GenSpec&) {
  Builder b;
  const int n = uni_int(rng, 3, 10);
  b.add("n0", -1, Vec3(0, 0, 0.1));
  for (int i = 1; i < n; ++i) {
    int parent = uni_int(rng, 0, i - 1);
    Vec3 pos;
    for (int attempt = 0; attempt < 20; ++attempt) {
      pos = b.tree.joints[static_cast<size_t>(parent)].tail + Vec3(uni(rng, -0.2, 0.2), uni(rng, -0.2, 0.2), uni(rng, -0.15, 0.25));
      bool ok = true;
      for (const auto& j : b.tree.joints) {
        if ((j.tail - pos).norm() < 0.05) ok = false;
      }
      if (ok) break;
    }
    b.add("n" + std::to_string(i), parent, pos);
  }
  return b.tree;
}

SkeletonTree build_other(std::mt19937_64& rng, const GenSpec& spec) {
  Builder b;
  const int target = uni_int(rng, 10, 40);
  b.add("g0", -1, Vec3(0, 0, 0));
  int made = 1;
  while (made < target) {
    const int parent = uni_int(rng, 0, b.tree.joint_count() - 1);
    const int len = std::min(uni_int(rng, 2, 6), target - made);
    Vec3 dir(uni(rng, -1, 1), uni(rng, -1, 1), uni(rng, -1, 1));
    if (dir.norm() < 1e-3) dir = Vec3(0, 0, 1);
    dir.normalize();
    const double step = uni(rng, 0.07, 0.13);
    int cur = parent;
    bool spring = flip(rng, spec.spring_tail_rate * 0.3);
    int chain_id = spring ? b.chain_count++ : -1;
    SpringParams sp;
    if (spring) {
      sp.drag = uni(rng, 0.1, 0.6);
      sp.stiffness = uni(rng, 0.0, 0.4);
      sp.gravity = uni(rng, 0.2, 1.0);
    }
    for (int k = 0; k < len; ++k) {
      Vec3 pos;
      bool placed = false;
      for (int attempt = 0; attempt < 25 && !placed; ++attempt) {
        Vec3 noise = jitter3(rng, 1.0);
        if (noise.norm() < 1e-6) noise = Vec3(0, 1, 0);
        Vec3 wiggle = (dir + 0.5 * noise.normalized()).normalized();
        pos = b.tree.joints[static_cast<size_t>(cur)].tail + step * wiggle;
        placed = true;
        for (const auto& j : b.tree.joints) {
          if ((j.tail - pos).norm() < 0.04) placed = false;
        }
      }
      if (!placed) break;
      if (spring) {
        cur = b.add("g" + std::to_string(made), cur, pos, BoneType::spring(chain_id, k));
        b.tree.joints.back().spring = sp;
      } else {
        cur = b.add("g" + std::to_string(made), cur, pos);
      }
      ++made;
    }
    if (b.tree.joint_count() > 3 * target) break;  // safety against pathological rejection
  }
  return b.tree;
}

// ---- mesh -------------------------------------------------------------------

void append_capsule(Mesh& mesh, const Vec3& head, const Vec3& tail, double radius, int segments, int rings) {
  const Vec3 axis = tail - head;
  const double len = axis.norm();
  const Vec3 dir = axis / len;
  Vec3 up = std::abs(dir.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
  const Vec3 u = dir.cross(up).normalized();
  const Vec3 v = dir.cross(u).normalized();
  std::vector<std::vector<int>> ring_idx;
  const int nrings = rings + 2;
  for (int r = 0; r < nrings; ++r) {
    const double t = static_cast<double>(r) / (nrings - 1);
    const Vec3 center = head + t * axis;
    std::vector<int> ring;
    for (int s = 0; s < segments; ++s) {
      const double ang = 2.0 * M_PI * s / segments;
      ring.push_back(mesh.vertex_count());
      mesh.vertices.push_back(center + radius * (std::cos(ang) * u + std::sin(ang) * v));
    }
    ring_idx.push_back(ring);
  }
  for (int r = 0; r + 1 < nrings; ++r) {
    for (int s = 0; s < segments; ++s) {
      const int a = ring_idx[static_cast<size_t>(r)][static_cast<size_t>(s)];
      const int b2 = ring_idx[static_cast<size_t>(r)][static_cast<size_t>((s + 1) % segments)];
      const int c = ring_idx[static_cast<size_t>(r + 1)][static_cast<size_t>(s)];
      const int d = ring_idx[static_cast<size_t>(r + 1)][static_cast<size_t>((s + 1) % segments)];
      mesh.faces.push_back({a, b2, c});
      mesh.faces.push_back({b2, d, c});
    }
  }
  const int c0 = mesh.vertex_count();
  mesh.vertices.push_back(head - radius * 0.8 * dir);
  const int c1 = mesh.vertex_count();
  mesh.vertices.push_back(tail + radius * 0.8 * dir);
  for (int s = 0; s < segments; ++s) {
    mesh.faces.push_back({c0, ring_idx.front()[static_cast<size_t>((s + 1) % segments)], ring_idx.front()[static_cast<size_t>(s)]});
    mesh.faces.push_back({c1, ring_idx.back()[static_cast<size_t>(s)], ring_idx.back()[static_cast<size_t>((s + 1) % segments)]});
  }
}

Mesh capsule_union(const SkeletonTree& tree, const GenSpec& spec, std::mt19937_64& rng) {
  Mesh mesh;
  for (int i = 0; i < tree.joint_count(); ++i) {
    const double len = tree.bone_length(i);
    if (len < 0.015) continue;
    const double radius = std::clamp(0.3 * len, 0.012, 0.05) * uni(rng, 0.85, 1.15);
    append_capsule(mesh, tree.joints[static_cast<size_t>(i)].head, tree.joints[static_cast<size_t>(i)].tail, radius, spec.capsule_segments, spec.capsule_rings);
  }
  return mesh;
}

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

Motion make_motion(const SkeletonTree& tree, std::mt19937_64& rng) {
  // Animate a few non-spring joints with sinusoidal swings.
  std::vector<int> candidates;
  for (int i = 0; i < tree.joint_count(); ++i) {
    if (tree.joints[static_cast<size_t>(i)].type.kind != BoneKind::Spring) candidates.push_back(i);
  }
  const int animated = std::min<int>(uni_int(rng, 2, 5), static_cast<int>(candidates.size()));
  std::vector<int> picks;
  for (int k = 0; k < animated; ++k) picks.push_back(candidates[static_cast<size_t>(uni_int(rng, 0, static_cast<int>(candidates.size()) - 1))]);
  struct Track {
    std::string joint;
    Vec3 axis;
    double amp, phase, freq;
  };
  std::vector<Track> tracks;
  for (int p : picks) {
    Vec3 axis(uni(rng, -1, 1), uni(rng, -1, 1), uni(rng, -1, 1));
    if (axis.norm() < 1e-3) axis = Vec3(1, 0, 0);
    tracks.push_back({tree.joints[static_cast<size_t>(p)].name, axis.normalized(), uni(rng, 5.0, 25.0) * M_PI / 180.0, uni(rng, 0.0, 2.0 * M_PI), uni(rng, 0.5, 1.5)});
  }
  Motion motion;
  motion.fps = 30.0;
  const int frames = uni_int(rng, 6, 12);
  const double tamp = uni(rng, 0.0, 0.04);
  for (int f = 0; f < frames; ++f) {
    MotionFrame frame;
    const double t = static_cast<double>(f) / 30.0;
    frame.root_translation = Vec3(0, 0, tamp * std::sin(2.0 * M_PI * t));
    for (const auto& tr : tracks) {
      const double ang = tr.amp * std::sin(2.0 * M_PI * tr.freq * t + tr.phase);
      frame.rotations[tr.joint] = Quat(Eigen::AngleAxisd(ang, tr.axis));
    }
    motion.frames.push_back(std::move(frame));
  }
  return motion;
}

}  // namespace

void GenSpec::validate() const {
  double sum = 0.0;
  for (const auto& [cls, p] : class_mix) {
    if (p < 0.0) throw RangeError("gen spec: negative probability for class " + cls);
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw RangeError("gen spec: class probabilities sum to " + std::to_string(sum));
}

std::vector<Vec3> compute_vertex_normals(const Mesh& mesh) {
  std::vector<Vec3> normals(mesh.vertices.size(), Vec3::Zero());
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[static_cast<size_t>(f[0])];
    const Vec3& b = mesh.vertices[static_cast<size_t>(f[1])];
    const Vec3& c = mesh.vertices[static_cast<size_t>(f[2])];
    const Vec3 n = (b - a).cross(c - a);  // area-weighted
    for (int k = 0; k < 3; ++k) normals[static_cast<size_t>(f[static_cast<size_t>(k)])] += n;
  }
  for (auto& n : normals) {
    const double len = n.norm();
    n = len > 1e-12 ? Vec3(n / len) : Vec3(0, 0, 1);
  }
  return normals;
}

SkinWeights falloff_weights(const Mesh& mesh, const SkeletonTree& tree) {
  SkinWeights W;
  W.joint_count = tree.joint_count();
  W.rows.resize(static_cast<size_t>(mesh.vertex_count()));
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    std::vector<double> row(static_cast<size_t>(tree.joint_count()), 0.0);
    double sum = 0.0;
    for (int j = 0; j < tree.joint_count(); ++j) {
      const double len = tree.bone_length(j);
      if (len < 0.015) continue;
      const double sigma = 0.5 * len;
      const double d = point_segment_distance(mesh.vertices[static_cast<size_t>(v)], tree.joints[static_cast<size_t>(j)].head, tree.joints[static_cast<size_t>(j)].tail);
      row[static_cast<size_t>(j)] = std::exp(-d * d / (sigma * sigma));
      sum += row[static_cast<size_t>(j)];
    }
    // Normalize, truncate small entries, renormalize.
    double kept = 0.0;
    for (auto& w : row) {
      w = w / sum;
      if (w < 1e-3) w = 0.0;
      kept += w;
    }
    for (size_t j = 0; j < row.size(); ++j) {
      if (row[j] > 0.0) W.rows[static_cast<size_t>(v)].emplace_back(static_cast<int>(j), row[j] / kept);
    }
  }
  return W;
}

PointSample sample_surface(const Mesh& mesh, int count, std::mt19937_64& rng) {
  if (mesh.faces.empty()) throw RangeError("sample_surface: mesh has no faces");
  std::vector<double> cumulative;
  cumulative.reserve(mesh.faces.size());
  double total = 0.0;
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[static_cast<size_t>(f[0])];
    const Vec3& b = mesh.vertices[static_cast<size_t>(f[1])];
    const Vec3& c = mesh.vertices[static_cast<size_t>(f[2])];
    total += 0.5 * (b - a).cross(c - a).norm();
    cumulative.push_back(total);
  }
  const auto normals = mesh.normals.empty() ? compute_vertex_normals(mesh) : mesh.normals;
  PointSample out;
  out.positions.reserve(static_cast<size_t>(count));
  out.normals.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double pick = uni(rng, 0.0, total);
    const size_t fi = static_cast<size_t>(std::lower_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
    const auto& f = mesh.faces[std::min(fi, mesh.faces.size() - 1)];
    double r1 = std::sqrt(uni(rng, 0.0, 1.0));
    double r2 = uni(rng, 0.0, 1.0);
    const double wa = 1.0 - r1, wb = r1 * (1.0 - r2), wc = r1 * r2;
    out.positions.push_back(wa * mesh.vertices[static_cast<size_t>(f[0])] + wb * mesh.vertices[static_cast<size_t>(f[1])] + wc * mesh.vertices[static_cast<size_t>(f[2])]);
    Vec3 n = wa * normals[static_cast<size_t>(f[0])] + wb * normals[static_cast<size_t>(f[1])] + wc * normals[static_cast<size_t>(f[2])];
    const double len = n.norm();
    out.normals.push_back(len > 1e-12 ? Vec3(n / len) : Vec3(0, 0, 1));
  }
  return out;
}

GeneratedAsset gen_asset(const GenSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  // Class pick by cumulative probability, in deterministic map order.
  std::string cls;
  {
    double pick = uni(rng, 0.0, 1.0);
    double acc = 0.0;
    for (const auto& [name, p] : spec.class_mix) {
      acc += p;
      if (pick <= acc) {
        cls = name;
        break;
      }
    }
    if (cls.empty()) cls = spec.class_mix.rbegin()->first;
  }

  SkeletonTree tree;
  if (cls == "vroid") {
    tree = build_vroid(rng, spec);
  } else if (cls == "mixamo" || cls == "biped") {
    tree = build_biped(rng, flip(rng, spec.hand_probability));
  } else if (cls == "quadruped") {
    tree = build_quadruped(rng, spec);
  } else if (cls == "bird") {
    tree = build_bird(rng, spec);
  } else if (cls == "insect") {
    tree = build_insect(rng, spec);
  } else if (cls == "static") {
    tree = build_static(rng, spec);
  } else {
    tree = build_other(rng, spec);
  }
  tree = sort_children(tree);

  GeneratedAsset out;
  out.asset.class_tag = cls;
  out.asset.skeleton = tree;
  out.asset.mesh = capsule_union(tree, spec, rng);
  out.asset.skin = falloff_weights(out.asset.mesh, tree);

  auto [normalized, transform] = normalize_rig(out.asset);
  out.asset = std::move(normalized);
  out.asset.mesh.normals = compute_vertex_normals(out.asset.mesh);

  for (int m = 0; m < spec.motions_per_asset; ++m) out.motions.push_back(make_motion(out.asset.skeleton, rng));
  return out;
}

RigAsset augment(const RigAsset& asset, const std::vector<Motion>& motions, std::mt19937_64& rng, const AugmentParams& params) {
  RigAsset out = asset;
  bool changed = false;

  // Motion-based augmentation first, while weights still match the mesh.
  const bool humanoid = asset.class_tag == "vroid" || asset.class_tag == "mixamo";
  if (humanoid && !motions.empty() && flip(rng, params.p_template_motion)) {
    const auto& motion = motions[static_cast<size_t>(uni_int(rng, 0, static_cast<int>(motions.size()) - 1))];
    if (!motion.frames.empty()) {
      const auto& frame = motion.frames[static_cast<size_t>(uni_int(rng, 0, static_cast<int>(motion.frames.size()) - 1))];
      Pose pose = retarget_frame(out.skeleton, frame);
      auto fk = fk_pose(out.skeleton, pose);
      out.mesh.vertices = lbs_deform(out.mesh, out.skeleton, out.skin, rest_to_posed_transforms(out.skeleton, fk));
      out.skeleton = pose_tree(out.skeleton, pose);
      changed = true;
    }
  } else if (!humanoid && flip(rng, params.p_bone_rotate)) {
    Pose pose = Pose::identity(out.skeleton);
    const double r = params.bone_rotate_range_deg * M_PI / 180.0;
    for (auto& [name, q] : pose.rotations) {
      // XYZ-order Euler with per-axis angles in the configured range.
      q = Quat(Eigen::AngleAxisd(uni(rng, -r, r), Vec3::UnitX()) * Eigen::AngleAxisd(uni(rng, -r, r), Vec3::UnitY()) * Eigen::AngleAxisd(uni(rng, -r, r), Vec3::UnitZ()));
    }
    auto fk = fk_pose(out.skeleton, pose);
    out.mesh.vertices = lbs_deform(out.mesh, out.skeleton, out.skin, rest_to_posed_transforms(out.skeleton, fk));
    out.skeleton = pose_tree(out.skeleton, pose);
    changed = true;
  }

  if (flip(rng, params.p_rotate)) {
    const double r = params.rotate_range_deg * M_PI / 180.0;
    Quat q = Quat(Eigen::AngleAxisd(uni(rng, -r, r), Vec3::UnitX()) * Eigen::AngleAxisd(uni(rng, -r, r), Vec3::UnitY()) * Eigen::AngleAxisd(uni(rng, -r, r), Vec3::UnitZ()));
    for (auto& v : out.mesh.vertices) v = q * v;
    for (auto& j : out.skeleton.joints) {
      j.tail = q * j.tail;
      j.head = q * j.head;
    }
    changed = true;
  }
  if (flip(rng, params.p_scale)) {
    const double s = uni(rng, params.scale_min, params.scale_max);
    NormalizationTransform t;
    t.scale = s;
    out = transform_rig(out, t);
    changed = true;
  }

  if (changed) {
    // Transforms can change the (z,y,x) child order; re-sorting permutes
    // joint storage, so the skin columns are remapped alongside.
    SkeletonTree sorted = sort_children(out.skeleton);
    std::vector<int> old_to_new(static_cast<size_t>(out.skeleton.joint_count()));
    for (int j = 0; j < out.skeleton.joint_count(); ++j) {
      old_to_new[static_cast<size_t>(j)] = sorted.find_joint(out.skeleton.joints[static_cast<size_t>(j)].name);
    }
    for (auto& row : out.skin.rows) {
      for (auto& [j, w] : row) j = old_to_new[static_cast<size_t>(j)];
      std::sort(row.begin(), row.end());
    }
    out.skeleton = std::move(sorted);

    auto [normalized, transform] = normalize_rig(out);
    out = std::move(normalized);
    out.mesh.normals = compute_vertex_normals(out.mesh);
  }
  return out;
}

std::string genspec_to_json(const GenSpec& spec) {
  nlohmann::json j;
  j["class_mix"] = spec.class_mix;
  j["hand_probability"] = spec.hand_probability;
  j["vroid_min_chains"] = spec.vroid_min_chains;
  j["vroid_max_chains"] = spec.vroid_max_chains;
  j["spring_tail_rate"] = spec.spring_tail_rate;
  j["capsule_segments"] = spec.capsule_segments;
  j["capsule_rings"] = spec.capsule_rings;
  j["motions_per_asset"] = spec.motions_per_asset;
  j["seed"] = spec.seed;
  return j.dump(2) + "\n";
}

GenSpec genspec_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("gen spec: ") + e.what());
  }
  GenSpec spec;
  if (j.contains("class_mix")) spec.class_mix = j["class_mix"].get<std::map<std::string, double>>();
  if (j.contains("hand_probability")) spec.hand_probability = j["hand_probability"].get<double>();
  if (j.contains("vroid_min_chains")) spec.vroid_min_chains = j["vroid_min_chains"].get<int>();
  if (j.contains("vroid_max_chains")) spec.vroid_max_chains = j["vroid_max_chains"].get<int>();
  if (j.contains("spring_tail_rate")) spec.spring_tail_rate = j["spring_tail_rate"].get<double>();
  if (j.contains("capsule_segments")) spec.capsule_segments = j["capsule_segments"].get<int>();
  if (j.contains("capsule_rings")) spec.capsule_rings = j["capsule_rings"].get<int>();
  if (j.contains("motions_per_asset")) spec.motions_per_asset = j["motions_per_asset"].get<int>();
  if (j.contains("seed")) spec.seed = j["seed"].get<uint64_t>();
  spec.validate();
  return spec;
}

}  // namespace rigkit
