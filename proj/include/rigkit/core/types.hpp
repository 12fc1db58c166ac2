#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace rigkit {

using Vec3 = Eigen::Vector3d;

/// Base class for all recoverable rigkit errors. The CLI maps these to
/// machine-readable JSON; library users can catch the specific subtype.
class RigError : public std::runtime_error {
 public:
  RigError(std::string code, const std::string& msg)
      : std::runtime_error(msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

class ValidationError : public RigError {
 public:
  explicit ValidationError(const std::string& msg) : RigError("validation", msg) {}
};

class ParseError : public RigError {
 public:
  explicit ParseError(const std::string& msg) : RigError("parse", msg) {}
};

class RangeError : public RigError {
 public:
  explicit RangeError(const std::string& msg) : RigError("range", msg) {}
};

/// Per-bone physical attributes driving the spring simulation.
struct SpringParams {
  double drag = 0.0;       // eta_d
  double stiffness = 0.0;  // eta_s
  double gravity = 0.0;    // eta_g
  Vec3 gravity_dir = Vec3(0.0, 0.0, -1.0);  // unit vector
};

enum class BoneKind { Plain, Template, Spring };

struct BoneType {
  BoneKind kind = BoneKind::Plain;
  // Template bones
  std::string template_id;
  int slot = -1;
  // Spring bones
  int chain_id = -1;
  int chain_pos = -1;

  static BoneType plain() { return {}; }
  static BoneType tmpl(std::string id, int slot) {
    BoneType t;
    t.kind = BoneKind::Template;
    t.template_id = std::move(id);
    t.slot = slot;
    return t;
  }
  static BoneType spring(int chain, int pos) {
    BoneType t;
    t.kind = BoneKind::Spring;
    t.chain_id = chain;
    t.chain_pos = pos;
    return t;
  }
};

/// One joint of the skeleton. The bone associated with a joint spans from
/// its head (the parent's tail; explicit for the root) to its tail.
struct JointRecord {
  std::string name;
  std::optional<int> parent;  // nullopt for the root
  Vec3 tail = Vec3::Zero();
  Vec3 head = Vec3::Zero();
  BoneType type;
  std::optional<SpringParams> spring;
};

struct SkeletonTree {
  std::vector<JointRecord> joints;
  int root_index = 0;

  int joint_count() const { return static_cast<int>(joints.size()); }
  const JointRecord& root() const { return joints[static_cast<size_t>(root_index)]; }

  /// Child index lists in storage order.
  std::vector<std::vector<int>> children() const;

  /// Index of the joint with the given name, or -1.
  int find_joint(const std::string& name) const;

  /// Bone length of joint i (|tail - head|).
  double bone_length(int i) const { return (joints[static_cast<size_t>(i)].tail - joints[static_cast<size_t>(i)].head).norm(); }
};

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::vector<Vec3> normals;  // empty or one per vertex

  int vertex_count() const { return static_cast<int>(vertices.size()); }
};

/// Sparse row-stochastic vertex x joint weight matrix.
struct SkinWeights {
  int joint_count = 0;
  // rows[v] = sorted list of (joint, weight), weights per row sum to 1
  std::vector<std::vector<std::pair<int, double>>> rows;

  int vertex_count() const { return static_cast<int>(rows.size()); }
  double at(int vertex, int joint) const;
  std::vector<double> dense_row(int vertex) const;

  static SkinWeights from_dense(const std::vector<std::vector<double>>& dense);
};

struct RigAsset {
  Mesh mesh;
  SkeletonTree skeleton;
  SkinWeights skin;
  std::string class_tag;
};

}  // namespace rigkit
