#pragma once

#include <string>
#include <vector>

#include "rigkit/core/types.hpp"

namespace rigkit {

enum class ViolationKind {
  MultiRoot,
  NoRoot,
  DanglingParent,
  Cycle,
  NotTopologicallySorted,
  HeadTailMismatch,
  UnsortedChildren,
  BrokenSpringChain,
  ShapeMismatch,
  InvalidMesh,
};

struct Violation {
  ViolationKind kind;
  int joint = -1;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
  bool has(ViolationKind kind) const;
};

/// Checks the SkeletonTree invariants and reports every violation found.
/// Never throws; an empty report means the tree is valid.
ValidationReport validate_tree(const SkeletonTree& tree);

/// Full-asset check: tree invariants plus mesh/skin shape consistency.
ValidationReport validate_asset(const RigAsset& asset);

}  // namespace rigkit
