#include "rigkit/core/validate.hpp"

#include <cmath>
#include <sstream>

namespace rigkit {

namespace {

const char* kind_name(ViolationKind k) {
  switch (k) {
    case ViolationKind::MultiRoot: return "multi_root";
    case ViolationKind::NoRoot: return "no_root";
    case ViolationKind::DanglingParent: return "dangling_parent";
    case ViolationKind::Cycle: return "cycle";
    case ViolationKind::NotTopologicallySorted: return "not_topologically_sorted";
    case ViolationKind::HeadTailMismatch: return "head_tail_mismatch";
    case ViolationKind::UnsortedChildren: return "unsorted_children";
    case ViolationKind::BrokenSpringChain: return "broken_spring_chain";
    case ViolationKind::ShapeMismatch: return "shape_mismatch";
    case ViolationKind::InvalidMesh: return "invalid_mesh";
  }
  return "unknown";
}

bool tail_less_zyx(const Vec3& a, const Vec3& b) {
  if (a.z() != b.z()) return a.z() < b.z();
  if (a.y() != b.y()) return a.y() < b.y();
  return a.x() < b.x();
}

}  // namespace

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (const auto& v : violations) {
    os << kind_name(v.kind) << " (joint " << v.joint << "): " << v.detail << "\n";
  }
  return os.str();
}

bool ValidationReport::has(ViolationKind kind) const {
  for (const auto& v : violations) {
    if (v.kind == kind) return true;
  }
  return false;
}

ValidationReport validate_tree(const SkeletonTree& tree) {
  ValidationReport report;
  const int n = tree.joint_count();
  if (n == 0) {
    report.violations.push_back({ViolationKind::NoRoot, -1, "empty skeleton"});
    return report;
  }

  int root_count = 0;
  for (int i = 0; i < n; ++i) {
    const auto& j = tree.joints[static_cast<size_t>(i)];
    if (!j.parent) {
      ++root_count;
      if (i != tree.root_index) {
        report.violations.push_back({ViolationKind::MultiRoot, i, "parentless joint is not root_index"});
      }
      continue;
    }
    int p = *j.parent;
    if (p < 0 || p >= n) {
      report.violations.push_back({ViolationKind::DanglingParent, i, "parent index out of range"});
      continue;
    }
    if (p == i) {
      report.violations.push_back({ViolationKind::Cycle, i, "joint is its own parent"});
      continue;
    }
    if (p > i) {
      report.violations.push_back({ViolationKind::NotTopologicallySorted, i, "parent stored after child"});
    }
    if ((j.head - tree.joints[static_cast<size_t>(p)].tail).norm() != 0.0) {
      report.violations.push_back({ViolationKind::HeadTailMismatch, i, "head differs from parent tail"});
    }
  }
  if (root_count == 0) {
    report.violations.push_back({ViolationKind::NoRoot, -1, "no parentless joint"});
  } else if (root_count > 1) {
    report.violations.push_back({ViolationKind::MultiRoot, -1, "more than one parentless joint"});
  }

  // Cycle detection over the parent relation (handles loops longer than 1).
  {
    std::vector<int> state(static_cast<size_t>(n), 0);  // 0 unvisited, 1 on path, 2 done
    for (int i = 0; i < n; ++i) {
      int cur = i;
      std::vector<int> path;
      while (cur >= 0 && cur < n && state[static_cast<size_t>(cur)] == 0) {
        state[static_cast<size_t>(cur)] = 1;
        path.push_back(cur);
        if (!tree.joints[static_cast<size_t>(cur)].parent) break;
        int nxt = *tree.joints[static_cast<size_t>(cur)].parent;
        if (nxt == cur) break;  // self-loop already reported
        if (nxt >= 0 && nxt < n && state[static_cast<size_t>(nxt)] == 1) {
          report.violations.push_back({ViolationKind::Cycle, nxt, "parent chain loops"});
          break;
        }
        cur = nxt;
      }
      for (int p : path) state[static_cast<size_t>(p)] = 2;
    }
  }

  // Children ordering by (z, y, x) over tails.
  auto kids = tree.children();
  for (int p = 0; p < n; ++p) {
    const auto& c = kids[static_cast<size_t>(p)];
    for (size_t k = 1; k < c.size(); ++k) {
      const Vec3& a = tree.joints[static_cast<size_t>(c[k - 1])].tail;
      const Vec3& b = tree.joints[static_cast<size_t>(c[k])].tail;
      if (tail_less_zyx(b, a)) {
        report.violations.push_back({ViolationKind::UnsortedChildren, p, "children not sorted by (z,y,x)"});
        break;
      }
    }
  }

  // Spring chains must form single paths: at most one spring child per
  // chain member, and chain positions must increase down the path.
  for (int i = 0; i < n; ++i) {
    const auto& j = tree.joints[static_cast<size_t>(i)];
    if (j.type.kind != BoneKind::Spring) continue;
    int spring_children = 0;
    for (int c : kids[static_cast<size_t>(i)]) {
      const auto& cj = tree.joints[static_cast<size_t>(c)];
      if (cj.type.kind == BoneKind::Spring && cj.type.chain_id == j.type.chain_id) {
        ++spring_children;
        if (cj.type.chain_pos != j.type.chain_pos + 1) {
          report.violations.push_back({ViolationKind::BrokenSpringChain, c, "chain position not consecutive"});
        }
      }
    }
    if (spring_children > 1) {
      report.violations.push_back({ViolationKind::BrokenSpringChain, i, "more than one spring child in chain"});
    }
  }

  return report;
}

ValidationReport validate_asset(const RigAsset& asset) {
  ValidationReport report = validate_tree(asset.skeleton);
  const int nv = asset.mesh.vertex_count();
  if (asset.skin.joint_count != asset.skeleton.joint_count()) {
    report.violations.push_back({ViolationKind::ShapeMismatch, -1, "skin column count differs from joint count"});
  }
  if (asset.skin.vertex_count() != nv) {
    report.violations.push_back({ViolationKind::ShapeMismatch, -1, "skin row count differs from vertex count"});
  }
  for (const auto& f : asset.mesh.faces) {
    for (int idx : f) {
      if (idx < 0 || idx >= nv) {
        report.violations.push_back({ViolationKind::InvalidMesh, -1, "face index out of range"});
        break;
      }
    }
  }
  if (!asset.mesh.normals.empty()) {
    if (static_cast<int>(asset.mesh.normals.size()) != nv) {
      report.violations.push_back({ViolationKind::InvalidMesh, -1, "normal count differs from vertex count"});
    } else {
      for (const auto& nrm : asset.mesh.normals) {
        if (std::abs(nrm.norm() - 1.0) > 1e-4) {
          report.violations.push_back({ViolationKind::InvalidMesh, -1, "normal not unit length"});
          break;
        }
      }
    }
  }
  return report;
}

}  // namespace rigkit
