#include "rigkit/core/repair.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <tuple>

namespace rigkit {

namespace {

struct ZyxLess {
  const SkeletonTree& tree;
  bool operator()(int a, int b) const {
    const Vec3& ta = tree.joints[static_cast<size_t>(a)].tail;
    const Vec3& tb = tree.joints[static_cast<size_t>(b)].tail;
    if (ta.z() != tb.z()) return ta.z() < tb.z();
    if (ta.y() != tb.y()) return ta.y() < tb.y();
    if (ta.x() != tb.x()) return ta.x() < tb.x();
    return a < b;  // stable on exact ties
  }
};

/// Rebuilds a tree from an old tree plus a parent assignment (over old
/// indices), storing joints in sorted pre-order and refreshing heads.
SkeletonTree rebuild(const SkeletonTree& old, const std::vector<int>& parent, int root) {
  const int n = old.joint_count();
  std::vector<std::vector<int>> kids(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (i != root && parent[static_cast<size_t>(i)] >= 0) {
      kids[static_cast<size_t>(parent[static_cast<size_t>(i)])].push_back(i);
    }
  }
  for (auto& c : kids) std::sort(c.begin(), c.end(), ZyxLess{old});

  SkeletonTree out;
  out.joints.reserve(static_cast<size_t>(n));
  out.root_index = 0;
  std::vector<int> new_index(static_cast<size_t>(n), -1);
  // Iterative pre-order; children pushed in reverse so the smallest pops first.
  std::vector<int> stack{root};
  while (!stack.empty()) {
    int cur = stack.back();
    stack.pop_back();
    new_index[static_cast<size_t>(cur)] = static_cast<int>(out.joints.size());
    JointRecord j = old.joints[static_cast<size_t>(cur)];
    if (cur == root) {
      j.parent.reset();
    } else {
      j.parent = new_index[static_cast<size_t>(parent[static_cast<size_t>(cur)])];
      j.head = out.joints[static_cast<size_t>(*j.parent)].tail;
    }
    out.joints.push_back(std::move(j));
    const auto& c = kids[static_cast<size_t>(cur)];
    for (auto it = c.rbegin(); it != c.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

}  // namespace

SkeletonTree sort_children(const SkeletonTree& tree) {
  const int n = tree.joint_count();
  std::vector<int> parent(static_cast<size_t>(n), -1);
  for (int i = 0; i < n; ++i) {
    if (tree.joints[static_cast<size_t>(i)].parent) parent[static_cast<size_t>(i)] = *tree.joints[static_cast<size_t>(i)].parent;
  }
  return rebuild(tree, parent, tree.root_index);
}

std::pair<SkeletonTree, bool> repair_topology(const SkeletonTree& tree) {
  const int n = tree.joint_count();
  auto kids = tree.children();
  const auto& root_kids = kids[static_cast<size_t>(tree.root_index)];
  if (static_cast<int>(root_kids.size()) <= 4) return {tree, false};

  // Subtree sizes below each root child.
  std::vector<int> subtree(static_cast<size_t>(n), 1);
  for (int i = n - 1; i >= 0; --i) {
    const auto& j = tree.joints[static_cast<size_t>(i)];
    if (j.parent) subtree[static_cast<size_t>(*j.parent)] += subtree[static_cast<size_t>(i)];
  }
  int heavy = root_kids.front();
  for (int c : root_kids) {
    if (subtree[static_cast<size_t>(c)] > subtree[static_cast<size_t>(heavy)]) heavy = c;
  }
  if (2 * subtree[static_cast<size_t>(heavy)] <= n) return {tree, false};

  // Components after cutting all root outgoing edges: the old root alone
  // plus one component per former root child.
  std::vector<int> comp(static_cast<size_t>(n), -1);
  comp[static_cast<size_t>(tree.root_index)] = 0;
  int comp_count = 1;
  for (int c : root_kids) {
    const int id = comp_count++;
    std::vector<int> stack{c};
    while (!stack.empty()) {
      int cur = stack.back();
      stack.pop_back();
      comp[static_cast<size_t>(cur)] = id;
      for (int k : kids[static_cast<size_t>(cur)]) stack.push_back(k);
    }
  }

  // Candidate inter-component edges: nearest joint-tail pair per component
  // pair, ties broken by (index, index).
  struct Edge {
    double dist;
    int a, b;  // joint indices, a in comp(a) < comp(b)
  };
  std::vector<std::vector<Edge>> best(static_cast<size_t>(comp_count), std::vector<Edge>(static_cast<size_t>(comp_count), {std::numeric_limits<double>::infinity(), -1, -1}));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      int ci = comp[static_cast<size_t>(i)];
      int cj = comp[static_cast<size_t>(j)];
      if (ci == cj) continue;
      if (ci > cj) std::swap(ci, cj);
      double d = (tree.joints[static_cast<size_t>(i)].tail - tree.joints[static_cast<size_t>(j)].tail).norm();
      Edge& e = best[static_cast<size_t>(ci)][static_cast<size_t>(cj)];
      if (d < e.dist || (d == e.dist && std::make_pair(std::min(i, j), std::max(i, j)) < std::make_pair(std::min(e.a, e.b), std::max(e.a, e.b)))) {
        e = {d, std::min(i, j), std::max(i, j)};
      }
    }
  }

  // Kruskal over components.
  std::vector<Edge> edges;
  for (int a = 0; a < comp_count; ++a) {
    for (int b = a + 1; b < comp_count; ++b) edges.push_back(best[static_cast<size_t>(a)][static_cast<size_t>(b)]);
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    return std::tie(x.dist, x.a, x.b) < std::tie(y.dist, y.a, y.b);
  });
  std::vector<int> uf(static_cast<size_t>(comp_count));
  std::iota(uf.begin(), uf.end(), 0);
  auto find = [&](int x) {
    while (uf[static_cast<size_t>(x)] != x) x = uf[static_cast<size_t>(x)] = uf[static_cast<size_t>(uf[static_cast<size_t>(x)])];
    return x;
  };

  // Undirected adjacency: kept intra-component parent edges + MST links.
  std::vector<std::vector<int>> adj(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& j = tree.joints[static_cast<size_t>(i)];
    if (j.parent && i != tree.root_index && *j.parent != tree.root_index) {
      adj[static_cast<size_t>(i)].push_back(*j.parent);
      adj[static_cast<size_t>(*j.parent)].push_back(i);
    }
  }
  for (const Edge& e : edges) {
    int ra = find(comp[static_cast<size_t>(e.a)]);
    int rb = find(comp[static_cast<size_t>(e.b)]);
    if (ra == rb) continue;
    uf[static_cast<size_t>(ra)] = rb;
    adj[static_cast<size_t>(e.a)].push_back(e.b);
    adj[static_cast<size_t>(e.b)].push_back(e.a);
  }

  // Re-root at the heavy child; orientation of every edge follows from BFS.
  std::vector<int> parent(static_cast<size_t>(n), -1);
  std::vector<bool> seen(static_cast<size_t>(n), false);
  std::vector<int> queue{heavy};
  seen[static_cast<size_t>(heavy)] = true;
  for (size_t qi = 0; qi < queue.size(); ++qi) {
    int cur = queue[qi];
    for (int nb : adj[static_cast<size_t>(cur)]) {
      if (!seen[static_cast<size_t>(nb)]) {
        seen[static_cast<size_t>(nb)] = true;
        parent[static_cast<size_t>(nb)] = cur;
        queue.push_back(nb);
      }
    }
  }

  SkeletonTree out = rebuild(tree, parent, heavy);
  // The promoted root gets the zero-length-root convention.
  out.joints.front().head = out.joints.front().tail;
  return {out, true};
}

}  // namespace rigkit
