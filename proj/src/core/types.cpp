#include "rigkit/core/types.hpp"

#include <algorithm>
#include <cmath>

namespace rigkit {

std::vector<std::vector<int>> SkeletonTree::children() const {
  std::vector<std::vector<int>> out(joints.size());
  for (size_t i = 0; i < joints.size(); ++i) {
    if (joints[i].parent) {
      int p = *joints[i].parent;
      if (p >= 0 && p < static_cast<int>(joints.size())) {
        out[static_cast<size_t>(p)].push_back(static_cast<int>(i));
      }
    }
  }
  return out;
}

int SkeletonTree::find_joint(const std::string& name) const {
  for (size_t i = 0; i < joints.size(); ++i) {
    if (joints[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

double SkinWeights::at(int vertex, int joint) const {
  for (const auto& [j, w] : rows[static_cast<size_t>(vertex)]) {
    if (j == joint) return w;
  }
  return 0.0;
}

std::vector<double> SkinWeights::dense_row(int vertex) const {
  std::vector<double> out(static_cast<size_t>(joint_count), 0.0);
  for (const auto& [j, w] : rows[static_cast<size_t>(vertex)]) out[static_cast<size_t>(j)] = w;
  return out;
}

SkinWeights SkinWeights::from_dense(const std::vector<std::vector<double>>& dense) {
  SkinWeights sw;
  sw.joint_count = dense.empty() ? 0 : static_cast<int>(dense.front().size());
  sw.rows.resize(dense.size());
  for (size_t v = 0; v < dense.size(); ++v) {
    for (size_t j = 0; j < dense[v].size(); ++j) {
      if (dense[v][j] != 0.0) sw.rows[v].emplace_back(static_cast<int>(j), dense[v][j]);
    }
  }
  return sw;
}

}  // namespace rigkit
