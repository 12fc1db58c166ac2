#pragma once

#include "rigkit/core/types.hpp"

namespace rigkit {

/// Vertex x joint matrix of shortest-path distances through occupied
/// voxels (surface + flood-filled interior), in model units.
struct GeodesicField {
  int vertex_count = 0;
  int joint_count = 0;
  int resolution = 0;
  double voxel_size = 0.0;
  std::vector<double> dist;  // row-major vertex x joint

  double at(int vertex, int joint) const { return dist[static_cast<size_t>(vertex) * static_cast<size_t>(joint_count) + static_cast<size_t>(joint)]; }
};

/// Multi-source Dijkstra over a 26-connected voxelization of the mesh from
/// each bone segment to every vertex. Pairs in disconnected voxel
/// components fall back to Euclidean distance plus a penalty of 2 so they
/// always rank behind any in-cube geodesic. Throws RangeError when the
/// voxelization is empty or the resolution is below 16.
GeodesicField voxel_geodesic(const Mesh& mesh, const SkeletonTree& tree, int resolution);

inline constexpr double kGeodesicDisconnectedPenalty = 2.0;

}  // namespace rigkit
