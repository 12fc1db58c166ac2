#include "rigkit/deform/voxel_geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include <Eigen/Geometry>

namespace rigkit {

namespace {

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

/// Separating-axis triangle/axis-aligned-box overlap (Akenine-Moller).
bool tri_box_overlap(const Vec3& center, const Vec3& half, const Vec3& tv0, const Vec3& tv1, const Vec3& tv2) {
  const Vec3 v0 = tv0 - center;
  const Vec3 v1 = tv1 - center;
  const Vec3 v2 = tv2 - center;
  const Vec3 e0 = v1 - v0;
  const Vec3 e1 = v2 - v1;
  const Vec3 e2 = v0 - v2;

  auto axis_test = [&](const Vec3& axis) {
    const double p0 = v0.dot(axis);
    const double p1 = v1.dot(axis);
    const double p2 = v2.dot(axis);
    const double r = half.x() * std::abs(axis.x()) + half.y() * std::abs(axis.y()) + half.z() * std::abs(axis.z());
    const double mn = std::min({p0, p1, p2});
    const double mx = std::max({p0, p1, p2});
    return !(mn > r || mx < -r);
  };

  for (const Vec3& e : {e0, e1, e2}) {
    if (!axis_test(Vec3(0, -e.z(), e.y()))) return false;
    if (!axis_test(Vec3(e.z(), 0, -e.x()))) return false;
    if (!axis_test(Vec3(-e.y(), e.x(), 0))) return false;
  }
  // Box face normals.
  for (int k = 0; k < 3; ++k) {
    const double mn = std::min({v0[k], v1[k], v2[k]});
    const double mx = std::max({v0[k], v1[k], v2[k]});
    if (mn > half[k] || mx < -half[k]) return false;
  }
  // Triangle plane.
  const Vec3 n = e0.cross(e1);
  return axis_test(n);
}

struct Grid {
  Vec3 origin;
  double h = 0.0;
  int nx = 0, ny = 0, nz = 0;

  int cells() const { return nx * ny * nz; }
  int index(int x, int y, int z) const { return (z * ny + y) * nx + x; }
  bool inside(int x, int y, int z) const { return x >= 0 && x < nx && y >= 0 && y < ny && z >= 0 && z < nz; }
  Vec3 center(int x, int y, int z) const { return origin + h * Vec3(x + 0.5, y + 0.5, z + 0.5); }
  Eigen::Vector3i cell_of(const Vec3& p) const {
    Eigen::Vector3i c(static_cast<int>(std::floor((p.x() - origin.x()) / h)), static_cast<int>(std::floor((p.y() - origin.y()) / h)), static_cast<int>(std::floor((p.z() - origin.z()) / h)));
    c.x() = std::clamp(c.x(), 0, nx - 1);
    c.y() = std::clamp(c.y(), 0, ny - 1);
    c.z() = std::clamp(c.z(), 0, nz - 1);
    return c;
  }
};

}  // namespace

GeodesicField voxel_geodesic(const Mesh& mesh, const SkeletonTree& tree, int resolution) {
  if (resolution < 16) throw RangeError("voxel_geodesic: resolution must be at least 16");
  if (mesh.vertices.empty() || mesh.faces.empty()) throw RangeError("voxel_geodesic: empty mesh");

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  for (const auto& j : tree.joints) {
    lo = lo.cwiseMin(j.tail).cwiseMin(j.head);
    hi = hi.cwiseMax(j.tail).cwiseMax(j.head);
  }
  const double extent = (hi - lo).maxCoeff();
  if (extent <= 0.0) throw RangeError("voxel_geodesic: degenerate bounds");
  Grid grid;
  grid.h = extent / resolution;
  grid.origin = lo - Vec3::Constant(grid.h);
  grid.nx = static_cast<int>(std::ceil((hi.x() - lo.x()) / grid.h)) + 2;
  grid.ny = static_cast<int>(std::ceil((hi.y() - lo.y()) / grid.h)) + 2;
  grid.nz = static_cast<int>(std::ceil((hi.z() - lo.z()) / grid.h)) + 2;

  // Surface voxels by conservative triangle rasterization. The half extent
  // is padded so geometry lying exactly on a cell boundary marks both cells.
  std::vector<uint8_t> surface(static_cast<size_t>(grid.cells()), 0);
  const Vec3 half = Vec3::Constant(grid.h / 2.0 * (1.0 + 1e-9) + 1e-12);
  for (const auto& f : mesh.faces) {
    const Vec3& a = mesh.vertices[static_cast<size_t>(f[0])];
    const Vec3& b = mesh.vertices[static_cast<size_t>(f[1])];
    const Vec3& c = mesh.vertices[static_cast<size_t>(f[2])];
    Vec3 tlo = a.cwiseMin(b).cwiseMin(c);
    Vec3 thi = a.cwiseMax(b).cwiseMax(c);
    auto clo = grid.cell_of(tlo);
    auto chi = grid.cell_of(thi);
    for (int z = std::max(0, clo.z() - 1); z <= std::min(grid.nz - 1, chi.z() + 1); ++z)
      for (int y = std::max(0, clo.y() - 1); y <= std::min(grid.ny - 1, chi.y() + 1); ++y)
        for (int x = std::max(0, clo.x() - 1); x <= std::min(grid.nx - 1, chi.x() + 1); ++x) {
          if (!surface[static_cast<size_t>(grid.index(x, y, z))] && tri_box_overlap(grid.center(x, y, z), half, a, b, c)) {
            surface[static_cast<size_t>(grid.index(x, y, z))] = 1;
          }
        }
  }

  // Exterior flood fill (6-connectivity) from the grid boundary.
  std::vector<uint8_t> exterior(static_cast<size_t>(grid.cells()), 0);
  {
    std::queue<Eigen::Vector3i> queue;
    auto push = [&](int x, int y, int z) {
      if (!grid.inside(x, y, z)) return;
      const int i = grid.index(x, y, z);
      if (surface[static_cast<size_t>(i)] || exterior[static_cast<size_t>(i)]) return;
      exterior[static_cast<size_t>(i)] = 1;
      queue.push({x, y, z});
    };
    for (int z = 0; z < grid.nz; ++z)
      for (int y = 0; y < grid.ny; ++y)
        for (int x = 0; x < grid.nx; ++x) {
          if (x == 0 || y == 0 || z == 0 || x == grid.nx - 1 || y == grid.ny - 1 || z == grid.nz - 1) push(x, y, z);
        }
    while (!queue.empty()) {
      auto c = queue.front();
      queue.pop();
      push(c.x() + 1, c.y(), c.z());
      push(c.x() - 1, c.y(), c.z());
      push(c.x(), c.y() + 1, c.z());
      push(c.x(), c.y() - 1, c.z());
      push(c.x(), c.y(), c.z() + 1);
      push(c.x(), c.y(), c.z() - 1);
    }
  }

  std::vector<uint8_t> occupied(static_cast<size_t>(grid.cells()), 0);
  int occupied_count = 0;
  for (int i = 0; i < grid.cells(); ++i) {
    occupied[static_cast<size_t>(i)] = surface[static_cast<size_t>(i)] || !exterior[static_cast<size_t>(i)];
    occupied_count += occupied[static_cast<size_t>(i)];
  }
  if (occupied_count == 0) throw RangeError("voxel_geodesic: empty voxelization");

  GeodesicField field;
  field.vertex_count = mesh.vertex_count();
  field.joint_count = tree.joint_count();
  field.resolution = resolution;
  field.voxel_size = grid.h;
  field.dist.assign(static_cast<size_t>(mesh.vertex_count()) * static_cast<size_t>(tree.joint_count()), 0.0);

  std::vector<int> vertex_cell(static_cast<size_t>(mesh.vertex_count()));
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    auto c = grid.cell_of(mesh.vertices[static_cast<size_t>(v)]);
    vertex_cell[static_cast<size_t>(v)] = grid.index(c.x(), c.y(), c.z());
  }

  std::vector<double> dist(static_cast<size_t>(grid.cells()));
  std::vector<uint8_t> traversable(static_cast<size_t>(grid.cells()));
  using Item = std::pair<double, int>;
  for (int j = 0; j < tree.joint_count(); ++j) {
    const Vec3 a = tree.joints[static_cast<size_t>(j)].head;
    const Vec3 b = tree.joints[static_cast<size_t>(j)].tail;

    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    traversable = occupied;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    // Seed every cell the segment passes through with its exact distance
    // to the segment (sub-voxel accuracy at the source).
    const double seg_len = (b - a).norm();
    const int steps = std::max(1, static_cast<int>(std::ceil(seg_len / (grid.h * 0.25))));
    for (int s = 0; s <= steps; ++s) {
      const Vec3 p = a + (b - a) * (static_cast<double>(s) / steps);
      auto c = grid.cell_of(p);
      const int idx = grid.index(c.x(), c.y(), c.z());
      traversable[static_cast<size_t>(idx)] = 1;
      const double d0 = point_segment_distance(grid.center(c.x(), c.y(), c.z()), a, b);
      if (d0 < dist[static_cast<size_t>(idx)]) {
        dist[static_cast<size_t>(idx)] = d0;
        heap.push({d0, idx});
      }
    }
    while (!heap.empty()) {
      auto [d, idx] = heap.top();
      heap.pop();
      if (d > dist[static_cast<size_t>(idx)]) continue;
      const int x = idx % grid.nx;
      const int y = (idx / grid.nx) % grid.ny;
      const int z = idx / (grid.nx * grid.ny);
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0 && dz == 0) continue;
            const int nx = x + dx, ny = y + dy, nz = z + dz;
            if (!grid.inside(nx, ny, nz)) continue;
            const int nidx = grid.index(nx, ny, nz);
            if (!traversable[static_cast<size_t>(nidx)]) continue;
            const double nd = d + grid.h * std::sqrt(static_cast<double>(dx * dx + dy * dy + dz * dz));
            if (nd < dist[static_cast<size_t>(nidx)]) {
              dist[static_cast<size_t>(nidx)] = nd;
              heap.push({nd, nidx});
            }
          }
    }

    for (int v = 0; v < mesh.vertex_count(); ++v) {
      // Complete the path from nearby cell centers in a straight line; this
      // removes the center-offset bias while staying an upper bound on the
      // true geodesic (and at least the Euclidean distance).
      const Vec3& p = mesh.vertices[static_cast<size_t>(v)];
      const int idx = vertex_cell[static_cast<size_t>(v)];
      const int x = idx % grid.nx;
      const int y = (idx / grid.nx) % grid.ny;
      const int z = idx / (grid.nx * grid.ny);
      double d = std::numeric_limits<double>::infinity();
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy, nz = z + dz;
            if (!grid.inside(nx, ny, nz)) continue;
            const double dn = dist[static_cast<size_t>(grid.index(nx, ny, nz))];
            if (!std::isfinite(dn)) continue;
            d = std::min(d, dn + (p - grid.center(nx, ny, nz)).norm());
          }
      if (!std::isfinite(d)) {
        d = point_segment_distance(p, a, b) + kGeodesicDisconnectedPenalty;
      }
      field.dist[static_cast<size_t>(v) * static_cast<size_t>(tree.joint_count()) + static_cast<size_t>(j)] = d;
    }
  }
  return field;
}

}  // namespace rigkit
