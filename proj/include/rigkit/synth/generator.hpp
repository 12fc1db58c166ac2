#pragma once

#include <map>
#include <random>

#include "rigkit/core/types.hpp"
#include "rigkit/physics/pose.hpp"

namespace rigkit {

/// Controls the procedural rig generator.
struct GenSpec {
  // Sampling probability per class; must sum to 1.
  std::map<std::string, double> class_mix = {
      {"vroid", 0.25}, {"mixamo", 0.05}, {"biped", 0.10}, {"quadruped", 0.20},
      {"bird", 0.15},  {"static", 0.05}, {"insect", 0.10}, {"other", 0.10}};
  double hand_probability = 0.6;  // bipeds with hands carry 52 bones, else 28
  int vroid_min_chains = 15;      // short hair/skirt chains
  int vroid_max_chains = 30;
  double spring_tail_rate = 0.5;  // quadruped/other tails become spring chains
  int capsule_segments = 6;       // radial resolution of the bone capsules
  int capsule_rings = 2;          // interior rings per capsule
  int motions_per_asset = 3;
  uint64_t seed = 0;

  void validate() const;
};

std::string genspec_to_json(const GenSpec& spec);
GenSpec genspec_from_json(const std::string& text);

struct GeneratedAsset {
  RigAsset asset;
  std::vector<Motion> motions;
};

/// One procedurally generated rigged asset: skeleton per class recipe,
/// capsule-union mesh, smooth-falloff ground-truth weights, spring chains
/// with random coefficients and synthetic motions. Output is normalized to
/// [-1,1]^3 and always passes validate_asset.
GeneratedAsset gen_asset(const GenSpec& spec, std::mt19937_64& rng);

/// Paper-style augmentation probabilities and ranges.
struct AugmentParams {
  double p_rotate = 0.4;
  double rotate_range_deg = 30.0;  // per-axis Euler, XYZ order
  double p_scale = 0.5;
  double scale_min = 0.8, scale_max = 1.0;
  double p_template_motion = 0.6;  // vroid/mixamo classes
  double p_bone_rotate = 0.4;      // other classes
  double bone_rotate_range_deg = 15.0;
};

/// Applies the augmentations with their configured probabilities: skeleton
/// and mesh move together, spring/plain structure is preserved and the
/// result is re-normalized to [-1,1]^3.
RigAsset augment(const RigAsset& asset, const std::vector<Motion>& motions, std::mt19937_64& rng, const AugmentParams& params = {});

/// Area-weighted surface samples with interpolated normals.
struct PointSample {
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;
};
PointSample sample_surface(const Mesh& mesh, int count, std::mt19937_64& rng);

/// Smooth per-vertex normals from face geometry.
std::vector<Vec3> compute_vertex_normals(const Mesh& mesh);

/// Ground-truth weights by squared-exponential falloff from each bone
/// (sigma = half the bone length), truncated below 1e-3 and renormalized.
SkinWeights falloff_weights(const Mesh& mesh, const SkeletonTree& tree);

}  // namespace rigkit
