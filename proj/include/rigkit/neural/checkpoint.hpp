#pragma once

#include <string>

#include "rigkit/neural/skeleton_model.hpp"
#include "rigkit/neural/skin_model.hpp"

namespace rigkit {

/// Versioned binary container: magic, version, manifest JSON (kind, config,
/// seed, tensor names + shapes) followed by raw little-endian float32
/// arrays in manifest order.
class Checkpoint {
 public:
  static void save_skeleton(const SkeletonModel& model, const std::string& path);
  static SkeletonModel load_skeleton(const std::string& path);
  static void save_skin(const SkinModel& model, const std::string& path);
  static SkinModel load_skin(const std::string& path);
};

}  // namespace rigkit
