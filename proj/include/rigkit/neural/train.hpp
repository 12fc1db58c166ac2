#pragma once

#include "rigkit/neural/skeleton_model.hpp"
#include "rigkit/neural/skin_model.hpp"
#include "rigkit/synth/generator.hpp"

namespace rigkit {

/// Adaptive moment optimizer with decoupled weight decay and a cosine
/// learning-rate schedule.
class AdamW {
 public:
  AdamW(std::vector<ad::Tensor> params, const TrainConfig& config);

  double lr_at(int step) const;
  void step();
  void zero_grad();
  int steps_taken() const { return t_; }

 private:
  std::vector<ad::Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  TrainConfig config_;
  int t_ = 0;
};

struct TrainLogEntry {
  int step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
  std::string to_jsonl() const;
};

/// Tokenized asset ready for skeleton training.
struct SkeletonSample {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  TokenSequence tokens;
};

SkeletonSample make_skeleton_sample(const RigAsset& asset, const TokenSequence& tokens, int point_count, std::mt19937_64& rng);

/// Next-token training over the dataset; aborts with RigError on NaN loss.
TrainLog train_skeleton(SkeletonModel& model, const std::vector<SkeletonSample>& dataset, const TrainConfig& config);

/// Asset plus its precomputed geodesic field and motions for skin training.
struct SkinSample {
  RigAsset asset;
  GeodesicField geodesic;
  std::vector<Motion> motions;
};

SkinSample make_skin_sample(const RigAsset& asset, const std::vector<Motion>& motions, int geodesic_resolution = 24);

TrainLog train_skin(SkinModel& model, const std::vector<SkinSample>& dataset, const TrainConfig& config);

/// Motion frames for the indirect-supervision horizon (first T frames of a
/// randomly chosen motion, retargeted onto the asset's skeleton).
std::vector<Pose> physics_horizon(const SkinSample& sample, int frames, std::mt19937_64& rng);

}  // namespace rigkit
