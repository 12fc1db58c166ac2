#pragma once

#include <random>

#include "rigkit/ad/tensor.hpp"
#include "rigkit/deform/voxel_geodesic.hpp"
#include "rigkit/neural/config.hpp"
#include "rigkit/physics/pose.hpp"

namespace rigkit {

/// q k^T / sqrt(F) with F the full shared feature dimension.
ad::Tensor scaled_cross_attention_logits(const ad::Tensor& q, const ad::Tensor& k, int feature_dim);

/// Bone-point cross-attention skin predictor: a sinusoidal bone encoder
/// over (head, tail) 6-vectors, a per-point encoder, multi-head attention
/// whose per-pair weights concatenate with the voxel geodesic distance into
/// the weight decoder, and a reversed-attention bone-attribute head.
class SkinModel {
 public:
  SkinModel(const TrainConfig& config, uint64_t seed);

  const TrainConfig& config() const { return config_; }
  std::vector<std::pair<std::string, ad::Tensor>>& named_parameters() { return params_; }
  const std::vector<std::pair<std::string, ad::Tensor>>& named_parameters() const { return params_; }

  struct Forward {
    ad::Tensor weights;     // [N, J], rows softmax-normalized
    ad::Tensor attributes;  // [J, 3] in [0,1]: drag, stiffness, gravity
  };

  /// Predicts skin weights and spring attributes for mesh vertices against
  /// the skeleton. Shapes must agree with the geodesic field.
  Forward forward(const std::vector<Vec3>& points, const std::vector<Vec3>& normals, const SkeletonTree& tree, const GeodesicField& geodesic);

  /// Plain sparse weights (entries below 1e-4 dropped, rows renormalized)
  /// and spring parameters from a forward pass.
  static SkinWeights extract_weights(const Forward& f, double threshold = 1e-4);
  static std::vector<SpringParams> extract_attributes(const Forward& f);

 private:
  friend class Checkpoint;
  ad::Tensor p(const std::string& name) const;

  TrainConfig config_;
  std::vector<std::pair<std::string, ad::Tensor>> params_;
};

/// Per-vertex loss weights making each influencing bone contribute equally:
/// weight(k) = (1/J) * sum_i [W_gt(k,i) > 0] / S_i with S_i the number of
/// vertices bone i influences. Bones influencing nothing are skipped.
struct EquivalenceWeights {
  std::vector<double> weights;  // per vertex
  int skipped_bones = 0;        // bones with no influenced vertices
};
EquivalenceWeights skeletal_equivalence_weights(const SkinWeights& gt);

/// Independent freeze decisions per bone with probability p.
std::vector<uint8_t> freeze_bones(std::mt19937_64& rng, double p, int bones);

struct SkinLossParts {
  ad::Tensor total;
  double kl = 0.0;
  double attr_l2 = 0.0;
  double physics = 0.0;
};

/// Combined skin loss: KL(gt rows ‖ predicted rows) + L2 on attributes +
/// summed per-frame weighted vertex L2 between simulations with predicted
/// vs ground-truth parameters, differentiable end to end through LBS and
/// the spring steps. Frozen bones use ground truth and receive no gradient.
SkinLossParts skin_loss(const SkinModel::Forward& pred, const RigAsset& asset, const std::vector<Pose>& motion_frames, const std::vector<uint8_t>& frozen, const TrainConfig& config);

}  // namespace rigkit
