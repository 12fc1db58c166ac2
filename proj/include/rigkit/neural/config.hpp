#pragma once

#include <cstdint>
#include <string>

#include "rigkit/core/types.hpp"

namespace rigkit {

/// Training and model-size configuration shared by both models.
struct TrainConfig {
  int steps = 2000;
  int batch = 4;
  // Cosine annealing schedule.
  double lr_start = 1e-3;
  double lr_end = 2e-4;
  // Decoupled-weight-decay adaptive moments.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 0.01;
  double adam_eps = 1e-8;
  // Skin training.
  double freeze_probability = 0.3;
  double lambda_w = 1.0;
  double lambda_a = 0.1;
  double lambda_x = 1.0;
  int physics_frames = 3;
  bool bone_loss_normalization = true;
  bool use_physics = true;
  bool use_freeze = true;
  // Model dimensions.
  int points = 2048;
  int context_tokens = 16;
  int feature = 64;
  int layers = 2;
  int heads = 4;
  int max_len = 1024;
  uint64_t seed = 0;

  void validate() const {
    if (freeze_probability < 0.0 || freeze_probability >= 1.0) throw RangeError("config: freeze probability must be in [0,1)");
    if (lambda_w < 0.0 || lambda_a < 0.0 || lambda_x < 0.0) throw RangeError("config: loss weights must be nonnegative");
    if (feature % heads != 0) throw RangeError("config: feature dim must divide into heads");
  }
};

std::string train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const std::string& text);

}  // namespace rigkit
