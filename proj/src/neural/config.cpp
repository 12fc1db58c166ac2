#include "rigkit/neural/config.hpp"

#include <json.hpp>

namespace rigkit {

std::string train_config_to_json(const TrainConfig& c) {
  nlohmann::json j;
  j["steps"] = c.steps;
  j["batch"] = c.batch;
  j["lr_start"] = c.lr_start;
  j["lr_end"] = c.lr_end;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["weight_decay"] = c.weight_decay;
  j["adam_eps"] = c.adam_eps;
  j["freeze_probability"] = c.freeze_probability;
  j["lambda_w"] = c.lambda_w;
  j["lambda_a"] = c.lambda_a;
  j["lambda_x"] = c.lambda_x;
  j["physics_frames"] = c.physics_frames;
  j["bone_loss_normalization"] = c.bone_loss_normalization;
  j["use_physics"] = c.use_physics;
  j["use_freeze"] = c.use_freeze;
  j["points"] = c.points;
  j["context_tokens"] = c.context_tokens;
  j["feature"] = c.feature;
  j["layers"] = c.layers;
  j["heads"] = c.heads;
  j["max_len"] = c.max_len;
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

TrainConfig train_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("train config: ") + e.what());
  }
  TrainConfig c;
  auto get = [&](const char* key, auto& out) {
    if (j.contains(key)) out = j[key].get<std::decay_t<decltype(out)>>();
  };
  get("steps", c.steps);
  get("batch", c.batch);
  get("lr_start", c.lr_start);
  get("lr_end", c.lr_end);
  get("beta1", c.beta1);
  get("beta2", c.beta2);
  get("weight_decay", c.weight_decay);
  get("adam_eps", c.adam_eps);
  get("freeze_probability", c.freeze_probability);
  get("lambda_w", c.lambda_w);
  get("lambda_a", c.lambda_a);
  get("lambda_x", c.lambda_x);
  get("physics_frames", c.physics_frames);
  get("bone_loss_normalization", c.bone_loss_normalization);
  get("use_physics", c.use_physics);
  get("use_freeze", c.use_freeze);
  get("points", c.points);
  get("context_tokens", c.context_tokens);
  get("feature", c.feature);
  get("layers", c.layers);
  get("heads", c.heads);
  get("max_len", c.max_len);
  get("seed", c.seed);
  c.validate();
  return c;
}

}  // namespace rigkit
