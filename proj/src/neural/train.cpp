#include "rigkit/neural/train.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

namespace rigkit {

AdamW::AdamW(std::vector<ad::Tensor> params, const TrainConfig& config) : params_(std::move(params)), config_(config) {
  for (const auto& p : params_) {
    m_.emplace_back(p.value().size(), 0.0);
    v_.emplace_back(p.value().size(), 0.0);
  }
}

double AdamW::lr_at(int step) const {
  const double t = config_.steps <= 1 ? 1.0 : static_cast<double>(step) / (config_.steps - 1);
  return config_.lr_end + 0.5 * (config_.lr_start - config_.lr_end) * (1.0 + std::cos(M_PI * std::min(1.0, t)));
}

void AdamW::step() {
  const double lr = lr_at(t_);
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, t_);
  const double bc2 = 1.0 - std::pow(config_.beta2, t_);
  for (size_t i = 0; i < params_.size(); ++i) {
    auto& value = params_[i].mutable_value();
    const auto& grad = params_[i].grad();
    if (grad.empty()) continue;
    for (size_t k = 0; k < value.size(); ++k) {
      m_[i][k] = config_.beta1 * m_[i][k] + (1.0 - config_.beta1) * grad[k];
      v_[i][k] = config_.beta2 * v_[i][k] + (1.0 - config_.beta2) * grad[k] * grad[k];
      const double mhat = m_[i][k] / bc1;
      const double vhat = v_[i][k] / bc2;
      value[k] -= lr * (mhat / (std::sqrt(vhat) + config_.adam_eps) + config_.weight_decay * value[k]);
    }
  }
}

void AdamW::zero_grad() {
  for (auto& p : params_) p.clear_grad();
}

std::string TrainLog::to_jsonl() const {
  std::ostringstream os;
  for (const auto& e : entries) {
    nlohmann::json j{{"step", e.step}, {"loss", e.loss}, {"lr", e.lr}};
    os << j.dump() << "\n";
  }
  return os.str();
}

SkeletonSample make_skeleton_sample(const RigAsset& asset, const TokenSequence& tokens, int point_count, std::mt19937_64& rng) {
  SkeletonSample s;
  auto sample = sample_surface(asset.mesh, point_count, rng);
  s.points = std::move(sample.positions);
  s.normals = std::move(sample.normals);
  s.tokens = tokens;
  return s;
}

namespace {

std::vector<ad::Tensor> raw_params(std::vector<std::pair<std::string, ad::Tensor>>& named) {
  std::vector<ad::Tensor> out;
  out.reserve(named.size());
  for (auto& [name, t] : named) out.push_back(t);
  return out;
}

}  // namespace

TrainLog train_skeleton(SkeletonModel& model, const std::vector<SkeletonSample>& dataset, const TrainConfig& config) {
  if (dataset.empty()) throw RangeError("train_skeleton: empty dataset");
  AdamW opt(raw_params(model.named_parameters()), config);
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<size_t> pick(0, dataset.size() - 1);
  TrainLog log;
  for (int step = 0; step < config.steps; ++step) {
    opt.zero_grad();
    ad::Tensor loss;
    const int batch = std::max(1, config.batch);
    for (int b = 0; b < batch; ++b) {
      const auto& sample = dataset[pick(rng)];
      ad::Tensor l = model.ntp_loss(sample.points, sample.normals, sample.tokens);
      loss = loss.defined() ? loss + l : l;
    }
    loss = loss / static_cast<double>(batch);
    const double value = loss.item();
    if (!std::isfinite(value)) {
      throw RigError("nan", "train_skeleton: non-finite loss at step " + std::to_string(step));
    }
    ad::backward(loss);
    opt.step();
    if (step % 25 == 0 || step + 1 == config.steps) {
      log.entries.push_back({step, value, opt.lr_at(step)});
    }
  }
  return log;
}

SkinSample make_skin_sample(const RigAsset& asset, const std::vector<Motion>& motions, int geodesic_resolution) {
  SkinSample s;
  s.asset = asset;
  s.geodesic = voxel_geodesic(asset.mesh, asset.skeleton, geodesic_resolution);
  s.motions = motions;
  return s;
}

std::vector<Pose> physics_horizon(const SkinSample& sample, int frames, std::mt19937_64& rng) {
  std::vector<Pose> out;
  if (sample.motions.empty()) {
    for (int f = 0; f < frames; ++f) out.push_back(Pose::identity(sample.asset.skeleton));
    return out;
  }
  std::uniform_int_distribution<size_t> pick(0, sample.motions.size() - 1);
  const Motion& motion = sample.motions[pick(rng)];
  for (int f = 0; f < frames; ++f) {
    const auto& frame = motion.frames[static_cast<size_t>(f) % motion.frames.size()];
    out.push_back(retarget_frame(sample.asset.skeleton, frame));
  }
  return out;
}

TrainLog train_skin(SkinModel& model, const std::vector<SkinSample>& dataset, const TrainConfig& config) {
  if (dataset.empty()) throw RangeError("train_skin: empty dataset");
  AdamW opt(raw_params(model.named_parameters()), config);
  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<size_t> pick(0, dataset.size() - 1);
  TrainLog log;
  for (int step = 0; step < config.steps; ++step) {
    opt.zero_grad();
    ad::Tensor loss;
    const int batch = std::max(1, config.batch);
    for (int b = 0; b < batch; ++b) {
      const auto& sample = dataset[pick(rng)];
      const auto& mesh = sample.asset.mesh;
      auto normals = mesh.normals.empty() ? compute_vertex_normals(mesh) : mesh.normals;
      auto fwd = model.forward(mesh.vertices, normals, sample.asset.skeleton, sample.geodesic);
      auto frozen = config.use_freeze ? freeze_bones(rng, config.freeze_probability, sample.asset.skeleton.joint_count())
                                      : std::vector<uint8_t>(static_cast<size_t>(sample.asset.skeleton.joint_count()), 0);
      auto poses = physics_horizon(sample, config.physics_frames, rng);
      auto parts = skin_loss(fwd, sample.asset, poses, frozen, config);
      loss = loss.defined() ? loss + parts.total : parts.total;
    }
    loss = loss / static_cast<double>(batch);
    const double value = loss.item();
    if (!std::isfinite(value)) {
      throw RigError("nan", "train_skin: non-finite loss at step " + std::to_string(step));
    }
    ad::backward(loss);
    opt.step();
    if (step % 25 == 0 || step + 1 == config.steps) {
      log.entries.push_back({step, value, opt.lr_at(step)});
    }
  }
  return log;
}

}  // namespace rigkit
