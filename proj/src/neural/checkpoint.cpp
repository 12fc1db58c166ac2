#include "rigkit/neural/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace rigkit {

namespace {

constexpr char kMagic[4] = {'R', 'K', 'C', 'P'};
constexpr uint32_t kVersion = 1;

void write_all(std::ofstream& out, const void* data, size_t bytes) { out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes)); }

void save_params(std::ofstream& out, const std::string& kind, const nlohmann::json& extra, const std::vector<std::pair<std::string, ad::Tensor>>& params) {
  nlohmann::json manifest;
  manifest["kind"] = kind;
  manifest["extra"] = extra;
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& [name, t] : params) {
    tensors.push_back({{"name", name}, {"shape", t.shape()}});
  }
  manifest["tensors"] = std::move(tensors);
  const std::string text = manifest.dump();

  write_all(out, kMagic, 4);
  write_all(out, &kVersion, sizeof(kVersion));
  const uint64_t len = text.size();
  write_all(out, &len, sizeof(len));
  write_all(out, text.data(), text.size());
  for (const auto& [name, t] : params) {
    std::vector<float> buf(t.value().begin(), t.value().end());
    write_all(out, buf.data(), buf.size() * sizeof(float));
  }
}

nlohmann::json load_manifest(std::ifstream& in, const std::string& path) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ParseError("checkpoint " + path + ": bad magic");
  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kVersion) throw ParseError("checkpoint " + path + ": unsupported version " + std::to_string(version));
  uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw ParseError("checkpoint " + path + ": truncated manifest");
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint " + path + ": " + e.what());
  }
}

void load_params(std::ifstream& in, const std::string& path, const nlohmann::json& manifest, std::vector<std::pair<std::string, ad::Tensor>>& params) {
  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != params.size()) throw ParseError("checkpoint " + path + ": tensor count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    const std::string name = tensors[i].at("name").get<std::string>();
    const auto shape = tensors[i].at("shape").get<ad::Shape>();
    if (name != params[i].first || shape != params[i].second.shape()) {
      throw ParseError("checkpoint " + path + ": tensor '" + name + "' does not match the model layout");
    }
    std::vector<float> buf(static_cast<size_t>(ad::shape_size(shape)));
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!in) throw ParseError("checkpoint " + path + ": truncated tensor data");
    auto& value = params[i].second.mutable_value();
    for (size_t k = 0; k < buf.size(); ++k) value[k] = static_cast<double>(buf[k]);
  }
}

}  // namespace

void Checkpoint::save_skeleton(const SkeletonModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write checkpoint: " + path);
  nlohmann::json extra;
  extra["vocab_size"] = model.vocab_size();
  extra["config"] = nlohmann::json::parse(train_config_to_json(model.config()));
  save_params(out, "skeleton", extra, model.named_parameters());
}

SkeletonModel Checkpoint::load_skeleton(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint: " + path);
  auto manifest = load_manifest(in, path);
  if (manifest.at("kind") != "skeleton") throw ParseError("checkpoint " + path + ": not a skeleton model");
  const auto& extra = manifest.at("extra");
  TrainConfig config = train_config_from_json(extra.at("config").dump());
  SkeletonModel model(extra.at("vocab_size").get<int>(), config, config.seed);
  load_params(in, path, manifest, model.named_parameters());
  return model;
}

void Checkpoint::save_skin(const SkinModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write checkpoint: " + path);
  nlohmann::json extra;
  extra["config"] = nlohmann::json::parse(train_config_to_json(model.config()));
  save_params(out, "skin", extra, model.named_parameters());
}

SkinModel Checkpoint::load_skin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint: " + path);
  auto manifest = load_manifest(in, path);
  if (manifest.at("kind") != "skin") throw ParseError("checkpoint " + path + ": not a skin model");
  const auto& extra = manifest.at("extra");
  TrainConfig config = train_config_from_json(extra.at("config").dump());
  SkinModel model(config, config.seed);
  load_params(in, path, manifest, model.named_parameters());
  return model;
}

}  // namespace rigkit
