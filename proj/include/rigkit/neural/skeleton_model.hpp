#pragma once

#include <random>

#include "rigkit/ad/tensor.hpp"
#include "rigkit/neural/config.hpp"
#include "rigkit/token/tokenizer.hpp"

namespace rigkit {

/// Decoder-only autoregressive skeleton generator: a per-point encoder
/// pooled into learned-query context vectors, prepended as a prefix the
/// causal transformer attends to, with next-token prediction over the
/// rig vocabulary.
class SkeletonModel {
 public:
  SkeletonModel(int vocab_size, const TrainConfig& config, uint64_t seed);

  int vocab_size() const { return vocab_size_; }
  const TrainConfig& config() const { return config_; }

  std::vector<std::pair<std::string, ad::Tensor>>& named_parameters() { return params_; }
  const std::vector<std::pair<std::string, ad::Tensor>>& named_parameters() const { return params_; }

  /// Mean negative log-likelihood of each token given its prefix and the
  /// geometric context. Throws RangeError on out-of-vocabulary ids or
  /// sequences beyond the context limit.
  ad::Tensor ntp_loss(const std::vector<Vec3>& points, const std::vector<Vec3>& normals, const TokenSequence& tokens);

  /// Logits for the token following the given prefix.
  std::vector<double> next_logits(const std::vector<Vec3>& points, const std::vector<Vec3>& normals, const std::vector<int>& prefix);

  /// Next-token logits for every position (row t predicts token t+1).
  ad::Tensor logits_all(const std::vector<Vec3>& points, const std::vector<Vec3>& normals, const std::vector<int>& tokens);

 private:
  friend class Checkpoint;
  ad::Tensor p(const std::string& name) const;
  ad::Tensor encode_context(const std::vector<Vec3>& points, const std::vector<Vec3>& normals);
  ad::Tensor trunk(const ad::Tensor& context, const std::vector<int>& tokens);

  int vocab_size_ = 0;
  TrainConfig config_;
  std::vector<std::pair<std::string, ad::Tensor>> params_;
};

struct SamplerOptions {
  bool greedy = true;
  int top_k = 5;
  double temperature = 0.8;
  uint64_t seed = 0;
  int max_len = 1024;
};

struct GenerateResult {
  TokenSequence sequence;
  bool truncated = false;  // no EOS within the length limit
};

/// Autoregressive continuation of `prompt` (which must begin with BOS);
/// the output starts with the prompt verbatim and ends at EOS or the
/// length limit.
GenerateResult generate_skeleton(SkeletonModel& model, const std::vector<Vec3>& points, const std::vector<Vec3>& normals, const TokenSequence& prompt, const Vocabulary& vocab, const SamplerOptions& options = {});

}  // namespace rigkit
