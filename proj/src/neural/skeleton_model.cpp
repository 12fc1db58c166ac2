#include "rigkit/neural/skeleton_model.hpp"

#include <algorithm>
#include <cmath>

namespace rigkit {

using ad::Tensor;
using ad::concat_rows;
using ad::concat_cols;

namespace {

std::vector<double> gaussian(std::mt19937_64& rng, int n, double scale) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> out(static_cast<size_t>(n));
  for (auto& v : out) v = d(rng);
  return out;
}

Tensor points_input(const std::vector<Vec3>& points, const std::vector<Vec3>& normals) {
  if (points.size() != normals.size()) throw RangeError("point cloud and normals disagree");
  std::vector<double> data;
  data.reserve(points.size() * 6);
  for (size_t i = 0; i < points.size(); ++i) {
    for (int k = 0; k < 3; ++k) data.push_back(points[i][k]);
    for (int k = 0; k < 3; ++k) data.push_back(normals[i][k]);
  }
  return Tensor::constant({static_cast<int>(points.size()), 6}, std::move(data));
}

}  // namespace

SkeletonModel::SkeletonModel(int vocab_size, const TrainConfig& config, uint64_t seed) : vocab_size_(vocab_size), config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const int f = config_.feature;
  const int k = config_.context_tokens;
  const double s = 0.02;
  auto add = [&](const std::string& name, ad::Shape shape, double scale) {
    params_.emplace_back(name, Tensor::param(shape, gaussian(rng, ad::shape_size(shape), scale)));
  };
  auto add_const = [&](const std::string& name, ad::Shape shape, double value) {
    params_.emplace_back(name, Tensor::param(shape, std::vector<double>(static_cast<size_t>(ad::shape_size(shape)), value)));
  };
  add("point.w1", {6, f}, 0.3);
  add_const("point.b1", {f}, 0.0);
  add("point.w2", {f, f}, s * 4);
  add_const("point.b2", {f}, 0.0);
  add("pool.queries", {k, f}, 0.3);
  add("pool.proj", {f, f}, s * 4);
  add_const("pool.bias", {f}, 0.0);
  add("embed.token", {vocab_size_, f}, s);
  add("embed.pos", {config_.max_len, f}, s);
  const int dh = f / config_.heads;
  for (int l = 0; l < config_.layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    add_const(pre + "ln1.g", {f}, 1.0);
    add_const(pre + "ln1.b", {f}, 0.0);
    for (int h = 0; h < config_.heads; ++h) {
      const std::string hp = pre + "head" + std::to_string(h) + ".";
      add(hp + "wq", {f, dh}, s * 4);
      add(hp + "wk", {f, dh}, s * 4);
      add(hp + "wv", {f, dh}, s * 4);
    }
    add(pre + "wo", {f, f}, s * 4);
    add_const(pre + "ln2.g", {f}, 1.0);
    add_const(pre + "ln2.b", {f}, 0.0);
    add(pre + "mlp.w1", {f, 4 * f}, s * 4);
    add_const(pre + "mlp.b1", {4 * f}, 0.0);
    add(pre + "mlp.w2", {4 * f, f}, s * 4);
    add_const(pre + "mlp.b2", {f}, 0.0);
  }
  add_const("final.ln.g", {f}, 1.0);
  add_const("final.ln.b", {f}, 0.0);
  // Zero-initialized head: the untrained model is exactly uniform.
  add_const("out.w", {f, vocab_size_}, 0.0);
  add_const("out.b", {vocab_size_}, 0.0);
}

Tensor SkeletonModel::p(const std::string& name) const {
  for (const auto& [n, t] : params_) {
    if (n == name) return t;
  }
  throw RangeError("unknown parameter '" + name + "'");
}

Tensor SkeletonModel::encode_context(const std::vector<Vec3>& points, const std::vector<Vec3>& normals) {
  Tensor x = points_input(points, normals);
  Tensor fp = relu(matmul(x, p("point.w1")) + p("point.b1"));
  fp = matmul(fp, p("point.w2")) + p("point.b2");  // [N, F]
  Tensor att = softmax_rows(matmul(p("pool.queries"), transpose(fp)) / std::sqrt(static_cast<double>(config_.feature)));
  Tensor pooled = matmul(att, fp);  // [K, F]
  return matmul(pooled, p("pool.proj")) + p("pool.bias");
}

Tensor SkeletonModel::trunk(const Tensor& context, const std::vector<int>& tokens) {
  const int f = config_.feature;
  const int k = config_.context_tokens;
  const int t = static_cast<int>(tokens.size());
  if (k + t > config_.max_len) throw RangeError("sequence length " + std::to_string(t) + " exceeds the context limit");
  for (int id : tokens) {
    if (id < 0 || id >= vocab_size_) throw RangeError("token id " + std::to_string(id) + " outside vocabulary");
  }

  Tensor tok = gather_rows(p("embed.token"), tokens) + slice_rows(p("embed.pos"), 0, t);
  Tensor x = concat_rows({context, tok});  // [K+T, F]
  const int s = k + t;

  // Prefix-causal mask: everything sees the context, tokens see earlier tokens.
  std::vector<double> mask(static_cast<size_t>(s) * static_cast<size_t>(s), 0.0);
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      if (!(j < k || j <= i)) mask[static_cast<size_t>(i * s + j)] = -1e9;
    }
  }
  Tensor mask_t = Tensor::constant({s, s}, std::move(mask));

  const int dh = f / config_.heads;
  for (int l = 0; l < config_.layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    Tensor h = layernorm_rows(x, p(pre + "ln1.g"), p(pre + "ln1.b"));
    std::vector<Tensor> heads;
    for (int hd = 0; hd < config_.heads; ++hd) {
      const std::string hp = pre + "head" + std::to_string(hd) + ".";
      Tensor q = matmul(h, p(hp + "wq"));
      Tensor key = matmul(h, p(hp + "wk"));
      Tensor v = matmul(h, p(hp + "wv"));
      Tensor logits = matmul(q, transpose(key)) / std::sqrt(static_cast<double>(dh)) + mask_t;
      heads.push_back(matmul(softmax_rows(logits), v));
    }
    x = x + matmul(concat_cols(heads), p(pre + "wo"));
    Tensor h2 = layernorm_rows(x, p(pre + "ln2.g"), p(pre + "ln2.b"));
    Tensor m = matmul(relu(matmul(h2, p(pre + "mlp.w1")) + p(pre + "mlp.b1")), p(pre + "mlp.w2")) + p(pre + "mlp.b2");
    x = x + m;
  }
  return layernorm_rows(x, p("final.ln.g"), p("final.ln.b"));
}

ad::Tensor SkeletonModel::ntp_loss(const std::vector<Vec3>& points, const std::vector<Vec3>& normals, const TokenSequence& tokens) {
  if (tokens.tokens.empty()) throw RangeError("ntp_loss: empty sequence");
  Tensor x = trunk(encode_context(points, normals), tokens.tokens);
  const int k = config_.context_tokens;
  const int t = static_cast<int>(tokens.tokens.size());
  // Row k-1 predicts token 0, row k+i predicts token i+1.
  Tensor predictors = slice_rows(x, k - 1, k + t - 1);
  Tensor logits = matmul(predictors, p("out.w")) + p("out.b");
  return nll_rows(log_softmax_rows(logits), tokens.tokens);
}

std::vector<double> SkeletonModel::next_logits(const std::vector<Vec3>& points, const std::vector<Vec3>& normals, const std::vector<int>& prefix) {
  Tensor x = trunk(encode_context(points, normals), prefix);
  Tensor last = slice_rows(x, x.rows() - 1, x.rows());
  Tensor logits = matmul(last, p("out.w")) + p("out.b");
  return logits.value();
}

ad::Tensor SkeletonModel::logits_all(const std::vector<Vec3>& points, const std::vector<Vec3>& normals, const std::vector<int>& tokens) {
  Tensor x = trunk(encode_context(points, normals), tokens);
  Tensor rows = slice_rows(x, config_.context_tokens, config_.context_tokens + static_cast<int>(tokens.size()));
  return matmul(rows, p("out.w")) + p("out.b");
}

GenerateResult generate_skeleton(SkeletonModel& model, const std::vector<Vec3>& points, const std::vector<Vec3>& normals, const TokenSequence& prompt, const Vocabulary& vocab, const SamplerOptions& options) {
  if (prompt.tokens.empty() || prompt.tokens.front() != vocab.bos()) {
    throw RangeError("generate: prompt must begin with <bos>");
  }
  GenerateResult out;
  out.sequence = prompt;
  std::mt19937_64 rng(options.seed);
  const int limit = std::min(options.max_len, model.config().max_len - model.config().context_tokens);
  while (static_cast<int>(out.sequence.tokens.size()) < limit) {
    auto logits = model.next_logits(points, normals, out.sequence.tokens);
    int next;
    if (options.greedy) {
      next = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    } else {
      std::vector<int> order(logits.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
      const int k = std::min<int>(options.top_k, static_cast<int>(order.size()));
      std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) { return logits[static_cast<size_t>(a)] > logits[static_cast<size_t>(b)]; });
      std::vector<double> probs(static_cast<size_t>(k));
      double mx = logits[static_cast<size_t>(order[0])];
      double denom = 0.0;
      for (int i = 0; i < k; ++i) {
        probs[static_cast<size_t>(i)] = std::exp((logits[static_cast<size_t>(order[static_cast<size_t>(i)])] - mx) / options.temperature);
        denom += probs[static_cast<size_t>(i)];
      }
      std::uniform_real_distribution<double> u(0.0, denom);
      double pick = u(rng);
      int chosen = 0;
      double acc = 0.0;
      for (int i = 0; i < k; ++i) {
        acc += probs[static_cast<size_t>(i)];
        if (pick <= acc) {
          chosen = i;
          break;
        }
      }
      next = order[static_cast<size_t>(chosen)];
    }
    out.sequence.tokens.push_back(next);
    if (next == vocab.eos()) return out;
  }
  out.truncated = true;
  return out;
}

}  // namespace rigkit
