#pragma once

#include <string>
#include <vector>

#include "rigkit/core/types.hpp"
#include "rigkit/token/vocabulary.hpp"

namespace rigkit {

enum class TokenForm { Naive, Optimized };

struct TokenSequence {
  std::vector<int> tokens;
  TokenForm provenance = TokenForm::Optimized;

  int length() const { return static_cast<int>(tokens.size()); }
};

/// M: x in [-1,1] -> floor((x+1)/2 * D), clamped to D-1 at x = 1.
int quantize(double x, int coord_count = 256);

/// M^-1: d -> 2d/D - 1.
double dequantize(int d, int coord_count = 256);

/// Naive form: BOS, root tail, then (parent tail, own tail) per non-root
/// joint in sorted DFS order, EOS. Coordinate cost 6T - 3.
TokenSequence tokenize_naive(const SkeletonTree& tree, const Vocabulary& vocab);

/// Optimized form: BOS, CLS, matched template segments, then branch/spring
/// segments over the remaining forest. Cost 3T + M + 4S + 1 plus BOS/EOS.
TokenSequence tokenize(const SkeletonTree& tree, const std::string& cls, const TemplateRegistry& registry, const Vocabulary& vocab);

struct DetokenizeOptions {
  // Joints closer than this merge during reconnection; defaults to the
  // quantization cell diagonal 2*sqrt(3)/D.
  double merge_eps = -1.0;
  // Strict mode errors when a segment parent has no merge target in range;
  // non-strict attaches to the globally nearest joint and sets a flag.
  bool strict = true;
};

struct DetokenizeResult {
  SkeletonTree tree;
  std::string class_tag;             // from the <cls> token (optimized form)
  bool merge_fallback_used = false;  // non-strict attachment happened
};

/// Rebuilds a skeleton from a token sequence (either form). Throws
/// ParseError on malformed framing, triplet misalignment or unknown ids.
DetokenizeResult detokenize(const TokenSequence& seq, const TemplateRegistry& registry, const Vocabulary& vocab, const DetokenizeOptions& opts = {});

struct TokenStats {
  double naive_mean = 0.0;
  double optimized_mean = 0.0;
  double reduction_pct = 0.0;
};

/// Mean sequence lengths (including BOS/EOS) under both codecs.
TokenStats token_stats(const std::vector<SkeletonTree>& trees, const std::vector<std::string>& classes, const TemplateRegistry& registry, const Vocabulary& vocab);

/// Newline-delimited integer list serialization, one sequence per line.
std::string sequences_to_text(const std::vector<TokenSequence>& seqs);
std::vector<TokenSequence> sequences_from_text(const std::string& text, const Vocabulary& vocab);

}  // namespace rigkit
