#include "rigkit/token/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rigkit/core/repair.hpp"

namespace rigkit {

int quantize(double x, int coord_count) {
  if (x < -1.0 || x > 1.0) {
    throw RangeError("quantize: coordinate " + std::to_string(x) + " outside [-1,1]");
  }
  int d = static_cast<int>(std::floor((x + 1.0) / 2.0 * coord_count));
  return std::min(d, coord_count - 1);
}

double dequantize(int d, int coord_count) {
  if (d < 0 || d >= coord_count) {
    throw RangeError("dequantize: token " + std::to_string(d) + " outside [0," + std::to_string(coord_count) + ")");
  }
  return 2.0 * d / coord_count - 1.0;
}

namespace {

struct ZyxLess {
  const SkeletonTree& tree;
  bool operator()(int a, int b) const {
    const Vec3& ta = tree.joints[static_cast<size_t>(a)].tail;
    const Vec3& tb = tree.joints[static_cast<size_t>(b)].tail;
    if (ta.z() != tb.z()) return ta.z() < tb.z();
    if (ta.y() != tb.y()) return ta.y() < tb.y();
    if (ta.x() != tb.x()) return ta.x() < tb.x();
    return a < b;
  }
};

void emit_coords(std::vector<int>& out, const Vec3& p, int d) {
  out.push_back(quantize(p.x(), d));
  out.push_back(quantize(p.y(), d));
  out.push_back(quantize(p.z(), d));
}

/// Depth-first emission order: children ascending by (z,y,x).
std::vector<std::vector<int>> sorted_children(const SkeletonTree& tree) {
  auto kids = tree.children();
  for (auto& c : kids) std::sort(c.begin(), c.end(), ZyxLess{tree});
  return kids;
}

/// Tries to bind `tmpl` rooted at joint `root`; fills `slot_joint` on
/// success. Matching requires exact bone names and isomorphic slot
/// structure; extra (unmatched) children are permitted.
bool match_template_at(const SkeletonTree& tree, const std::vector<std::vector<int>>& kids, const SkeletonTemplate& tmpl, int root, const std::vector<bool>& taken, std::vector<int>& slot_joint) {
  slot_joint.assign(tmpl.slots.size(), -1);
  if (taken[static_cast<size_t>(root)]) return false;
  if (tree.joints[static_cast<size_t>(root)].name != tmpl.slots[0].bone_name) return false;
  slot_joint[0] = root;
  for (size_t s = 1; s < tmpl.slots.size(); ++s) {
    const int parent_joint = slot_joint[static_cast<size_t>(tmpl.slots[s].parent_slot)];
    if (parent_joint < 0) return false;
    int found = -1;
    for (int c : kids[static_cast<size_t>(parent_joint)]) {
      if (taken[static_cast<size_t>(c)]) continue;
      if (std::find(slot_joint.begin(), slot_joint.end(), c) != slot_joint.end()) continue;
      if (tree.joints[static_cast<size_t>(c)].name == tmpl.slots[s].bone_name) {
        found = c;
        break;
      }
    }
    if (found < 0) return false;
    slot_joint[s] = found;
  }
  return true;
}

}  // namespace

TokenSequence tokenize_naive(const SkeletonTree& tree, const Vocabulary& vocab) {
  if (tree.joint_count() == 0) throw RangeError("tokenize_naive: empty skeleton");
  const int d = vocab.coord_count;
  TokenSequence seq;
  seq.provenance = TokenForm::Naive;
  seq.tokens.push_back(vocab.bos());
  emit_coords(seq.tokens, tree.root().tail, d);

  auto kids = sorted_children(tree);
  std::vector<int> stack;
  const auto& root_kids = kids[static_cast<size_t>(tree.root_index)];
  for (auto it = root_kids.rbegin(); it != root_kids.rend(); ++it) stack.push_back(*it);
  while (!stack.empty()) {
    int b = stack.back();
    stack.pop_back();
    const auto& j = tree.joints[static_cast<size_t>(b)];
    emit_coords(seq.tokens, tree.joints[static_cast<size_t>(*j.parent)].tail, d);
    emit_coords(seq.tokens, j.tail, d);
    const auto& c = kids[static_cast<size_t>(b)];
    for (auto it = c.rbegin(); it != c.rend(); ++it) stack.push_back(*it);
  }
  seq.tokens.push_back(vocab.eos());
  return seq;
}

TokenSequence tokenize(const SkeletonTree& tree, const std::string& cls, const TemplateRegistry& registry, const Vocabulary& vocab) {
  if (tree.joint_count() == 0) throw RangeError("tokenize: empty skeleton");
  const int d = vocab.coord_count;
  const int n = tree.joint_count();
  auto kids = sorted_children(tree);

  TokenSequence seq;
  seq.provenance = TokenForm::Optimized;
  seq.tokens.push_back(vocab.bos());
  seq.tokens.push_back(vocab.cls_id(cls));

  // Template matching pass, registry order then joint order.
  std::vector<bool> matched(static_cast<size_t>(n), false);
  for (const auto& tmpl : registry.templates) {
    for (int root = 0; root < n; ++root) {
      const auto& rj = tree.joints[static_cast<size_t>(root)];
      if (tmpl.attach_name.empty()) {
        if (rj.parent) continue;
      } else {
        // The attachment joint must already be matched so that the decoder
        // can resolve the name when this segment is replayed.
        if (!rj.parent || !matched[static_cast<size_t>(*rj.parent)]) continue;
        if (tree.joints[static_cast<size_t>(*rj.parent)].name != tmpl.attach_name) continue;
      }
      std::vector<int> slot_joint;
      if (!match_template_at(tree, kids, tmpl, root, matched, slot_joint)) continue;
      seq.tokens.push_back(vocab.template_id(tmpl.id));
      for (int j : slot_joint) {
        matched[static_cast<size_t>(j)] = true;
        emit_coords(seq.tokens, tree.joints[static_cast<size_t>(j)].tail, d);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (tree.joints[static_cast<size_t>(i)].type.kind == BoneKind::Template && !matched[static_cast<size_t>(i)]) {
      throw ValidationError("joint '" + tree.joints[static_cast<size_t>(i)].name + "' is annotated as a template bone but matched no registry template");
    }
  }

  // DFS over the remaining forest.
  auto is_chain_head = [&](int b) {
    const auto& j = tree.joints[static_cast<size_t>(b)];
    if (j.type.kind != BoneKind::Spring) return false;
    if (!j.parent) return true;
    const auto& p = tree.joints[static_cast<size_t>(*j.parent)];
    return p.type.kind != BoneKind::Spring || p.type.chain_id != j.type.chain_id;
  };

  constexpr int kNoLast = -2;  // distinct from the root's parent index -1
  for (int r = 0; r < n; ++r) {
    const auto& rj = tree.joints[static_cast<size_t>(r)];
    if (matched[static_cast<size_t>(r)]) continue;
    if (rj.parent && !matched[static_cast<size_t>(*rj.parent)]) continue;  // interior of a remaining component

    std::vector<int> stack{r};
    int last = kNoLast;
    while (!stack.empty()) {
      int b = stack.back();
      stack.pop_back();
      const auto& j = tree.joints[static_cast<size_t>(b)];
      if (is_chain_head(b)) {
        seq.tokens.push_back(vocab.spring_chain());
        emit_coords(seq.tokens, j.parent ? tree.joints[static_cast<size_t>(*j.parent)].tail : j.tail, d);
        // Walk the chain; non-chain children start their own segments.
        std::vector<int> pending;
        int cur = b;
        while (cur >= 0) {
          const auto& cj = tree.joints[static_cast<size_t>(cur)];
          emit_coords(seq.tokens, cj.tail, d);
          int next = -1;
          for (int c : kids[static_cast<size_t>(cur)]) {
            const auto& cc = tree.joints[static_cast<size_t>(c)];
            if (cc.type.kind == BoneKind::Spring && cc.type.chain_id == cj.type.chain_id) {
              next = c;
            } else {
              pending.push_back(c);
            }
          }
          cur = next;
        }
        for (auto it = pending.rbegin(); it != pending.rend(); ++it) stack.push_back(*it);
        last = kNoLast;  // chain end is unambiguous only via a fresh segment marker
        continue;
      }
      int parent = j.parent ? *j.parent : -1;
      if (parent != last) {
        seq.tokens.push_back(vocab.branch());
        emit_coords(seq.tokens, parent >= 0 ? tree.joints[static_cast<size_t>(parent)].tail : j.tail, d);
      }
      emit_coords(seq.tokens, j.tail, d);
      last = b;
      const auto& c = kids[static_cast<size_t>(b)];
      for (auto it = c.rbegin(); it != c.rend(); ++it) stack.push_back(*it);
    }
  }

  seq.tokens.push_back(vocab.eos());
  return seq;
}

namespace {

class Decoder {
 public:
  Decoder(const TokenSequence& seq, const TemplateRegistry& registry, const Vocabulary& vocab, const DetokenizeOptions& opts)
      : seq_(seq), registry_(registry), vocab_(vocab), opts_(opts) {
    if (opts_.merge_eps < 0.0) {
      merge_eps_ = 2.0 * std::sqrt(3.0) / vocab_.coord_count;
    } else {
      merge_eps_ = opts_.merge_eps;
    }
  }

  DetokenizeResult run() {
    expect(vocab_.bos(), "sequence must begin with <bos>");
    if (seq_.provenance == TokenForm::Naive) {
      decode_naive();
    } else {
      decode_optimized();
    }
    if (pos_ != seq_.tokens.size()) throw ParseError("trailing tokens after <eos>");
    if (result_.tree.joints.empty()) throw ParseError("sequence decodes to an empty skeleton");
    result_.tree.root_index = 0;
    result_.tree = sort_children(result_.tree);
    return std::move(result_);
  }

 private:
  int peek() const {
    if (pos_ >= seq_.tokens.size()) throw ParseError("unexpected end of sequence");
    return seq_.tokens[pos_];
  }
  int next() {
    int t = peek();
    ++pos_;
    return t;
  }
  void expect(int token, const char* msg) {
    if (next() != token) throw ParseError(msg);
  }
  bool at_coord() const { return pos_ < seq_.tokens.size() && vocab_.is_coord(seq_.tokens[pos_]); }

  std::array<int, 3> read_triple() {
    std::array<int, 3> t{};
    for (int k = 0; k < 3; ++k) {
      if (!at_coord()) throw ParseError("coordinate triplet misaligned");
      t[static_cast<size_t>(k)] = next();
    }
    return t;
  }

  Vec3 to_vec(const std::array<int, 3>& t) const {
    return Vec3(dequantize(t[0], vocab_.coord_count), dequantize(t[1], vocab_.coord_count), dequantize(t[2], vocab_.coord_count));
  }

  int add_joint(const std::string& name, int parent, const Vec3& tail, BoneType type) {
    JointRecord j;
    j.name = name;
    j.tail = tail;
    j.type = std::move(type);
    if (parent >= 0) {
      j.parent = parent;
      j.head = result_.tree.joints[static_cast<size_t>(parent)].tail;
    } else {
      j.head = tail;
    }
    result_.tree.joints.push_back(std::move(j));
    return static_cast<int>(result_.tree.joints.size()) - 1;
  }

  /// Nearest decoded joint to p; ties by lower index. Strict mode requires
  /// the distance to be within merge_eps.
  int merge_target(const Vec3& p) {
    const auto& joints = result_.tree.joints;
    if (joints.empty()) throw ParseError("segment parent appears before any joint was decoded");
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < joints.size(); ++i) {
      double d = (joints[i].tail - p).norm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    if (best_d > merge_eps_) {
      if (opts_.strict) {
        throw ParseError("no joint within merge_eps of segment parent");
      }
      result_.merge_fallback_used = true;
    }
    return best;
  }

  void decode_naive() {
    auto root = read_triple();
    add_joint("j0", -1, to_vec(root), BoneType::plain());
    int n = 1;
    while (peek() != vocab_.eos()) {
      auto parent = read_triple();
      if (!at_coord()) throw ParseError("coordinate triplet misaligned");
      auto child = read_triple();
      int parent_idx = merge_target(to_vec(parent));
      add_joint("j" + std::to_string(n++), parent_idx, to_vec(child), BoneType::plain());
    }
    expect(vocab_.eos(), "sequence must end with <eos>");
  }

  void decode_optimized() {
    int cls = next();
    if (!vocab_.is_cls(cls)) throw ParseError("optimized sequence must carry a <cls> token after <bos>");
    result_.class_tag = vocab_.class_of(cls);
    while (true) {
      int t = next();
      if (t == vocab_.eos()) break;
      if (vocab_.is_template(t)) {
        decode_template_segment(vocab_.template_of(t));
      } else if (t == vocab_.branch()) {
        decode_run_segment(/*spring=*/false);
      } else if (t == vocab_.spring_chain()) {
        decode_run_segment(/*spring=*/true);
      } else if (vocab_.is_coord(t)) {
        throw ParseError("coordinate token outside any segment");
      } else {
        throw ParseError("unexpected token " + vocab_.token_name(t));
      }
    }
  }

  void decode_template_segment(const std::string& id) {
    const SkeletonTemplate* tmpl = registry_.find(id);
    if (!tmpl) throw ParseError("unknown template '" + id + "'");
    std::vector<Vec3> tails;
    tails.reserve(tmpl->slots.size());
    for (size_t s = 0; s < tmpl->slots.size(); ++s) tails.push_back(to_vec(read_triple()));

    int attach = -1;
    if (tmpl->attach_name.empty()) {
      if (!result_.tree.joints.empty()) {
        if (opts_.strict) throw ParseError("second root template in sequence");
        attach = merge_nearest_any(tails[0]);
      }
    } else {
      attach = result_.tree.find_joint(tmpl->attach_name);
      if (attach < 0) {
        if (opts_.strict) throw ParseError("template attachment joint '" + tmpl->attach_name + "' not decoded yet");
        attach = merge_nearest_any(tails[0]);
      }
    }
    std::vector<int> slot_index(tmpl->slots.size(), -1);
    for (size_t s = 0; s < tmpl->slots.size(); ++s) {
      int parent = tmpl->slots[s].parent_slot < 0 ? attach : slot_index[static_cast<size_t>(tmpl->slots[s].parent_slot)];
      slot_index[s] = add_joint(tmpl->slots[s].bone_name, parent, tails[s], BoneType::tmpl(id, static_cast<int>(s)));
    }
  }

  int merge_nearest_any(const Vec3& p) {
    result_.merge_fallback_used = true;
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < result_.tree.joints.size(); ++i) {
      double d = (result_.tree.joints[i].tail - p).norm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    return best;
  }

  void decode_run_segment(bool spring) {
    auto parent_triple = read_triple();
    if (!at_coord()) throw ParseError(spring ? "empty spring segment" : "empty branch segment");

    int chain = spring ? chain_count_++ : -1;
    int chain_pos = 0;
    int last;
    if (result_.tree.joints.empty()) {
      // Root segment: the prefix triple is the root's own coordinates and
      // the first joint triple repeats them.
      auto first = read_triple();
      Vec3 root_tail = to_vec(parent_triple);
      BoneType type = spring ? BoneType::spring(chain, chain_pos++) : BoneType::plain();
      int root = add_joint(fresh_name(spring, chain, 0), -1, root_tail, type);
      if (first != parent_triple) {
        if (opts_.strict) throw ParseError("root segment does not repeat the root coordinates");
        result_.merge_fallback_used = true;
        BoneType ctype = spring ? BoneType::spring(chain, chain_pos++) : BoneType::plain();
        last = add_joint(fresh_name(spring, chain, 1), root, to_vec(first), ctype);
      } else {
        last = root;
      }
    } else {
      last = merge_target(to_vec(parent_triple));
    }
    while (at_coord()) {
      auto t = read_triple();
      BoneType type = spring ? BoneType::spring(chain, chain_pos++) : BoneType::plain();
      last = add_joint(fresh_name(spring, chain, static_cast<int>(result_.tree.joints.size())), last, to_vec(t), type);
    }
  }

  std::string fresh_name(bool spring, int chain, int n) {
    if (spring) return "s" + std::to_string(chain) + "_" + std::to_string(n);
    return "b" + std::to_string(n);
  }

  const TokenSequence& seq_;
  const TemplateRegistry& registry_;
  const Vocabulary& vocab_;
  DetokenizeOptions opts_;
  double merge_eps_;
  size_t pos_ = 0;
  int chain_count_ = 0;
  DetokenizeResult result_;
};

}  // namespace

DetokenizeResult detokenize(const TokenSequence& seq, const TemplateRegistry& registry, const Vocabulary& vocab, const DetokenizeOptions& opts) {
  return Decoder(seq, registry, vocab, opts).run();
}

TokenStats token_stats(const std::vector<SkeletonTree>& trees, const std::vector<std::string>& classes, const TemplateRegistry& registry, const Vocabulary& vocab) {
  if (trees.empty()) throw RangeError("token_stats: empty tree list");
  double naive_sum = 0.0;
  double opt_sum = 0.0;
  for (size_t i = 0; i < trees.size(); ++i) {
    naive_sum += tokenize_naive(trees[i], vocab).length();
    opt_sum += tokenize(trees[i], classes[i], registry, vocab).length();
  }
  TokenStats s;
  s.naive_mean = naive_sum / static_cast<double>(trees.size());
  s.optimized_mean = opt_sum / static_cast<double>(trees.size());
  s.reduction_pct = 100.0 * (1.0 - s.optimized_mean / s.naive_mean);
  return s;
}

std::string sequences_to_text(const std::vector<TokenSequence>& seqs) {
  std::ostringstream os;
  for (const auto& s : seqs) {
    for (size_t i = 0; i < s.tokens.size(); ++i) {
      if (i) os << ' ';
      os << s.tokens[i];
    }
    os << '\n';
  }
  return os.str();
}

std::vector<TokenSequence> sequences_from_text(const std::string& text, const Vocabulary& vocab) {
  std::vector<TokenSequence> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    TokenSequence seq;
    std::istringstream ls(line);
    int tok;
    while (ls >> tok) seq.tokens.push_back(tok);
    if (seq.tokens.empty()) continue;
    seq.provenance = (seq.tokens.size() > 1 && vocab.is_cls(seq.tokens[1])) ? TokenForm::Optimized : TokenForm::Naive;
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace rigkit
