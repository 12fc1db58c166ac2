#include "rigkit/cli/edit_script.hpp"

#include <json.hpp>

#include "rigkit/core/repair.hpp"

namespace rigkit {

EditScript edit_script_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("edit script: ") + e.what());
  }
  EditScript script;
  try {
    for (const auto& o : j.at("ops")) {
      EditOp op;
      op.op = o.at("op").get<std::string>();
      if (o.contains("joint")) op.joint = o["joint"].get<std::string>();
      if (o.contains("template")) op.template_id = o["template"].get<std::string>();
      if (o.contains("parent")) op.parent = o["parent"].get<std::string>();
      if (o.contains("type")) op.type = o["type"].get<std::string>();
      script.ops.push_back(std::move(op));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("edit script: ") + e.what());
  }
  return script;
}

EditResult apply_edit(const SkeletonTree& tree, const EditScript& script) {
  EditResult result;
  const int n = tree.joint_count();
  std::vector<bool> keep(static_cast<size_t>(n), true);
  for (const auto& op : script.ops) {
    if (op.op == "remove_spring_chains") {
      for (int i = 0; i < n; ++i) {
        if (tree.joints[static_cast<size_t>(i)].type.kind == BoneKind::Spring) keep[static_cast<size_t>(i)] = false;
      }
    } else if (op.op == "remove_subtree") {
      const int root = tree.find_joint(op.joint);
      if (root < 0) throw RangeError("edit: joint '" + op.joint + "' not in skeleton");
      auto kids = tree.children();
      std::vector<int> stack{root};
      while (!stack.empty()) {
        int cur = stack.back();
        stack.pop_back();
        keep[static_cast<size_t>(cur)] = false;
        for (int c : kids[static_cast<size_t>(cur)]) stack.push_back(c);
      }
    } else if (op.op == "keep_template") {
      for (int i = 0; i < n; ++i) {
        const auto& t = tree.joints[static_cast<size_t>(i)].type;
        if (!(t.kind == BoneKind::Template && t.template_id == op.template_id)) keep[static_cast<size_t>(i)] = false;
      }
    } else if (op.op == "add_branch_prompt") {
      if (op.parent.empty()) throw RangeError("edit: add_branch_prompt needs a parent name");
      result.branch_prompts.emplace_back(op.parent, op.type.empty() ? "branch" : op.type);
    } else {
      throw RangeError("edit: unknown op '" + op.op + "'");
    }
  }
  std::vector<int> old_to_new(static_cast<size_t>(n), -1);
  SkeletonTree out;
  for (int i = 0; i < n; ++i) {
    const auto& j = tree.joints[static_cast<size_t>(i)];
    const bool ancestors_kept = !j.parent || old_to_new[static_cast<size_t>(*j.parent)] >= 0;
    if (!keep[static_cast<size_t>(i)] || !ancestors_kept) continue;
    JointRecord copy = j;
    if (j.parent) copy.parent = old_to_new[static_cast<size_t>(*j.parent)];
    old_to_new[static_cast<size_t>(i)] = out.joint_count();
    out.joints.push_back(std::move(copy));
  }
  if (out.joints.empty()) throw RangeError("edit: no joints left after edits");
  out.root_index = 0;
  result.retained = sort_children(out);
  for (const auto& [parent, type] : result.branch_prompts) {
    if (result.retained.find_joint(parent) < 0) {
      throw RangeError("edit: prompt parent '" + parent + "' not in retained skeleton");
    }
  }
  return result;
}

TokenSequence build_edit_prompt(const EditResult& edit, const std::string& cls, const TemplateRegistry& registry, const Vocabulary& vocab) {
  TokenSequence prompt = tokenize(edit.retained, cls, registry, vocab);
  prompt.tokens.pop_back();  // keep the sequence open for generation
  for (const auto& [parent, type] : edit.branch_prompts) {
    const int j = edit.retained.find_joint(parent);
    prompt.tokens.push_back(type == "spring" ? vocab.spring_chain() : vocab.branch());
    const Vec3& t = edit.retained.joints[static_cast<size_t>(j)].tail;
    prompt.tokens.push_back(quantize(t.x(), vocab.coord_count));
    prompt.tokens.push_back(quantize(t.y(), vocab.coord_count));
    prompt.tokens.push_back(quantize(t.z(), vocab.coord_count));
  }
  return prompt;
}

}  // namespace rigkit
