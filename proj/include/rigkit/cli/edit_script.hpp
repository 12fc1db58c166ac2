#pragma once

#include <string>
#include <vector>

#include "rigkit/token/tokenizer.hpp"

namespace rigkit {

/// One declarative skeleton edit. Supported ops: remove_spring_chains,
/// remove_subtree(joint), keep_template(template), and
/// add_branch_prompt(parent, type) which seeds the regeneration prompt.
struct EditOp {
  std::string op;
  std::string joint;
  std::string template_id;
  std::string parent;
  std::string type;  // "branch" (default) or "spring"
};

struct EditScript {
  std::vector<EditOp> ops;
};

EditScript edit_script_from_json(const std::string& text);

struct EditResult {
  SkeletonTree retained;
  // (parent name, segment type) pairs appended to the generation prompt.
  std::vector<std::pair<std::string, std::string>> branch_prompts;
};

/// Applies removals and keeps; joints whose ancestors were dropped go with
/// them. Throws RangeError when a referenced name is missing or nothing
/// remains.
EditResult apply_edit(const SkeletonTree& tree, const EditScript& script);

/// Retained skeleton re-tokenized without its <eos>, plus one opened
/// segment per add_branch_prompt hint.
TokenSequence build_edit_prompt(const EditResult& edit, const std::string& cls, const TemplateRegistry& registry, const Vocabulary& vocab);

}  // namespace rigkit
