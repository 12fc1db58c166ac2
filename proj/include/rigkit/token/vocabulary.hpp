#pragma once

#include <string>
#include <vector>

#include "rigkit/core/types.hpp"

namespace rigkit {

struct TemplateSlot {
  std::string bone_name;
  int parent_slot = -1;  // -1 marks the fragment root
};

/// Named canonical skeleton fragment, matched by structure and bone names
/// and encoded with a single type token.
struct SkeletonTemplate {
  std::string id;
  std::vector<TemplateSlot> slots;  // slot parents precede children
  // Bone name the fragment root attaches under; empty means the fragment
  // roots the whole skeleton.
  std::string attach_name;

  int slot_count() const { return static_cast<int>(slots.size()); }
};

struct TemplateRegistry {
  std::vector<SkeletonTemplate> templates;

  const SkeletonTemplate* find(const std::string& id) const;
  static TemplateRegistry empty() { return {}; }
};

/// Built-in synthetic humanoid registry: a 28-slot body plus 12-slot hands,
/// so full bipeds carry 52 bones and handless ones 28.
const TemplateRegistry& default_template_registry();

/// Dataset class labels carried by the <cls> token.
const std::vector<std::string>& default_classes();

/// Token id layout: coordinate tokens 0..D-1, then BOS, EOS, BRANCH,
/// SPRING_CHAIN, then one CLS token per class, then one token per template.
struct Vocabulary {
  int coord_count = 256;  // D
  std::vector<std::string> classes;
  std::vector<std::string> template_ids;

  int bos() const { return coord_count; }
  int eos() const { return coord_count + 1; }
  int branch() const { return coord_count + 2; }
  int spring_chain() const { return coord_count + 3; }
  int cls_base() const { return coord_count + 4; }
  int template_base() const { return cls_base() + static_cast<int>(classes.size()); }
  int size() const { return template_base() + static_cast<int>(template_ids.size()); }

  bool is_coord(int id) const { return id >= 0 && id < coord_count; }
  bool is_cls(int id) const { return id >= cls_base() && id < template_base(); }
  bool is_template(int id) const { return id >= template_base() && id < size(); }

  int cls_id(const std::string& cls) const;
  int template_id(const std::string& tmpl) const;
  std::string class_of(int id) const;
  std::string template_of(int id) const;
  std::string token_name(int id) const;

  /// Manifest {token_name: id} covering the whole vocabulary.
  std::string manifest_json() const;

  static Vocabulary make(const TemplateRegistry& registry, std::vector<std::string> classes = default_classes(), int coord_count = 256);
};

}  // namespace rigkit
