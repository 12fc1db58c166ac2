#include "rigkit/token/vocabulary.hpp"

#include <json.hpp>

namespace rigkit {

const SkeletonTemplate* TemplateRegistry::find(const std::string& id) const {
  for (const auto& t : templates) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

namespace {

SkeletonTemplate make_body28() {
  SkeletonTemplate t;
  t.id = "biped:body";
  t.attach_name = "";
  auto add = [&](const char* name, int parent) { t.slots.push_back({name, parent}); };
  add("hips", -1);        // 0
  add("spine", 0);        // 1
  add("chest", 1);        // 2
  add("upper_chest", 2);  // 3
  add("neck", 3);         // 4
  add("head", 4);         // 5
  add("head_tip", 5);     // 6
  add("shoulder.L", 3);   // 7
  add("upper_arm.L", 7);  // 8
  add("forearm.L", 8);    // 9
  add("hand.L", 9);       // 10
  add("shoulder.R", 3);   // 11
  add("upper_arm.R", 11); // 12
  add("forearm.R", 12);   // 13
  add("hand.R", 13);      // 14
  add("thigh.L", 0);      // 15
  add("shin.L", 15);      // 16
  add("foot.L", 16);      // 17
  add("toe.L", 17);       // 18
  add("toe_tip.L", 18);   // 19
  add("thigh.R", 0);      // 20
  add("shin.R", 20);      // 21
  add("foot.R", 21);      // 22
  add("toe.R", 22);       // 23
  add("toe_tip.R", 23);   // 24
  add("breast.L", 3);     // 25
  add("breast.R", 3);     // 26
  add("pelvis_tip", 0);   // 27
  return t;
}

SkeletonTemplate make_hand12(const char* side, const char* attach) {
  SkeletonTemplate t;
  t.id = std::string("biped:hand_") + side;
  t.attach_name = attach;
  std::string s = std::string(".") + (side[0] == 'l' ? "L" : "R");
  auto add = [&](const std::string& name, int parent) { t.slots.push_back({name + s, parent}); };
  add("palm", -1);     // 0
  add("thumb1", 0);    // 1
  add("thumb2", 1);    // 2
  add("index1", 0);    // 3
  add("index2", 3);    // 4
  add("index3", 4);    // 5
  add("middle1", 0);   // 6
  add("middle2", 6);   // 7
  add("middle3", 7);   // 8
  add("ring1", 0);     // 9
  add("ring2", 9);     // 10
  add("ring3", 10);    // 11
  return t;
}

}  // namespace

const TemplateRegistry& default_template_registry() {
  static const TemplateRegistry registry = [] {
    TemplateRegistry r;
    r.templates.push_back(make_body28());
    r.templates.push_back(make_hand12("l", "hand.L"));
    r.templates.push_back(make_hand12("r", "hand.R"));
    return r;
  }();
  return registry;
}

const std::vector<std::string>& default_classes() {
  static const std::vector<std::string> classes = {
      "vroid", "mixamo", "biped", "quadruped", "bird", "insect", "water", "static", "other"};
  return classes;
}

Vocabulary Vocabulary::make(const TemplateRegistry& registry, std::vector<std::string> classes, int coord_count) {
  Vocabulary v;
  v.coord_count = coord_count;
  v.classes = std::move(classes);
  for (const auto& t : registry.templates) v.template_ids.push_back(t.id);
  return v;
}

int Vocabulary::cls_id(const std::string& cls) const {
  for (size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] == cls) return cls_base() + static_cast<int>(i);
  }
  throw RangeError("unknown class '" + cls + "'");
}

int Vocabulary::template_id(const std::string& tmpl) const {
  for (size_t i = 0; i < template_ids.size(); ++i) {
    if (template_ids[i] == tmpl) return template_base() + static_cast<int>(i);
  }
  throw RangeError("unknown template '" + tmpl + "'");
}

std::string Vocabulary::class_of(int id) const {
  if (!is_cls(id)) throw RangeError("token is not a class token");
  return classes[static_cast<size_t>(id - cls_base())];
}

std::string Vocabulary::template_of(int id) const {
  if (!is_template(id)) throw RangeError("token is not a template token");
  return template_ids[static_cast<size_t>(id - template_base())];
}

std::string Vocabulary::token_name(int id) const {
  if (is_coord(id)) return "<coord:" + std::to_string(id) + ">";
  if (id == bos()) return "<bos>";
  if (id == eos()) return "<eos>";
  if (id == branch()) return "<branch>";
  if (id == spring_chain()) return "<spring_chain>";
  if (is_cls(id)) return "<cls:" + class_of(id) + ">";
  if (is_template(id)) return "<template:" + template_of(id) + ">";
  throw RangeError("token id out of range: " + std::to_string(id));
}

std::string Vocabulary::manifest_json() const {
  nlohmann::json m;
  for (int id = 0; id < size(); ++id) m[token_name(id)] = id;
  return m.dump(2) + "\n";
}

}  // namespace rigkit
