#include "rigkit/core/rig_io.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "rigkit/core/validate.hpp"

namespace rigkit {

using nlohmann::json;

namespace {

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ParseError(std::string(what) + ": expected [x,y,z]");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json type_to_json(const BoneType& t) {
  json out;
  switch (t.kind) {
    case BoneKind::Plain:
      out["kind"] = "plain";
      break;
    case BoneKind::Template:
      out["kind"] = "template";
      out["template"] = {{"id", t.template_id}, {"slot", t.slot}};
      break;
    case BoneKind::Spring:
      out["kind"] = "spring";
      out["chain"] = {{"id", t.chain_id}, {"pos", t.chain_pos}};
      break;
  }
  return out;
}

BoneType type_from_json(const json& j) {
  if (!j.contains("kind")) throw ParseError("joint type: missing kind");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "plain") return BoneType::plain();
  if (kind == "template") {
    const auto& t = j.at("template");
    return BoneType::tmpl(t.at("id").get<std::string>(), t.at("slot").get<int>());
  }
  if (kind == "spring") {
    const auto& c = j.at("chain");
    return BoneType::spring(c.at("id").get<int>(), c.at("pos").get<int>());
  }
  throw ParseError("joint type: unknown kind '" + kind + "'");
}

}  // namespace

std::string rig_to_json(const RigAsset& asset) {
  json root;
  root["class"] = asset.class_tag;

  json joints = json::array();
  for (size_t i = 0; i < asset.skeleton.joints.size(); ++i) {
    const auto& j = asset.skeleton.joints[i];
    json jj;
    jj["name"] = j.name;
    jj["parent"] = j.parent ? json(*j.parent) : json(nullptr);
    jj["tail"] = vec3_to_json(j.tail);
    if (!j.parent) jj["head"] = vec3_to_json(j.head);
    jj["type"] = type_to_json(j.type);
    if (j.spring) {
      jj["spring"] = {{"drag", j.spring->drag},
                      {"stiffness", j.spring->stiffness},
                      {"gravity", j.spring->gravity},
                      {"gravity_dir", vec3_to_json(j.spring->gravity_dir)}};
    }
    joints.push_back(std::move(jj));
  }
  root["joints"] = std::move(joints);

  json mesh;
  json verts = json::array();
  for (const auto& v : asset.mesh.vertices) verts.push_back(vec3_to_json(v));
  mesh["vertices"] = std::move(verts);
  json faces = json::array();
  for (const auto& f : asset.mesh.faces) faces.push_back(json::array({f[0], f[1], f[2]}));
  mesh["faces"] = std::move(faces);
  if (!asset.mesh.normals.empty()) {
    json normals = json::array();
    for (const auto& nrm : asset.mesh.normals) normals.push_back(vec3_to_json(nrm));
    mesh["normals"] = std::move(normals);
  }
  root["mesh"] = std::move(mesh);

  json entries = json::array();
  for (int v = 0; v < asset.skin.vertex_count(); ++v) {
    for (const auto& [j, w] : asset.skin.rows[static_cast<size_t>(v)]) {
      entries.push_back(json::array({v, j, w}));
    }
  }
  root["skin"] = {{"entries", std::move(entries)}};

  return root.dump(2) + "\n";
}

RigAsset rig_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("rig json: ") + e.what());
  }
  RigAsset asset;
  try {
    asset.class_tag = root.at("class").get<std::string>();
    for (const auto& jj : root.at("joints")) {
      JointRecord j;
      j.name = jj.at("name").get<std::string>();
      if (!jj.at("parent").is_null()) j.parent = jj.at("parent").get<int>();
      j.tail = vec3_from_json(jj.at("tail"), "tail");
      j.type = jj.contains("type") ? type_from_json(jj["type"]) : BoneType::plain();
      if (jj.contains("spring")) {
        SpringParams sp;
        sp.drag = jj["spring"].at("drag").get<double>();
        sp.stiffness = jj["spring"].at("stiffness").get<double>();
        sp.gravity = jj["spring"].at("gravity").get<double>();
        sp.gravity_dir = vec3_from_json(jj["spring"].at("gravity_dir"), "gravity_dir");
        j.spring = sp;
      }
      if (!j.parent) {
        j.head = jj.contains("head") ? vec3_from_json(jj["head"], "head") : j.tail;
      }
      asset.skeleton.joints.push_back(std::move(j));
    }
    for (size_t i = 0; i < asset.skeleton.joints.size(); ++i) {
      auto& j = asset.skeleton.joints[i];
      if (!j.parent) {
        asset.skeleton.root_index = static_cast<int>(i);
      } else {
        if (*j.parent < 0 || *j.parent >= static_cast<int>(asset.skeleton.joints.size())) {
          throw ParseError("joint parent index out of range");
        }
        j.head = asset.skeleton.joints[static_cast<size_t>(*j.parent)].tail;
      }
    }
    const auto& mesh = root.at("mesh");
    for (const auto& v : mesh.at("vertices")) asset.mesh.vertices.push_back(vec3_from_json(v, "vertex"));
    for (const auto& f : mesh.at("faces")) {
      if (!f.is_array() || f.size() != 3) throw ParseError("face: expected [i,j,k]");
      asset.mesh.faces.push_back({f[0].get<int>(), f[1].get<int>(), f[2].get<int>()});
    }
    if (mesh.contains("normals")) {
      for (const auto& nrm : mesh["normals"]) asset.mesh.normals.push_back(vec3_from_json(nrm, "normal"));
    }
    asset.skin.joint_count = asset.skeleton.joint_count();
    asset.skin.rows.resize(static_cast<size_t>(asset.mesh.vertex_count()));
    if (root.contains("skin")) {
      for (const auto& e : root["skin"].at("entries")) {
        if (!e.is_array() || e.size() != 3) throw ParseError("skin entry: expected [vertex, joint, weight]");
        int v = e[0].get<int>();
        int j = e[1].get<int>();
        double w = e[2].get<double>();
        if (v < 0 || v >= asset.mesh.vertex_count()) throw ParseError("skin entry: vertex index out of range");
        if (j < 0 || j >= asset.skin.joint_count) throw ParseError("skin entry: joint index out of range");
        asset.skin.rows[static_cast<size_t>(v)].emplace_back(j, w);
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("rig json: ") + e.what());
  }

  for (int v = 0; v < asset.skin.vertex_count(); ++v) {
    if (asset.skin.rows[static_cast<size_t>(v)].empty()) continue;
    double sum = 0.0;
    for (const auto& [j, w] : asset.skin.rows[static_cast<size_t>(v)]) sum += w;
    if (std::abs(sum - 1.0) > 1e-5) {
      throw ValidationError("skin weights for vertex " + std::to_string(v) + " sum to " + std::to_string(sum));
    }
  }
  return asset;
}

RigAsset load_rig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open rig file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return rig_from_json(text);
}

void save_rig(const RigAsset& asset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write rig file: " + path);
  out << rig_to_json(asset);
}

}  // namespace rigkit
