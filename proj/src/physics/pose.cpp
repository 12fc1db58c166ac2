#include "rigkit/physics/pose.hpp"

#include <fstream>

#include <json.hpp>

namespace rigkit {

using nlohmann::json;

Pose Pose::identity(const SkeletonTree& tree) {
  Pose p;
  for (const auto& j : tree.joints) {
    if (j.type.kind != BoneKind::Spring) p.rotations[j.name] = Quat::Identity();
  }
  return p;
}

Pose retarget_frame(const SkeletonTree& tree, const MotionFrame& frame) {
  for (const auto& [name, q] : frame.rotations) {
    if (tree.find_joint(name) < 0) {
      throw RangeError("motion names joint '" + name + "' missing from the skeleton");
    }
  }
  Pose pose = Pose::identity(tree);
  pose.root_translation = frame.root_translation;
  for (const auto& [name, q] : frame.rotations) pose.rotations[name] = q;
  return pose;
}

namespace {

json quat_to_json(const Quat& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

Quat quat_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("rotation: expected [w,x,y,z]");
  return Quat(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

}  // namespace

std::string motion_to_json(const Motion& motion) {
  json root;
  root["fps"] = motion.fps;
  json frames = json::array();
  for (const auto& f : motion.frames) {
    json jf;
    jf["root_translation"] = json::array({f.root_translation.x(), f.root_translation.y(), f.root_translation.z()});
    json rot;
    for (const auto& [name, q] : f.rotations) rot[name] = quat_to_json(q);
    jf["rotations"] = std::move(rot);
    frames.push_back(std::move(jf));
  }
  root["frames"] = std::move(frames);
  return root.dump(2) + "\n";
}

Motion motion_from_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("motion json: ") + e.what());
  }
  Motion m;
  try {
    m.fps = root.at("fps").get<double>();
    for (const auto& jf : root.at("frames")) {
      MotionFrame f;
      const auto& t = jf.at("root_translation");
      f.root_translation = Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
      for (const auto& [name, q] : jf.at("rotations").items()) f.rotations[name] = quat_from_json(q);
      m.frames.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("motion json: ") + e.what());
  }
  return m;
}

Motion load_motion(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open motion file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return motion_from_json(text);
}

void save_motion(const Motion& motion, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write motion file: " + path);
  out << motion_to_json(motion);
}

}  // namespace rigkit
