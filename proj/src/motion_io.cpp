#include "biomech/motion_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "biomech/json_writer.hpp"

namespace biomech {

namespace {

using nlohmann::json;

json parse_json(const std::string& text, const std::string& origin) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw std::runtime_error("malformed JSON in " + origin);
  return doc;
}

double number_field(const json& j, const char* key, const std::string& origin) {
  if (!j.contains(key) || !j[key].is_number())
    throw std::runtime_error(origin + ": missing numeric field \"" + key + "\"");
  return j[key].get<double>();
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::string motion_to_json(const MotionSequence& seq,
                           const std::map<std::string, std::string>& run_info) {
  seq.validate();
  const int T = seq.frames();
  const int J = seq.joint_count();
  JsonWriter w;
  w.begin_object();
  w.key("fps");
  w.value(seq.fps);
  w.key("frames");
  w.begin_array();
  for (int t = 0; t < T; ++t) {
    w.begin_array();
    for (int j = 0; j < J; ++j) {
      w.begin_array();
      for (int c = 0; c < 3; ++c) w.value(seq.positions(t, 3 * j + c));
      w.end_array();
    }
    w.end_array();
  }
  w.end_array();
  w.key("joints");
  w.begin_array();
  for (int j = 0; j < J; ++j)
    w.value(seq.joint_names.empty() ? "joint_" + std::to_string(j) : seq.joint_names[j]);
  w.end_array();
  if (!run_info.empty()) {
    w.key("run");
    w.begin_object();
    for (const auto& [k, v] : run_info) {
      w.key(k);
      w.value(v);
    }
    w.end_object();
  }
  w.end_object();
  return w.str() + "\n";
}

MotionSequence motion_from_json(const std::string& text, const std::string& origin) {
  const json doc = parse_json(text, origin);
  if (!doc.is_object()) throw std::runtime_error(origin + ": motion file must be a JSON object");
  MotionSequence seq;
  seq.fps = number_field(doc, "fps", origin);
  if (seq.fps <= 0.0) throw std::runtime_error(origin + ": fps must be positive");
  if (!doc.contains("joints") || !doc["joints"].is_array())
    throw std::runtime_error(origin + ": missing \"joints\" array");
  for (const auto& name : doc["joints"]) seq.joint_names.push_back(name.get<std::string>());
  const int J = static_cast<int>(seq.joint_names.size());
  if (J < 1) throw std::runtime_error(origin + ": at least one joint required");
  if (!doc.contains("frames") || !doc["frames"].is_array() || doc["frames"].empty())
    throw std::runtime_error(origin + ": missing non-empty \"frames\" array");
  const auto& frames = doc["frames"];
  const int T = static_cast<int>(frames.size());
  seq.positions.resize(T, 3 * J);
  for (int t = 0; t < T; ++t) {
    const auto& frame = frames[t];
    if (!frame.is_array() || static_cast<int>(frame.size()) != J)
      throw std::runtime_error(origin + ": frame " + std::to_string(t) + " must list " +
                               std::to_string(J) + " joints");
    for (int j = 0; j < J; ++j) {
      const auto& p = frame[j];
      if (!p.is_array() || p.size() != 3)
        throw std::runtime_error(origin + ": joint entry must be a 3-vector");
      for (int c = 0; c < 3; ++c) {
        // non-numeric entries (e.g. null standing in for NaN) count as
        // non-finite values
        const double v = p[c].is_number() ? p[c].get<double>()
                                          : std::numeric_limits<double>::quiet_NaN();
        if (!std::isfinite(v))
          throw std::runtime_error(origin + ": non-finite value at frame " + std::to_string(t) +
                                   ", joint " + std::to_string(j));
        seq.positions(t, 3 * j + c) = v;
      }
    }
  }
  return seq;
}

MotionSequence load_motion(const std::string& path) {
  return motion_from_json(read_text_file(path), path);
}

void save_motion(const MotionSequence& seq, const std::string& path) {
  write_text_file(path, motion_to_json(seq));
}

Skeleton load_skeleton(const std::string& path) {
  const json doc = parse_json(read_text_file(path), path);
  Skeleton s;
  if (!doc.contains("joints") || !doc["joints"].is_array())
    throw std::runtime_error(path + ": missing \"joints\" array");
  for (const auto& jj : doc["joints"]) {
    Joint j;
    j.name = jj.at("name").get<std::string>();
    if (jj.contains("parent") && !jj["parent"].is_null()) j.parent = jj["parent"].get<int>();
    const auto& off = jj.at("offset");
    if (!off.is_array() || off.size() != 3)
      throw std::runtime_error(path + ": joint offset must be a 3-vector");
    for (int c = 0; c < 3; ++c) j.offset[c] = off[c].get<double>();
    s.joints.push_back(std::move(j));
  }
  s.foot_left = doc.value("foot_left", -1);
  s.foot_right = doc.value("foot_right", -1);
  if (doc.contains("lowest_candidates"))
    for (const auto& c : doc["lowest_candidates"]) s.lowest_candidates.push_back(c.get<int>());
  s.validate();
  return s;
}

void save_skeleton(const Skeleton& skel, const std::string& path) {
  skel.validate();
  JsonWriter w;
  w.begin_object();
  w.key("foot_left");
  w.value_int(skel.foot_left);
  w.key("foot_right");
  w.value_int(skel.foot_right);
  w.key("joints");
  w.begin_array();
  for (const Joint& j : skel.joints) {
    w.begin_object();
    w.key("name");
    w.value(j.name);
    w.key("offset");
    w.begin_array();
    for (int c = 0; c < 3; ++c) w.value(j.offset[c]);
    w.end_array();
    w.key("parent");
    if (j.parent)
      w.value_int(*j.parent);
    else
      w.value_null();
    w.end_object();
  }
  w.end_array();
  w.key("lowest_candidates");
  w.begin_array();
  for (int c : skel.lowest_candidates) w.value_int(c);
  w.end_array();
  w.end_object();
  write_text_file(path, w.str() + "\n");
}

RotationalPoseSequence load_pose(const std::string& path) {
  const json doc = parse_json(read_text_file(path), path);
  RotationalPoseSequence pose;
  pose.fps = number_field(doc, "fps", path);
  const auto& rt = doc.at("root_translation");
  const auto& jr = doc.at("joint_rotations");
  const int T = static_cast<int>(rt.size());
  if (T < 1 || static_cast<int>(jr.size()) != T)
    throw std::runtime_error(path + ": root_translation and joint_rotations must share T >= 1");
  const int J = static_cast<int>(jr[0].size());
  pose.root_translation.resize(T, 3);
  pose.joint_rotations.resize(T, 3 * J);
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < 3; ++c) pose.root_translation(t, c) = rt[t][c].get<double>();
    for (int j = 0; j < J; ++j)
      for (int c = 0; c < 3; ++c) pose.joint_rotations(t, 3 * j + c) = jr[t][j][c].get<double>();
  }
  pose.validate();
  return pose;
}

void save_pose(const RotationalPoseSequence& pose, const std::string& path) {
  pose.validate();
  const int T = pose.frames();
  const int J = pose.joint_count();
  JsonWriter w;
  w.begin_object();
  w.key("fps");
  w.value(pose.fps);
  w.key("joint_rotations");
  w.begin_array();
  for (int t = 0; t < T; ++t) {
    w.begin_array();
    for (int j = 0; j < J; ++j) {
      w.begin_array();
      for (int c = 0; c < 3; ++c) w.value(pose.joint_rotations(t, 3 * j + c));
      w.end_array();
    }
    w.end_array();
  }
  w.end_array();
  w.key("root_translation");
  w.begin_array();
  for (int t = 0; t < T; ++t) {
    w.begin_array();
    for (int c = 0; c < 3; ++c) w.value(pose.root_translation(t, c));
    w.end_array();
  }
  w.end_array();
  w.end_object();
  write_text_file(path, w.str() + "\n");
}

}  // namespace biomech
