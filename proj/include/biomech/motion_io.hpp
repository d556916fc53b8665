#pragma once

#include <map>
#include <string>

#include "biomech/motion.hpp"
#include "biomech/skeleton.hpp"

namespace biomech {

// Motion file: {"fps": number, "joints": [names...], "frames": [[[x,y,z],...],...]}
// Serialization is canonical (sorted keys, 9 significant digits, compact), so
// saving the same sequence twice yields byte-identical files. Readers accept
// and ignore unknown top-level keys (e.g. run provenance added by the CLI).
MotionSequence load_motion(const std::string& path);
void save_motion(const MotionSequence& seq, const std::string& path);
// run_info (if any) becomes a top-level "run" object; loaders ignore it
std::string motion_to_json(const MotionSequence& seq,
                           const std::map<std::string, std::string>& run_info = {});
MotionSequence motion_from_json(const std::string& text, const std::string& origin);

// Skeleton file: {"joints":[{"name","offset":[x,y,z],"parent":int|null}...],
//                 "foot_left":int,"foot_right":int,"lowest_candidates":[...]}
Skeleton load_skeleton(const std::string& path);
void save_skeleton(const Skeleton& skel, const std::string& path);

// Pose file: {"fps","joint_rotations":[[[rx,ry,rz],...],...],"root_translation":[[x,y,z],...]}
RotationalPoseSequence load_pose(const std::string& path);
void save_pose(const RotationalPoseSequence& pose, const std::string& path);

// shared helpers
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace biomech
