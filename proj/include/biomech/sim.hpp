#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "biomech/metrics.hpp"
#include "biomech/motion.hpp"
#include "biomech/skeleton.hpp"

namespace biomech {

enum class ScenarioKind { kPendulumChain, kBouncingMass, kGait };

std::string scenario_kind_name(ScenarioKind k);
ScenarioKind scenario_kind_from_name(const std::string& name);

struct SimScenario {
  ScenarioKind kind = ScenarioKind::kPendulumChain;
  std::vector<double> link_lengths;  // m, pendulum chains
  std::vector<double> masses;        // kg per link / mass
  std::vector<double> initial_angles;  // rad, absolute link angles from straight down
  std::vector<double> initial_rates;   // rad/s
  double pivot_height = 2.5;  // m, pendulum pivot above ground
  double drop_height = 1.0;   // m, bouncing mass release height
  double gravity = 9.81;
  double contact_stiffness = 5e3;  // N/m penalty spring
  double contact_damping = 50.0;   // N*s/m
  double duration_s = 3.2;
  double fps = 20.0;
  std::uint64_t seed = 0;
  // gait pattern
  double gait_speed = 1.2;    // m/s commanded root speed
  double gait_cadence = 1.7;  // steps per second
  double gait_phase = 0.0;    // cycle fraction offset
  double amplitude_scale = 1.0;

  int frame_count() const { return static_cast<int>(duration_s * fps + 0.5); }
  void validate() const;
};

struct SimOutput {
  MotionSequence motion;
  Eigen::MatrixXd accel_gt;      // T x 3J, m/s^2, from the force evaluation
  Eigen::MatrixXd torque_proxy;  // T x 8, per-link torque magnitudes in [0,1]
  Skeleton skeleton;
};

// Fixed-step RK4 with penalty-spring ground contact for the dynamic
// scenarios; the gait pattern is a closed-form kinematic trajectory with
// alternating zero-velocity stance phases.
SimOutput simulate(const SimScenario& scenario);
SimOutput gait_pattern(const SimScenario& scenario);

// 8-dim scenario embedding used as the diffusion condition vector
Eigen::VectorXd scenario_condition(const SimScenario& scenario);

struct CorpusEntry {
  std::string id;
  std::string motion_path;
  std::string accel_path;
  std::string torque_path;
  std::string skeleton_path;
  SimScenario scenario;
  MetricReport metrics;
};

struct CorpusManifest {
  std::vector<CorpusEntry> clips;
};

// Writes motion/accel/torque files plus a manifest with per-clip metric
// reports of the clean data. Paths in the manifest are relative to out_dir.
// Clips may be simulated in parallel; files are written in index order so
// the corpus bytes do not depend on the worker count.
CorpusManifest make_corpus(const std::vector<SimScenario>& scenarios, const std::string& out_dir,
                           const MetricConfig& metric_cfg = {}, int jobs = 1);
void save_manifest(const CorpusManifest& manifest, const std::string& path);
CorpusManifest load_manifest(const std::string& path);

// The default training corpus: fixed-cadence gait clips sweeping commanded
// speed, per-clip parameters drawn deterministically from (seed, index).
std::vector<SimScenario> default_corpus_scenarios(std::uint64_t seed, int count);

std::string scenario_to_json(const SimScenario& s);
SimScenario scenario_from_json_text(const std::string& text, const std::string& origin);

// accel/torque companion files (motion-file array layout, nested 3-vectors
// or flat channel rows)
struct LoadedMatrix {
  double fps = 0.0;
  std::vector<std::string> names;
  Eigen::MatrixXd values;
};
LoadedMatrix load_matrix_file(const std::string& path);

}  // namespace biomech
