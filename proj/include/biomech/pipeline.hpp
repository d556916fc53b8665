#pragma once

#include <string>
#include <vector>

#include "biomech/denoiser.hpp"
#include "biomech/diffusion.hpp"
#include "biomech/motion.hpp"
#include "biomech/trainer.hpp"

namespace biomech {

// Trained model bundle: denoiser parameters plus everything needed to map
// motion files into the diffusion working space and back.
struct Checkpoint {
  Denoiser denoiser;
  Normalizer normalizer;
  NoiseSchedule schedule;
  double fps = 0.0;
  std::vector<std::string> joint_names;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
// EMA weights share the architecture; saved as a sibling parameter file
void save_checkpoint_values(const Checkpoint& ckpt, const Eigen::VectorXd& values,
                            const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

void save_optimizer_state(const AdamWState& state, const std::string& path);
AdamWState load_optimizer_state(const std::string& path);

struct RefineOptions {
  int t_inv = 0;             // 0 = round(t_inv_frac * t_steps)
  double t_inv_frac = 0.3;
  InversionMode mode = InversionMode::kOneShot;
  int steps = 30;
  double cfg_scale = 1.0;
  Eigen::VectorXd cond;      // empty = unconditional (zero vector)
  Eigen::VectorXd factors;   // per-channel acceleration scaling, empty = 1

  int resolve_t_inv(int t_steps) const;
};

// condition-aware noise predictor with optional CFG blending and editing
// factors threaded through the acceleration channel
EpsFn make_eps_fn(const Denoiser& denoiser, const Eigen::VectorXd& cond,
                  const Eigen::VectorXd& factors, double cfg_scale);

// normalize -> invert -> forward chain -> denormalize
MotionSequence refine_sequence(const MotionSequence& seq, const Checkpoint& ckpt,
                               const RefineOptions& options);

// expands a per-joint factor map to per-channel factors
Eigen::VectorXd expand_joint_factors(const std::vector<std::string>& joint_names,
                                     const std::vector<std::pair<std::string, double>>& by_joint,
                                     double default_factor);

}  // namespace biomech
