#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "biomech/denoiser.hpp"
#include "biomech/diffusion.hpp"
#include "biomech/sim.hpp"

namespace biomech {

struct LossBreakdown {
  double l_diffusion = 0.0;
  double l_accel = 0.0;
  double l_phys = 0.0;
  double total = 0.0;
};

struct TrainConfig {
  double learning_rate = 2e-4;
  double weight_decay = 0.01;
  double ema_decay = 0.999;
  int batch_size = 16;
  int steps = 2000;
  std::uint64_t seed = 0;
  // Training draws t in [1, t_max] with density skewed toward small steps
  // (t ~ u^t_sample_power). Refinement and editing invert to at most ~0.3*T
  // and spend most of their chain at small t, so the sampler is trained
  // where it runs; generation from pure noise is not part of this tool.
  int t_max = 400;
  double t_sample_power = 2.0;
  double cond_dropout = 0.1;  // unconditional fraction for CFG
  int pretrain_activation_steps = 300;

  void validate() const;
};

// Per-channel affine map into the diffusion working space. Acceleration
// targets live in the same space with per-frame time units (fps = 1), which
// keeps all three loss terms on comparable scales.
struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // per-channel std, floored at 5 cm

  Eigen::MatrixXd normalize(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd denormalize(const Eigen::MatrixXd& x) const;
  static Normalizer fit(const std::vector<Eigen::MatrixXd>& clips);
};

struct TrainingClip {
  Eigen::MatrixXd theta0;    // T x n, normalized motion
  Eigen::MatrixXd accel_gt;  // T x n, finite-difference acceleration of theta0
  Eigen::MatrixXd torque;    // T x 8 activation proxies in [0,1]
  Eigen::VectorXd cond;      // 8-dim scenario embedding
};

struct TrainingSet {
  std::vector<TrainingClip> clips;
  Normalizer normalizer;
  double fps = 0.0;
  std::vector<std::string> joint_names;
  Skeleton skeleton;
};

// loads a corpus directory produced by make_corpus and prepares normalized
// clips plus their acceleration targets
TrainingSet load_training_set(const std::string& corpus_dir);
// same preparation from in-memory outputs (tests)
TrainingSet build_training_set(const std::vector<SimOutput>& sims,
                               const std::vector<SimScenario>& scenarios);

// one sampled training batch; kept explicit so losses are reproducible
struct BatchDraw {
  std::vector<int> clip;
  std::vector<int> t;
  std::vector<Eigen::MatrixXd> noise;
  std::vector<bool> drop_cond;
};
BatchDraw draw_batch(const TrainingSet& set, const TrainConfig& cfg, int step);

// Eq-style three-part objective; accumulates parameter gradients when asked.
// l_diffusion = MSE(eps_pred, noise); l_phys = MSE(accel_pred, accel_gt);
// l_accel = MSE(accel(x0_hat), accel_gt) with x0_hat from the eps estimate.
LossBreakdown compute_losses(const TrainingSet& set, const BatchDraw& draw, Denoiser& denoiser,
                             const NoiseSchedule& schedule, bool with_grads);

struct AdamWState {
  Eigen::VectorXd m, v;
  long step = 0;
  static AdamWState init(long size);
};

// decoupled weight decay update on the flat parameter vector
void adamw_update(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamWState& state,
                  double lr, double weight_decay);

// single optimization step: losses + AdamW + EMA
LossBreakdown train_step(Denoiser& denoiser, Eigen::VectorXd& ema_values, const TrainingSet& set,
                         const NoiseSchedule& schedule, const TrainConfig& cfg,
                         AdamWState& opt_state, int step);

struct TrainResult {
  std::vector<LossBreakdown> log;  // one entry per step
  Eigen::VectorXd ema_values;
  AdamWState opt_state;
};

// full run: optional activation pretraining on the torque proxies, then the
// joint objective; emits one log entry per step through on_step if given
TrainResult train_model(Denoiser& denoiser, const TrainingSet& set, const NoiseSchedule& schedule,
                        const TrainConfig& cfg,
                        const std::function<void(int, const LossBreakdown&)>& on_step = {});

// supervised fit of the activation head to the torque proxies (clean inputs)
double pretrain_activation(Denoiser& denoiser, const TrainingSet& set, int steps, double lr,
                           std::uint64_t seed);

// mean Pearson correlation between predicted activations and proxies over
// channels with non-degenerate variance
double activation_correlation(Denoiser& denoiser, const std::vector<TrainingClip>& clips);

struct GradCheckResult {
  double max_rel_error = 0.0;
  bool vacuous = false;  // probe_count == 0
};

// central finite differences against the analytic gradient on probe_count
// randomly chosen parameters; loss_and_grad(true) must fill params.grads()
GradCheckResult grad_check(ParamStore& params,
                           const std::function<double(bool)>& loss_and_grad, int probe_count,
                           double eps_fd, std::uint64_t seed = 17);

// finite-difference acceleration operator used by the losses (fps = 1) and
// its transpose for backpropagation
Eigen::MatrixXd accel_of_theta(const Eigen::MatrixXd& theta);
Eigen::MatrixXd accel_of_theta_transpose(const Eigen::MatrixXd& grad);

}  // namespace biomech
