#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "biomech/rng.hpp"

namespace biomech {

struct NoiseSchedule {
  int t_steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 2e-2;
  Eigen::VectorXd betas;       // beta_1 .. beta_T at indices 0 .. T-1
  Eigen::VectorXd alphas;      // 1 - beta
  Eigen::VectorXd alpha_bars;  // cumulative products

  static NoiseSchedule linear(int t_steps = 1000, double beta_start = 1e-4,
                              double beta_end = 2e-2);

  // t in [0, t_steps]; alpha_bar(0) = 1 (clean data)
  double alpha_bar(int t) const;
  double beta(int t) const { return betas[t - 1]; }
  void validate() const;
};

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) noise
Eigen::MatrixXd forward_diffuse(const Eigen::MatrixXd& x0, int t, const Eigen::MatrixXd& noise,
                                const NoiseSchedule& schedule);

// noise predictor callable: eps(x, t)
using EpsFn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, int)>;

// deterministic DDIM update t -> t_prev (eta = 0)
Eigen::MatrixXd ddim_step(const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& eps_pred, int t,
                          int t_prev, const NoiseSchedule& schedule);

// ancestral DDPM update t -> t-1 with the beta-tilde posterior variance;
// no noise is added at t = 1
Eigen::MatrixXd ddpm_step(const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& eps_pred, int t,
                          Rng& rng, const NoiseSchedule& schedule);

// x0 estimate implied by the eps parameterization
Eigen::MatrixXd predict_x0(const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& eps_pred, int t,
                           const NoiseSchedule& schedule);

// evenly spaced integer grid 0 = g_0 < ... < g_S = t_target
std::vector<int> step_grid(int t_target, int steps);

// DDIM chain from (x_start, t_start) down to t = 0 over `steps` sub-steps
Eigen::MatrixXd ddim_chain(const Eigen::MatrixXd& x_start, int t_start, int steps,
                           const EpsFn& eps, const NoiseSchedule& schedule);

enum class InversionMode { kOneShot, kIterative };

// One-shot mode evaluates the predictor once at the clean input,
// x_t = sqrt(abar) x0 + sqrt(1-abar) eps(x0, t). Iterative mode runs the
// reversed DDIM recursion over `steps` sub-steps and is the near-exact
// inverse of ddim_chain.
Eigen::MatrixXd ddim_invert(const Eigen::MatrixXd& x0, int t_target, const EpsFn& eps,
                            const NoiseSchedule& schedule,
                            InversionMode mode = InversionMode::kIterative, int steps = 50);

Eigen::MatrixXd cfg_combine(const Eigen::MatrixXd& eps_cond, const Eigen::MatrixXd& eps_uncond,
                            double scale);

// inversion-then-forward refinement; both passes share the eps predictor
Eigen::MatrixXd refine_motion(const Eigen::MatrixXd& theta, int t_inv, const EpsFn& eps,
                              const NoiseSchedule& schedule,
                              InversionMode mode = InversionMode::kOneShot, int steps = 30);

}  // namespace biomech
