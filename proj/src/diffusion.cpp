#include "biomech/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace biomech {

NoiseSchedule NoiseSchedule::linear(int t_steps, double beta_start, double beta_end) {
  if (t_steps < 2) throw std::invalid_argument("schedule needs at least 2 steps");
  NoiseSchedule s;
  s.t_steps = t_steps;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  s.betas.resize(t_steps);
  for (int i = 0; i < t_steps; ++i)
    s.betas[i] = beta_start + (beta_end - beta_start) * static_cast<double>(i) / (t_steps - 1);
  s.alphas = 1.0 - s.betas.array();
  s.alpha_bars.resize(t_steps);
  double prod = 1.0;
  for (int i = 0; i < t_steps; ++i) {
    prod *= s.alphas[i];
    s.alpha_bars[i] = prod;
  }
  s.validate();
  return s;
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > t_steps) throw std::invalid_argument("diffusion step out of range");
  return t == 0 ? 1.0 : alpha_bars[t - 1];
}

void NoiseSchedule::validate() const {
  if (static_cast<int>(betas.size()) != t_steps || static_cast<int>(alphas.size()) != t_steps ||
      static_cast<int>(alpha_bars.size()) != t_steps)
    throw std::invalid_argument("schedule arrays must have t_steps entries");
  for (int i = 0; i < t_steps; ++i) {
    if (!(betas[i] > 0.0 && betas[i] < 1.0))
      throw std::invalid_argument("betas must lie strictly in (0,1)");
    if (i > 0 && !(betas[i] > betas[i - 1]))
      throw std::invalid_argument("betas must be strictly increasing");
    if (!(alpha_bars[i] > 0.0 && alpha_bars[i] < 1.0))
      throw std::invalid_argument("alpha_bar must lie strictly in (0,1)");
    if (i > 0 && !(alpha_bars[i] < alpha_bars[i - 1]))
      throw std::invalid_argument("alpha_bar must be strictly decreasing");
  }
}

Eigen::MatrixXd forward_diffuse(const Eigen::MatrixXd& x0, int t, const Eigen::MatrixXd& noise,
                                const NoiseSchedule& schedule) {
  if (t < 1 || t > schedule.t_steps) throw std::invalid_argument("diffusion step out of range");
  if (noise.rows() != x0.rows() || noise.cols() != x0.cols())
    throw std::invalid_argument("noise shape must match x0");
  const double ab = schedule.alpha_bar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * noise;
}

Eigen::MatrixXd predict_x0(const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& eps_pred, int t,
                           const NoiseSchedule& schedule) {
  const double ab = schedule.alpha_bar(t);
  return (x_t - std::sqrt(1.0 - ab) * eps_pred) / std::sqrt(ab);
}

Eigen::MatrixXd ddim_step(const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& eps_pred, int t,
                          int t_prev, const NoiseSchedule& schedule) {
  if (t_prev > t) throw std::invalid_argument("ddim_step requires t_prev <= t");
  if (t < 1 || t > schedule.t_steps) throw std::invalid_argument("diffusion step out of range");
  if (t_prev == t) return x_t;
  const Eigen::MatrixXd x0 = predict_x0(x_t, eps_pred, t, schedule);
  const double ab_prev = schedule.alpha_bar(t_prev);
  return std::sqrt(ab_prev) * x0 + std::sqrt(1.0 - ab_prev) * eps_pred;
}

Eigen::MatrixXd ddpm_step(const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& eps_pred, int t,
                          Rng& rng, const NoiseSchedule& schedule) {
  if (t < 1 || t > schedule.t_steps) throw std::invalid_argument("diffusion step out of range");
  const double ab_t = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t - 1);
  const double beta = schedule.beta(t);
  const double alpha = 1.0 - beta;
  Eigen::MatrixXd mean =
      (x_t - (beta / std::sqrt(1.0 - ab_t)) * eps_pred) / std::sqrt(alpha);
  if (t == 1) return mean;
  const double sigma = std::sqrt((1.0 - ab_prev) / (1.0 - ab_t) * beta);
  Eigen::MatrixXd z(x_t.rows(), x_t.cols());
  for (long i = 0; i < z.rows(); ++i)
    for (long j = 0; j < z.cols(); ++j) z(i, j) = rng.normal();
  return mean + sigma * z;
}

std::vector<int> step_grid(int t_target, int steps) {
  if (t_target < 1) throw std::invalid_argument("target step must be >= 1");
  steps = std::min(steps, t_target);
  std::vector<int> grid;
  grid.push_back(0);
  for (int k = 1; k <= steps; ++k) {
    const int g = static_cast<int>(std::llround(static_cast<double>(k) * t_target / steps));
    if (g > grid.back()) grid.push_back(g);
  }
  if (grid.back() != t_target) grid.push_back(t_target);
  return grid;
}

Eigen::MatrixXd ddim_chain(const Eigen::MatrixXd& x_start, int t_start, int steps,
                           const EpsFn& eps, const NoiseSchedule& schedule) {
  const std::vector<int> grid = step_grid(t_start, steps);
  Eigen::MatrixXd x = x_start;
  for (int k = static_cast<int>(grid.size()) - 1; k >= 1; --k)
    x = ddim_step(x, eps(x, grid[k]), grid[k], grid[k - 1], schedule);
  return x;
}

Eigen::MatrixXd ddim_invert(const Eigen::MatrixXd& x0, int t_target, const EpsFn& eps,
                            const NoiseSchedule& schedule, InversionMode mode, int steps) {
  if (t_target < 1 || t_target > schedule.t_steps)
    throw std::invalid_argument("inversion step out of range");
  if (mode == InversionMode::kOneShot) {
    const double ab = schedule.alpha_bar(t_target);
    return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps(x0, t_target);
  }
  const std::vector<int> grid = step_grid(t_target, steps);
  Eigen::MatrixXd x = x0;
  for (size_t k = 0; k + 1 < grid.size(); ++k) {
    const int t_next = grid[k + 1];
    const double ab_cur = schedule.alpha_bar(grid[k]);
    const double ab_next = schedule.alpha_bar(t_next);
    const double ratio = std::sqrt(ab_next / ab_cur);
    // invert the forward DDIM update x_cur = step(x_next, eps(x_next));
    // a few fixed-point sweeps re-evaluate eps at the solution point, so
    // the up-chain is the near-exact inverse of the down-chain
    Eigen::MatrixXd e = eps(x, t_next);
    Eigen::MatrixXd x_next;
    for (int it = 0; it < 4; ++it) {
      x_next = ratio * (x - std::sqrt(1.0 - ab_cur) * e) + std::sqrt(1.0 - ab_next) * e;
      if (it + 1 < 4) e = eps(x_next, t_next);
    }
    x = x_next;
  }
  return x;
}

Eigen::MatrixXd cfg_combine(const Eigen::MatrixXd& eps_cond, const Eigen::MatrixXd& eps_uncond,
                            double scale) {
  if (eps_cond.rows() != eps_uncond.rows() || eps_cond.cols() != eps_uncond.cols())
    throw std::invalid_argument("cfg_combine shapes differ");
  if (scale == 1.0) return eps_cond;
  if (scale == 0.0) return eps_uncond;
  return eps_uncond + scale * (eps_cond - eps_uncond);
}

Eigen::MatrixXd refine_motion(const Eigen::MatrixXd& theta, int t_inv, const EpsFn& eps,
                              const NoiseSchedule& schedule, InversionMode mode, int steps) {
  const Eigen::MatrixXd x_t = ddim_invert(theta, t_inv, eps, schedule, mode, steps);
  return ddim_chain(x_t, t_inv, steps, eps, schedule);
}

}  // namespace biomech
