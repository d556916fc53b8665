#include "biomech/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "biomech/kinematics.hpp"
#include "biomech/motion_io.hpp"

namespace biomech {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw std::invalid_argument("learning rate must be positive");
  if (!(ema_decay > 0.0 && ema_decay < 1.0))
    throw std::invalid_argument("ema decay must lie in (0,1)");
  if (batch_size < 1 || steps < 0) throw std::invalid_argument("batch/steps invalid");
  if (t_max < 1) throw std::invalid_argument("t_max must be >= 1");
  if (cond_dropout < 0.0 || cond_dropout > 1.0)
    throw std::invalid_argument("cond dropout must lie in [0,1]");
}

Eigen::MatrixXd Normalizer::normalize(const Eigen::MatrixXd& x) const {
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Eigen::MatrixXd Normalizer::denormalize(const Eigen::MatrixXd& x) const {
  return (x.array().rowwise() * scale.transpose().array()).matrix().rowwise() + mean.transpose();
}

Normalizer Normalizer::fit(const std::vector<Eigen::MatrixXd>& clips) {
  if (clips.empty()) throw std::invalid_argument("cannot fit normalizer to empty set");
  const long n = clips.front().cols();
  long total = 0;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
  for (const auto& c : clips) {
    if (c.cols() != n) throw std::invalid_argument("clip channel counts differ");
    sum += c.colwise().sum().transpose();
    total += c.rows();
  }
  Normalizer out;
  out.mean = sum / static_cast<double>(total);
  Eigen::VectorXd ss = Eigen::VectorXd::Zero(n);
  for (const auto& c : clips)
    ss += (c.rowwise() - out.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  // floor the per-channel scale at 5 cm: near-constant channels keep a
  // physical scale instead of amplifying measurement jitter into huge
  // normalized values
  out.scale = (ss / static_cast<double>(total)).array().sqrt().max(0.05).matrix();
  return out;
}

Eigen::MatrixXd accel_of_theta(const Eigen::MatrixXd& theta) {
  return finite_diff_matrix(finite_diff_matrix(theta, 1.0), 1.0);
}

namespace {

// transpose of finite_diff_matrix at fps = 1
Eigen::MatrixXd finite_diff_transpose(const Eigen::MatrixXd& g) {
  const int T = static_cast<int>(g.rows());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(T, g.cols());
  out.row(1) += g.row(0);
  out.row(0) -= g.row(0);
  out.row(T - 1) += g.row(T - 1);
  out.row(T - 2) -= g.row(T - 1);
  for (int t = 1; t < T - 1; ++t) {
    out.row(t + 1) += 0.5 * g.row(t);
    out.row(t - 1) -= 0.5 * g.row(t);
  }
  return out;
}

}  // namespace

Eigen::MatrixXd accel_of_theta_transpose(const Eigen::MatrixXd& grad) {
  return finite_diff_transpose(finite_diff_transpose(grad));
}

TrainingSet build_training_set(const std::vector<SimOutput>& sims,
                               const std::vector<SimScenario>& scenarios) {
  if (sims.empty() || sims.size() != scenarios.size())
    throw std::invalid_argument("training set needs matching sims and scenarios");
  TrainingSet set;
  set.fps = sims.front().motion.fps;
  set.joint_names = sims.front().motion.joint_names;
  set.skeleton = sims.front().skeleton;
  std::vector<Eigen::MatrixXd> raw;
  raw.reserve(sims.size());
  for (const auto& s : sims) {
    if (s.motion.joint_count() != sims.front().motion.joint_count())
      throw std::invalid_argument("all corpus clips must share one skeleton");
    raw.push_back(s.motion.positions);
  }
  set.normalizer = Normalizer::fit(raw);
  for (size_t i = 0; i < sims.size(); ++i) {
    TrainingClip clip;
    clip.theta0 = set.normalizer.normalize(raw[i]);
    clip.accel_gt = accel_of_theta(clip.theta0);
    clip.torque = sims[i].torque_proxy;
    clip.cond = scenario_condition(scenarios[i]);
    set.clips.push_back(std::move(clip));
  }
  return set;
}

TrainingSet load_training_set(const std::string& corpus_dir) {
  namespace fs = std::filesystem;
  const CorpusManifest manifest = load_manifest((fs::path(corpus_dir) / "manifest.json").string());
  if (manifest.clips.empty()) throw std::runtime_error("corpus manifest has no clips");
  std::vector<SimOutput> sims;
  std::vector<SimScenario> scenarios;
  for (const CorpusEntry& e : manifest.clips) {
    SimOutput s;
    s.motion = load_motion((fs::path(corpus_dir) / e.motion_path).string());
    const LoadedMatrix torque = load_matrix_file((fs::path(corpus_dir) / e.torque_path).string());
    s.torque_proxy = torque.values;
    s.skeleton = load_skeleton((fs::path(corpus_dir) / e.skeleton_path).string());
    sims.push_back(std::move(s));
    scenarios.push_back(e.scenario);
  }
  return build_training_set(sims, scenarios);
}

BatchDraw draw_batch(const TrainingSet& set, const TrainConfig& cfg, int step) {
  Rng rng(Rng::derive(cfg.seed, 0x9000 + static_cast<std::uint64_t>(step)));
  BatchDraw draw;
  const int clips = static_cast<int>(set.clips.size());
  for (int b = 0; b < cfg.batch_size; ++b) {
    draw.clip.push_back(rng.uniform_int(0, clips - 1));
    const double u = rng.uniform();
    draw.t.push_back(1 + static_cast<int>(std::pow(u, cfg.t_sample_power) * (cfg.t_max - 1)));
    const auto& theta = set.clips[draw.clip.back()].theta0;
    Eigen::MatrixXd noise(theta.rows(), theta.cols());
    for (long i = 0; i < noise.rows(); ++i)
      for (long j = 0; j < noise.cols(); ++j) noise(i, j) = rng.normal();
    draw.noise.push_back(std::move(noise));
    draw.drop_cond.push_back(rng.uniform() < cfg.cond_dropout);
  }
  return draw;
}

LossBreakdown compute_losses(const TrainingSet& set, const BatchDraw& draw, Denoiser& denoiser,
                             const NoiseSchedule& schedule, bool with_grads) {
  if (draw.clip.empty()) throw std::invalid_argument("empty batch");
  const int B = static_cast<int>(draw.clip.size());
  LossBreakdown out;
  for (int b = 0; b < B; ++b) {
    const TrainingClip& clip = set.clips[draw.clip[b]];
    const int t = draw.t[b];
    if (t < 1 || t > schedule.t_steps) throw std::invalid_argument("batch step out of range");
    const Eigen::MatrixXd& noise = draw.noise[b];
    if (noise.rows() != clip.theta0.rows() || noise.cols() != clip.theta0.cols())
      throw std::invalid_argument("noise draw shape mismatch");
    const Eigen::VectorXd cond =
        draw.drop_cond[b] ? Eigen::VectorXd::Zero(kCondDim).eval() : clip.cond;

    const Eigen::MatrixXd x_t = forward_diffuse(clip.theta0, t, noise, schedule);
    Denoiser::Cache cache;
    const Denoiser::Output pred = denoiser.forward(x_t, t, cond, Eigen::VectorXd(), cache);

    const double count = static_cast<double>(pred.eps.size());
    const Eigen::MatrixXd eps_err = pred.eps - noise;
    const Eigen::MatrixXd phys_err = pred.accel - clip.accel_gt;
    const Eigen::MatrixXd x0_hat = predict_x0(x_t, pred.eps, t, schedule);
    const Eigen::MatrixXd accel_err = accel_of_theta(x0_hat) - clip.accel_gt;

    out.l_diffusion += eps_err.squaredNorm() / count / B;
    out.l_phys += phys_err.squaredNorm() / count / B;
    out.l_accel += accel_err.squaredNorm() / count / B;

    if (with_grads) {
      const double ab = schedule.alpha_bar(t);
      Eigen::MatrixXd d_eps = 2.0 * eps_err / count / B;
      // l_accel reaches eps through x0_hat = (x_t - sqrt(1-ab) eps)/sqrt(ab)
      const Eigen::MatrixXd d_x0 = accel_of_theta_transpose(2.0 * accel_err / count / B);
      d_eps -= (std::sqrt(1.0 - ab) / std::sqrt(ab)) * d_x0;
      const Eigen::MatrixXd d_accel_direct = 2.0 * phys_err / count / B;
      denoiser.backward(cache, d_eps, d_accel_direct);
    }
  }
  out.total = out.l_diffusion + out.l_accel + out.l_phys;
  if (!std::isfinite(out.total)) throw std::runtime_error("non-finite loss");
  return out;
}

AdamWState AdamWState::init(long size) {
  AdamWState s;
  s.m = Eigen::VectorXd::Zero(size);
  s.v = Eigen::VectorXd::Zero(size);
  s.step = 0;
  return s;
}

void adamw_update(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamWState& state,
                  double lr, double weight_decay) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  state.step += 1;
  state.m = beta1 * state.m + (1.0 - beta1) * grads;
  state.v = beta2 * state.v + (1.0 - beta2) * grads.array().square().matrix();
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  const Eigen::ArrayXd mhat = state.m.array() / bc1;
  const Eigen::ArrayXd vhat = state.v.array() / bc2;
  params.array() -= lr * (mhat / (vhat.sqrt() + eps) + weight_decay * params.array());
}

LossBreakdown train_step(Denoiser& denoiser, Eigen::VectorXd& ema_values, const TrainingSet& set,
                         const NoiseSchedule& schedule, const TrainConfig& cfg,
                         AdamWState& opt_state, int step) {
  const BatchDraw draw = draw_batch(set, cfg, step);
  denoiser.params.zero_grads();
  LossBreakdown losses;
  try {
    losses = compute_losses(set, draw, denoiser, schedule, true);
  } catch (const std::runtime_error&) {
    throw std::runtime_error("training aborted at step " + std::to_string(step) +
                             ": non-finite loss");
  }
  adamw_update(denoiser.params.values(), denoiser.params.grads(), opt_state, cfg.learning_rate,
               cfg.weight_decay);
  ema_values = cfg.ema_decay * ema_values + (1.0 - cfg.ema_decay) * denoiser.params.values();
  return losses;
}

double pretrain_activation(Denoiser& denoiser, const TrainingSet& set, int steps, double lr,
                           std::uint64_t seed) {
  AdamWState opt = AdamWState::init(denoiser.params.size());
  double last = 0.0;
  for (int s = 0; s < steps; ++s) {
    Rng rng(Rng::derive(seed, 0xAC7 + static_cast<std::uint64_t>(s)));
    const TrainingClip& clip = set.clips[rng.uniform_int(0, static_cast<int>(set.clips.size()) - 1)];
    ComponentPredictor::Cache cache;
    denoiser.params.zero_grads();
    denoiser.vae.forward_batch(denoiser.params, assemble_history_input(clip.theta0, denoiser.vae.window),
                               cache);
    const Eigen::MatrixXd err = cache.u - clip.torque;
    last = err.squaredNorm() / static_cast<double>(err.size());
    const Eigen::MatrixXd d_u = 2.0 * err / static_cast<double>(err.size());
    const Eigen::MatrixXd d_accel = Eigen::MatrixXd::Zero(cache.accel.rows(), cache.accel.cols());
    denoiser.vae.backward_batch(denoiser.params, cache, d_accel, &d_u);
    adamw_update(denoiser.params.values(), denoiser.params.grads(), opt, lr, 0.0);
  }
  return last;
}

double activation_correlation(Denoiser& denoiser, const std::vector<TrainingClip>& clips) {
  std::vector<double> correlations;
  for (const TrainingClip& clip : clips) {
    ComponentPredictor::Cache cache;
    denoiser.vae.forward_batch(denoiser.params,
                               assemble_history_input(clip.theta0, denoiser.vae.window), cache);
    for (int c = 0; c < kMuscleChannels; ++c) {
      const Eigen::VectorXd a = cache.u.col(c);
      const Eigen::VectorXd b = clip.torque.col(c);
      const double va = (a.array() - a.mean()).square().sum();
      const double vb = (b.array() - b.mean()).square().sum();
      if (vb < 1e-12) continue;  // padded / constant proxy channel
      const double cov = ((a.array() - a.mean()) * (b.array() - b.mean())).sum();
      correlations.push_back(cov / std::sqrt(std::max(va, 1e-300) * vb));
    }
  }
  if (correlations.empty()) return 0.0;
  double sum = 0.0;
  for (double c : correlations) sum += c;
  return sum / static_cast<double>(correlations.size());
}

TrainResult train_model(Denoiser& denoiser, const TrainingSet& set, const NoiseSchedule& schedule,
                        const TrainConfig& cfg,
                        const std::function<void(int, const LossBreakdown&)>& on_step) {
  cfg.validate();
  if (cfg.pretrain_activation_steps > 0)
    pretrain_activation(denoiser, set, cfg.pretrain_activation_steps, 1e-3,
                        Rng::derive(cfg.seed, 0xEE));
  TrainResult result;
  result.opt_state = AdamWState::init(denoiser.params.size());
  result.ema_values = denoiser.params.values();
  result.log.reserve(cfg.steps);
  for (int s = 0; s < cfg.steps; ++s) {
    const LossBreakdown losses =
        train_step(denoiser, result.ema_values, set, schedule, cfg, result.opt_state, s);
    result.log.push_back(losses);
    if (on_step) on_step(s, losses);
  }
  return result;
}

GradCheckResult grad_check(ParamStore& params, const std::function<double(bool)>& loss_and_grad,
                           int probe_count, double eps_fd, std::uint64_t seed) {
  if (eps_fd <= 0.0) throw std::invalid_argument("finite-difference epsilon must be positive");
  GradCheckResult result;
  if (probe_count == 0) {
    result.vacuous = true;
    return result;
  }
  params.zero_grads();
  loss_and_grad(true);
  const Eigen::VectorXd analytic = params.grads();

  Rng rng(seed);
  for (int p = 0; p < probe_count; ++p) {
    const long k = static_cast<long>(rng.next_u64() % static_cast<std::uint64_t>(params.size()));
    const double saved = params.values()[k];
    params.values()[k] = saved + eps_fd;
    const double lp = loss_and_grad(false);
    params.values()[k] = saved - eps_fd;
    const double lm = loss_and_grad(false);
    params.values()[k] = saved;
    const double fd = (lp - lm) / (2.0 * eps_fd);
    const double denom = std::max({std::abs(analytic[k]), std::abs(fd), 1e-5});
    result.max_rel_error = std::max(result.max_rel_error, std::abs(analytic[k] - fd) / denom);
  }
  return result;
}

}  // namespace biomech
