#include "biomech/pipeline.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "biomech/json_writer.hpp"
#include "biomech/motion_io.hpp"

namespace biomech {

namespace {

std::string checkpoint_meta_json(const Checkpoint& ckpt) {
  JsonWriter w;
  w.begin_object();
  w.key("arch");
  w.begin_object();
  w.key("base_hidden");
  w.value_int(ckpt.denoiser.base.hidden);
  w.key("dec_hidden");
  w.value_int(ckpt.denoiser.decoder.hidden);
  w.key("n");
  w.value_int(ckpt.denoiser.n);
  w.key("t_steps");
  w.value_int(ckpt.denoiser.t_steps);
  w.key("vae_hidden");
  w.value_int(ckpt.denoiser.vae.hidden);
  w.key("vae_window");
  w.value_int(ckpt.denoiser.vae.window);
  w.end_object();
  w.key("fps");
  w.value(ckpt.fps);
  w.key("joints");
  w.begin_array();
  for (const auto& n : ckpt.joint_names) w.value(n);
  w.end_array();
  w.key("normalizer");
  w.begin_object();
  w.key("mean");
  w.begin_array();
  for (long i = 0; i < ckpt.normalizer.mean.size(); ++i) w.value_exact(ckpt.normalizer.mean[i]);
  w.end_array();
  w.key("scale");
  w.begin_array();
  for (long i = 0; i < ckpt.normalizer.scale.size(); ++i) w.value_exact(ckpt.normalizer.scale[i]);
  w.end_array();
  w.end_object();
  w.key("schedule");
  w.begin_object();
  w.key("beta_end");
  w.value(ckpt.schedule.beta_end);
  w.key("beta_start");
  w.value(ckpt.schedule.beta_start);
  w.key("t_steps");
  w.value_int(ckpt.schedule.t_steps);
  w.end_object();
  w.end_object();
  return w.str();
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  write_text_file(path, ckpt.denoiser.params.to_json(checkpoint_meta_json(ckpt)));
}

void save_checkpoint_values(const Checkpoint& ckpt, const Eigen::VectorXd& values,
                            const std::string& path) {
  if (values.size() != ckpt.denoiser.params.size())
    throw std::invalid_argument("value vector size does not match the checkpoint");
  Checkpoint copy = ckpt;
  copy.denoiser.params.values() = values;
  save_checkpoint(copy, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string text = read_text_file(path);
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw std::runtime_error("malformed JSON in " + path);
  const auto& meta = doc.at("meta");
  const auto& arch = meta.at("arch");

  Checkpoint ckpt;
  ckpt.denoiser = Denoiser(arch.at("n").get<int>(), arch.at("t_steps").get<int>(),
                           arch.at("vae_window").get<int>(), arch.at("vae_hidden").get<int>(),
                           arch.at("dec_hidden").get<int>(), arch.at("base_hidden").get<int>());
  ckpt.denoiser.params.load_values_from_json(text, path);
  ckpt.fps = meta.at("fps").get<double>();
  for (const auto& n : meta.at("joints")) ckpt.joint_names.push_back(n.get<std::string>());
  const auto& norm = meta.at("normalizer");
  const auto mean = norm.at("mean").get<std::vector<double>>();
  const auto scale = norm.at("scale").get<std::vector<double>>();
  ckpt.normalizer.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
  ckpt.normalizer.scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), scale.size());
  const auto& sched = meta.at("schedule");
  ckpt.schedule = NoiseSchedule::linear(sched.at("t_steps").get<int>(),
                                        sched.at("beta_start").get<double>(),
                                        sched.at("beta_end").get<double>());
  return ckpt;
}

void save_optimizer_state(const AdamWState& state, const std::string& path) {
  JsonWriter w;
  w.begin_object();
  w.key("m");
  w.begin_array();
  for (long i = 0; i < state.m.size(); ++i) w.value_exact(state.m[i]);
  w.end_array();
  w.key("step");
  w.value_int(state.step);
  w.key("v");
  w.begin_array();
  for (long i = 0; i < state.v.size(); ++i) w.value_exact(state.v[i]);
  w.end_array();
  w.end_object();
  write_text_file(path, w.str() + "\n");
}

AdamWState load_optimizer_state(const std::string& path) {
  nlohmann::json doc = nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (doc.is_discarded()) throw std::runtime_error("malformed JSON in " + path);
  AdamWState s;
  const auto m = doc.at("m").get<std::vector<double>>();
  const auto v = doc.at("v").get<std::vector<double>>();
  s.m = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
  s.v = Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
  s.step = doc.at("step").get<long>();
  return s;
}

int RefineOptions::resolve_t_inv(int t_steps) const {
  int t = t_inv > 0 ? t_inv : static_cast<int>(std::lround(t_inv_frac * t_steps));
  t = std::max(1, std::min(t, t_steps));
  return t;
}

EpsFn make_eps_fn(const Denoiser& denoiser, const Eigen::VectorXd& cond,
                  const Eigen::VectorXd& factors, double cfg_scale) {
  const Eigen::VectorXd c = cond.size() == 0 ? Eigen::VectorXd::Zero(kCondDim).eval() : cond;
  const bool use_cfg = cfg_scale != 1.0 && c.norm() > 0.0;
  return [&denoiser, c, factors, cfg_scale, use_cfg](const Eigen::MatrixXd& x, int t) {
    Denoiser::Cache cache;
    Eigen::MatrixXd eps = denoiser.forward(x, t, c, factors, cache).eps;
    if (use_cfg) {
      Denoiser::Cache uncache;
      const Eigen::MatrixXd eps_uncond =
          denoiser.forward(x, t, Eigen::VectorXd::Zero(kCondDim), factors, uncache).eps;
      eps = cfg_combine(eps, eps_uncond, cfg_scale);
    }
    return eps;
  };
}

MotionSequence refine_sequence(const MotionSequence& seq, const Checkpoint& ckpt,
                               const RefineOptions& options) {
  seq.validate();
  if (seq.joint_count() * 3 != ckpt.denoiser.n)
    throw std::invalid_argument("motion has " + std::to_string(seq.joint_count()) +
                                " joints but the model expects " +
                                std::to_string(ckpt.denoiser.n / 3));
  const Eigen::MatrixXd theta = ckpt.normalizer.normalize(seq.positions);
  const EpsFn eps = make_eps_fn(ckpt.denoiser, options.cond, options.factors, options.cfg_scale);
  const int t_inv = options.resolve_t_inv(ckpt.schedule.t_steps);
  const Eigen::MatrixXd refined =
      refine_motion(theta, t_inv, eps, ckpt.schedule, options.mode, options.steps);
  MotionSequence out = seq;
  out.positions = ckpt.normalizer.denormalize(refined);
  return out;
}

Eigen::VectorXd expand_joint_factors(const std::vector<std::string>& joint_names,
                                     const std::vector<std::pair<std::string, double>>& by_joint,
                                     double default_factor) {
  if (default_factor <= 0.0) throw std::invalid_argument("acceleration factor must be positive");
  Eigen::VectorXd factors =
      Eigen::VectorXd::Constant(3 * static_cast<long>(joint_names.size()), default_factor);
  for (const auto& [name, f] : by_joint) {
    if (f <= 0.0) throw std::invalid_argument("acceleration factor must be positive");
    bool found = false;
    for (size_t j = 0; j < joint_names.size(); ++j) {
      if (joint_names[j] == name) {
        factors.segment<3>(3 * static_cast<long>(j)).setConstant(f);
        found = true;
      }
    }
    if (!found) throw std::invalid_argument("unknown joint \"" + name + "\" in factor map");
  }
  return factors;
}

}  // namespace biomech
