#include "biomech/cli.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "biomech/json_writer.hpp"
#include "biomech/metrics.hpp"
#include "biomech/motion_io.hpp"
#include "biomech/pipeline.hpp"
#include "biomech/sim.hpp"
#include "biomech/trainer.hpp"

namespace biomech {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

int log_level() {
  const char* env = std::getenv("BIOMECH_LOG");
  if (!env) return 1;
  return std::string(env) == "debug" ? 2 : 1;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[biomech] " << msg << "\n";
}
void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[biomech] " << msg << "\n";
}

// config file values fill in flags the user did not set explicitly; keys
// outside the command's whitelist are rejected
class ConfigFile {
 public:
  void load(const std::string& path, const std::set<std::string>& allowed) {
    if (path.empty()) return;
    doc_ = json::parse(read_text_file(path), nullptr, false);
    if (doc_.is_discarded()) throw std::runtime_error("malformed JSON in " + path);
    if (!doc_.is_object()) throw std::runtime_error(path + ": config must be a JSON object");
    for (const auto& item : doc_.items())
      if (!allowed.count(item.key()))
        throw std::runtime_error(path + ": unknown config key \"" + item.key() + "\"");
    loaded_ = true;
  }

  template <typename T>
  void apply(CLI::App* cmd, const std::string& flag, const std::string& key, T& target) const {
    if (!loaded_ || !doc_.contains(key)) return;
    if (cmd->get_option(flag)->count() > 0) return;
    target = doc_[key].get<T>();
  }

 private:
  json doc_;
  bool loaded_ = false;
};

std::map<std::string, std::string> run_info_map(
    const std::string& command, std::uint64_t seed,
    const std::vector<std::pair<std::string, std::string>>& extra = {}) {
  std::map<std::string, std::string> m;
  m["command"] = command;
  m["seed"] = std::to_string(seed);
  for (const auto& [k, v] : extra) m[k] = v;
  return m;
}

std::string run_info_json(const std::map<std::string, std::string>& info) {
  JsonWriter w;
  w.begin_object();
  for (const auto& [k, v] : info) {
    w.key(k);
    w.value(v);
  }
  w.end_object();
  return w.str() + "\n";
}

std::string format_cell(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%10.4f", v);
  return buf;
}

void print_metric_table(const std::vector<std::pair<std::string, MetricReport>>& rows,
                        const MetricReport& mean, const MetricDeviations* dev,
                        const std::string& ref_id) {
  std::printf("%-28s %10s %10s %10s %10s %10s %10s %10s %10s\n", "input", "VC", "AC", "Speed",
              "Smooth", "Float", "Skate", "Pen", "Clip");
  auto line = [](const std::string& name, double vc, double ac, double sp, double sm, double fl,
                 double fs, double pen, double clip) {
    std::printf("%-28s %s %s %s %s %s %s %s %s\n", name.c_str(), format_cell(vc).c_str(),
                format_cell(ac).c_str(), format_cell(sp).c_str(), format_cell(sm).c_str(),
                format_cell(fl).c_str(), format_cell(fs).c_str(), format_cell(pen).c_str(),
                format_cell(clip).c_str());
  };
  for (const auto& [name, r] : rows)
    line(name, r.vc, r.ac, r.speed_mps, r.smoothness, r.floating, r.foot_skating, r.penetrate,
         r.clip);
  line("mean", mean.vc, mean.ac, mean.speed_mps, mean.smoothness, mean.floating,
       mean.foot_skating, mean.penetrate, mean.clip);
  if (dev)
    line("dev vs " + ref_id, dev->vc, dev->ac, dev->speed_mps, dev->smoothness, dev->floating,
         dev->foot_skating, dev->penetrate, dev->clip);
}

// ---------------------------------------------------------------------------

struct MetricsArgs {
  std::vector<std::string> inputs;
  std::string skeleton_path;
  std::string out_dir;
  std::string reference;
  MetricConfig mc;
  std::string aggregation = "penalty";
  std::uint64_t seed = 0;
  int jobs = 1;
};

int cmd_metrics(const MetricsArgs& a) {
  const Skeleton skel = load_skeleton(a.skeleton_path);
  if (!a.out_dir.empty()) fs::create_directories(a.out_dir);

  struct Slot {
    bool ok = false;
    std::string error;
    MetricReport report;
  };
  std::vector<Slot> slots(a.inputs.size());
  auto work = [&](size_t i) {
    try {
      const MotionSequence seq = load_motion(a.inputs[i]);
      slots[i].report = full_report(seq, skel, a.mc);
      slots[i].ok = true;
    } catch (const std::exception& e) {
      slots[i].error = e.what();
    }
  };
  const int jobs = std::max(1, a.jobs);
  if (jobs == 1 || a.inputs.size() < 2) {
    for (size_t i = 0; i < a.inputs.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (int j = 0; j < jobs; ++j)
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < a.inputs.size(); i = next.fetch_add(1)) work(i);
      });
    for (auto& th : pool) th.join();
  }

  const auto run_info = run_info_map("metrics", a.seed, {{"aggregation", a.aggregation}});
  std::vector<std::pair<std::string, MetricReport>> rows;
  MetricReport mean;
  mean.config = a.mc;
  int failures = 0;
  for (size_t i = 0; i < a.inputs.size(); ++i) {
    if (!slots[i].ok) {
      ++failures;
      std::fprintf(stderr, "error: %s: %s\n", a.inputs[i].c_str(), slots[i].error.c_str());
      continue;
    }
    const MetricReport& r = slots[i].report;
    const fs::path in(a.inputs[i]);
    const fs::path out = a.out_dir.empty()
                             ? in.parent_path() / (in.stem().string() + ".report.json")
                             : fs::path(a.out_dir) / (in.stem().string() + ".report.json");
    write_text_file(out.string(), report_to_json(r, run_info));
    rows.emplace_back(in.filename().string(), r);
    mean.vc += r.vc;
    mean.ac += r.ac;
    mean.speed_mps += r.speed_mps;
    mean.smoothness += r.smoothness;
    mean.floating += r.floating;
    mean.foot_skating += r.foot_skating;
    mean.penetrate += r.penetrate;
    mean.clip += r.clip;
    mean.frames += r.frames;
  }
  if (!rows.empty()) {
    const double k = static_cast<double>(rows.size());
    mean.vc /= k;
    mean.ac /= k;
    mean.speed_mps /= k;
    mean.smoothness /= k;
    mean.floating /= k;
    mean.foot_skating /= k;
    mean.penetrate /= k;
    mean.clip /= k;
    const fs::path summary =
        (a.out_dir.empty() ? fs::path(".") : fs::path(a.out_dir)) / "summary.json";
    write_text_file(summary.string(), report_to_json(mean, run_info));
    MetricDeviations dev{};
    const MetricDeviations* devp = nullptr;
    if (!a.reference.empty()) {
      dev = compare_to_reference(mean, reference_stats(a.reference));
      devp = &dev;
    }
    print_metric_table(rows, mean, devp, a.reference);
  }
  return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string out_dir;
  std::uint64_t seed = 0;
  int clips = 64;
  std::string scenario_path;
  int jobs = 1;
};

int cmd_simulate(const SimulateArgs& a) {
  std::vector<SimScenario> scenarios;
  if (!a.scenario_path.empty()) {
    const SimScenario base =
        scenario_from_json_text(read_text_file(a.scenario_path), a.scenario_path);
    for (int i = 0; i < a.clips; ++i) {
      SimScenario si = base;
      si.seed = Rng::derive(a.seed, static_cast<std::uint64_t>(i));
      scenarios.push_back(si);
    }
  } else {
    scenarios = default_corpus_scenarios(a.seed, a.clips);
  }
  make_corpus(scenarios, a.out_dir, MetricConfig{}, a.jobs);
  write_text_file(
      (fs::path(a.out_dir) / "run.json").string(),
      run_info_json(run_info_map("simulate", a.seed, {{"clips", std::to_string(a.clips)}})));
  log_info("corpus written to " + a.out_dir);
  std::printf("%s\n", (fs::path(a.out_dir) / "manifest.json").string().c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string corpus_dir;
  std::string out_dir;
  TrainConfig tc;
};

int cmd_train(const TrainArgs& a) {
  const TrainingSet set = load_training_set(a.corpus_dir);
  const NoiseSchedule schedule = NoiseSchedule::linear();
  const int n = static_cast<int>(set.clips.front().theta0.cols());

  Denoiser denoiser(n, schedule.t_steps);
  Rng rng(Rng::derive(a.tc.seed, 0x1A17));
  denoiser.init_params(rng);

  fs::create_directories(a.out_dir);
  std::string log_text;
  const TrainResult result =
      train_model(denoiser, set, schedule, a.tc, [&](int step, const LossBreakdown& l) {
        JsonWriter w;
        w.begin_object();
        w.key("l_accel");
        w.value(l.l_accel);
        w.key("l_diffusion");
        w.value(l.l_diffusion);
        w.key("l_phys");
        w.value(l.l_phys);
        w.key("step");
        w.value_int(step);
        w.key("total");
        w.value(l.total);
        w.end_object();
        log_text += w.str() + "\n";
        if (step % 200 == 0)
          log_debug("step " + std::to_string(step) + " total " + format_number(l.total));
      });

  Checkpoint ckpt;
  ckpt.denoiser = denoiser;
  ckpt.normalizer = set.normalizer;
  ckpt.schedule = schedule;
  ckpt.fps = set.fps;
  ckpt.joint_names = set.joint_names;
  save_checkpoint(ckpt, (fs::path(a.out_dir) / "params.json").string());
  save_checkpoint_values(ckpt, result.ema_values,
                         (fs::path(a.out_dir) / "ema-params.json").string());
  save_optimizer_state(result.opt_state, (fs::path(a.out_dir) / "optimizer.json").string());
  write_text_file((fs::path(a.out_dir) / "train-log.jsonl").string(), log_text);
  write_text_file((fs::path(a.out_dir) / "run.json").string(),
                  run_info_json(run_info_map(
                      "train", a.tc.seed,
                      {{"corpus", a.corpus_dir}, {"steps", std::to_string(a.tc.steps)}})));
  if (!result.log.empty()) {
    const LossBreakdown& last = result.log.back();
    std::printf("final step %d: total %.6f (diffusion %.6f, accel %.6f, phys %.6f)\n",
                a.tc.steps - 1, last.total, last.l_diffusion, last.l_accel, last.l_phys);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct RefineArgs {
  std::string input_path;
  std::string model_path;
  std::string skeleton_path;
  std::string out_path;
  std::string cond_path;
  RefineOptions opts;
  std::string mode = "oneshot";
  std::uint64_t seed = 0;
  double factor = 1.0;
  std::string factor_map;
  bool is_edit = false;
};

int cmd_refine(const RefineArgs& a) {
  const MotionSequence input = load_motion(a.input_path);
  const Checkpoint ckpt = load_checkpoint(a.model_path);
  RefineOptions opts = a.opts;
  opts.mode = a.mode == "iterative" ? InversionMode::kIterative : InversionMode::kOneShot;
  if (!a.cond_path.empty())
    opts.cond =
        scenario_condition(scenario_from_json_text(read_text_file(a.cond_path), a.cond_path));
  if (a.is_edit) {
    std::vector<std::pair<std::string, double>> by_joint;
    if (!a.factor_map.empty()) {
      json doc = json::parse(a.factor_map, nullptr, false);
      if (doc.is_discarded() || !doc.is_object())
        throw std::runtime_error("--factor-map must be a JSON object of joint: factor");
      for (const auto& item : doc.items()) by_joint.emplace_back(item.key(), item.value().get<double>());
    }
    opts.factors = expand_joint_factors(ckpt.joint_names, by_joint, a.factor);
  }

  const MotionSequence refined = refine_sequence(input, ckpt, opts);
  const auto run_info =
      run_info_map(a.is_edit ? "edit" : "refine", a.seed,
                   {{"input", a.input_path},
                    {"mode", a.mode},
                    {"t_inv", std::to_string(opts.resolve_t_inv(ckpt.schedule.t_steps))}});
  write_text_file(a.out_path, motion_to_json(refined, run_info));

  const Skeleton skel = load_skeleton(a.skeleton_path);
  const MetricConfig mc;
  const MetricReport before = full_report(input, skel, mc);
  const MetricReport after = full_report(refined, skel, mc);
  const fs::path out(a.out_path);
  const std::string report_base = (out.parent_path() / out.stem()).string();
  write_text_file(report_base + ".before.report.json", report_to_json(before, run_info));
  write_text_file(report_base + ".after.report.json", report_to_json(after, run_info));
  std::printf("%-10s %10s %10s\n", "metric", "before", "after");
  auto row = [](const char* name, double b, double af) {
    std::printf("%-10s %10.4f %10.4f\n", name, b, af);
  };
  row("vc", before.vc, after.vc);
  row("ac", before.ac, after.ac);
  row("speed", before.speed_mps, after.speed_mps);
  row("smooth", before.smoothness, after.smoothness);
  row("float", before.floating, after.floating);
  row("skate", before.foot_skating, after.foot_skating);
  row("pen", before.penetrate, after.penetrate);
  row("clip", before.clip, after.clip);
  return 0;
}

// ---------------------------------------------------------------------------

struct InvertArgs {
  std::string input_path;
  std::string model_path;
  std::string out_path;
  std::string cond_path;
  RefineOptions opts;
  std::string mode = "iterative";
  std::uint64_t seed = 0;
};

int cmd_invert(const InvertArgs& a) {
  const MotionSequence input = load_motion(a.input_path);
  const Checkpoint ckpt = load_checkpoint(a.model_path);
  RefineOptions opts = a.opts;
  opts.mode = a.mode == "iterative" ? InversionMode::kIterative : InversionMode::kOneShot;
  if (!a.cond_path.empty())
    opts.cond =
        scenario_condition(scenario_from_json_text(read_text_file(a.cond_path), a.cond_path));
  const Eigen::MatrixXd theta = ckpt.normalizer.normalize(input.positions);
  const EpsFn eps = make_eps_fn(ckpt.denoiser, opts.cond, opts.factors, opts.cfg_scale);
  const int t_inv = opts.resolve_t_inv(ckpt.schedule.t_steps);
  const Eigen::MatrixXd latent =
      ddim_invert(theta, t_inv, eps, ckpt.schedule, opts.mode, opts.steps);
  MotionSequence out = input;
  out.positions = latent;  // latent lives in the normalized working space
  write_text_file(a.out_path, motion_to_json(out, run_info_map("invert", a.seed,
                                                               {{"input", a.input_path},
                                                                {"mode", a.mode},
                                                                {"t_inv", std::to_string(t_inv)}})));
  std::printf("inverted to t=%d -> %s\n", t_inv, a.out_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------

struct GradcheckArgs {
  std::string corpus_dir;
  int probes = 100;
  double eps_fd = 1e-5;
  std::uint64_t seed = 0;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  const TrainingSet set = load_training_set(a.corpus_dir);
  const NoiseSchedule schedule = NoiseSchedule::linear();
  const int n = static_cast<int>(set.clips.front().theta0.cols());
  Denoiser denoiser(n, schedule.t_steps);
  Rng rng(Rng::derive(a.seed, 0x1A17));
  denoiser.init_params(rng);

  TrainConfig tc;
  tc.batch_size = 2;
  tc.seed = a.seed;
  const BatchDraw draw = draw_batch(set, tc, 0);
  auto loss_and_grad = [&](bool with_grads) {
    if (with_grads) denoiser.params.zero_grads();
    return compute_losses(set, draw, denoiser, schedule, with_grads).total;
  };
  const GradCheckResult r =
      grad_check(denoiser.params, loss_and_grad, a.probes, a.eps_fd, Rng::derive(a.seed, 0xFD));
  if (r.vacuous) std::printf("gradcheck vacuous: probe count is zero\n");
  std::printf("gradcheck max relative error: %.3e over %d probes (eps %.1e)\n", r.max_rel_error,
              a.probes, a.eps_fd);
  return r.max_rel_error < 1e-4 ? 0 : 1;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"biomechanics-aware motion toolkit"};
  app.require_subcommand(1);

  MetricsArgs ma;
  SimulateArgs sa;
  TrainArgs ta;
  RefineArgs ra, ea;
  InvertArgs ia;
  GradcheckArgs ga;
  std::string config_path;
  ea.is_edit = true;

  auto* metrics =
      app.add_subcommand("metrics", "score motion files with the plausibility metrics");
  metrics->add_option("--config", config_path, "JSON config file");
  metrics->add_option("--input", ma.inputs, "motion files")->required();
  metrics->add_option("--skeleton", ma.skeleton_path, "skeleton file")->required();
  metrics->add_option("--out-dir", ma.out_dir, "report output directory");
  metrics->add_option("--reference", ma.reference, "humanml3d-gt|kitml-gt");
  metrics->add_option("--seed", ma.seed, "run seed (provenance)");
  metrics->add_option("--jobs", ma.jobs, "parallel file workers");
  metrics->add_option("--contact-height", ma.mc.contact_height_m, "contact height threshold, m");
  metrics->add_option("--float-height", ma.mc.float_height_m, "floating height threshold, m");
  metrics->add_option("--clip-dist", ma.mc.clip_dist_m, "foot clipping threshold, m");
  metrics->add_option("--skate-speed-inst", ma.mc.skate_speed_inst_mps,
                      "instantaneous skating threshold, m/s");
  metrics->add_option("--skate-speed-avg", ma.mc.skate_speed_avg_mps,
                      "window-average skating threshold, m/s");
  metrics->add_option("--pen-plane", ma.mc.pen_plane_m, "penetration plane height, m");
  metrics->add_option("--low-frac", ma.mc.low_frac, "low spectral band fraction");
  metrics->add_option("--high-frac", ma.mc.high_frac, "high spectral band fraction");
  metrics->add_option("--consistency-cap", ma.mc.consistency_cap, "VC/AC band cap");
  metrics->add_option("--aggregation", ma.aggregation, "penalty|paper-raw");

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic motion corpus");
  simulate->add_option("--config", config_path, "JSON config file");
  simulate->add_option("--out", sa.out_dir, "corpus output directory")->required();
  simulate->add_option("--seed", sa.seed, "corpus seed");
  simulate->add_option("--clips", sa.clips, "number of clips");
  simulate->add_option("--scenario", sa.scenario_path, "scenario JSON (default: gait sweep)");
  simulate->add_option("--jobs", sa.jobs, "parallel clip workers");

  auto* train = app.add_subcommand("train", "train the denoiser with the residual objective");
  train->add_option("--config", config_path, "JSON config file");
  train->add_option("--corpus", ta.corpus_dir, "corpus directory")->required();
  train->add_option("--out", ta.out_dir, "output directory")->required();
  train->add_option("--steps", ta.tc.steps, "optimization steps");
  train->add_option("--batch", ta.tc.batch_size, "batch size");
  train->add_option("--lr", ta.tc.learning_rate, "learning rate");
  train->add_option("--weight-decay", ta.tc.weight_decay, "decoupled weight decay");
  train->add_option("--ema-decay", ta.tc.ema_decay, "EMA decay");
  train->add_option("--t-max", ta.tc.t_max, "largest training diffusion step");
  train->add_option("--cond-dropout", ta.tc.cond_dropout, "unconditional fraction");
  train->add_option("--pretrain-steps", ta.tc.pretrain_activation_steps,
                    "activation pretraining steps");
  train->add_option("--seed", ta.tc.seed, "training seed");

  auto add_refine_flags = [&](CLI::App* cmd, RefineArgs& r) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--input", r.input_path, "motion file")->required();
    cmd->add_option("--model", r.model_path, "checkpoint params.json")->required();
    cmd->add_option("--skeleton", r.skeleton_path, "skeleton file")->required();
    cmd->add_option("--out", r.out_path, "output motion file")->required();
    cmd->add_option("--cond", r.cond_path, "scenario JSON for the condition vector");
    cmd->add_option("--t-inv", r.opts.t_inv, "inversion depth (0 = frac*T)");
    cmd->add_option("--t-inv-frac", r.opts.t_inv_frac, "inversion depth fraction");
    cmd->add_option("--mode", r.mode, "oneshot|iterative");
    cmd->add_option("--steps", r.opts.steps, "DDIM sub-steps");
    cmd->add_option("--cfg", r.opts.cfg_scale, "classifier-free guidance scale");
    cmd->add_option("--seed", r.seed, "run seed (provenance)");
  };

  auto* refine = app.add_subcommand("refine", "inversion-then-forward motion refinement");
  add_refine_flags(refine, ra);

  auto* edit = app.add_subcommand("edit", "acceleration-scaled refinement");
  add_refine_flags(edit, ea);
  edit->add_option("--factor", ea.factor, "uniform acceleration factor");
  edit->add_option("--factor-map", ea.factor_map, "per-joint factors, JSON object");

  auto* invert = app.add_subcommand("invert", "DDIM-invert a motion to a latent");
  invert->add_option("--config", config_path, "JSON config file");
  invert->add_option("--input", ia.input_path, "motion file")->required();
  invert->add_option("--model", ia.model_path, "checkpoint params.json")->required();
  invert->add_option("--out", ia.out_path, "latent output file")->required();
  invert->add_option("--cond", ia.cond_path, "scenario JSON for the condition vector");
  invert->add_option("--t-inv", ia.opts.t_inv, "inversion depth (0 = frac*T)");
  invert->add_option("--t-inv-frac", ia.opts.t_inv_frac, "inversion depth fraction");
  invert->add_option("--mode", ia.mode, "oneshot|iterative");
  invert->add_option("--steps", ia.opts.steps, "DDIM sub-steps");
  invert->add_option("--seed", ia.seed, "run seed (provenance)");

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  gradcheck->add_option("--config", config_path, "JSON config file");
  gradcheck->add_option("--corpus", ga.corpus_dir, "corpus directory")->required();
  gradcheck->add_option("--probes", ga.probes, "number of probed parameters");
  gradcheck->add_option("--eps", ga.eps_fd, "finite-difference step");
  gradcheck->add_option("--seed", ga.seed, "model/probe seed");

  std::vector<const char*> argv;
  argv.push_back("biomech");
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    ConfigFile cf;
    if (metrics->parsed()) {
      cf.load(config_path,
              {"out_dir", "reference", "seed", "jobs", "contact_height", "float_height",
               "clip_dist", "skate_speed_inst", "skate_speed_avg", "pen_plane", "low_frac",
               "high_frac", "consistency_cap", "aggregation"});
      cf.apply(metrics, "--out-dir", "out_dir", ma.out_dir);
      cf.apply(metrics, "--reference", "reference", ma.reference);
      cf.apply(metrics, "--seed", "seed", ma.seed);
      cf.apply(metrics, "--jobs", "jobs", ma.jobs);
      cf.apply(metrics, "--contact-height", "contact_height", ma.mc.contact_height_m);
      cf.apply(metrics, "--float-height", "float_height", ma.mc.float_height_m);
      cf.apply(metrics, "--clip-dist", "clip_dist", ma.mc.clip_dist_m);
      cf.apply(metrics, "--skate-speed-inst", "skate_speed_inst", ma.mc.skate_speed_inst_mps);
      cf.apply(metrics, "--skate-speed-avg", "skate_speed_avg", ma.mc.skate_speed_avg_mps);
      cf.apply(metrics, "--pen-plane", "pen_plane", ma.mc.pen_plane_m);
      cf.apply(metrics, "--low-frac", "low_frac", ma.mc.low_frac);
      cf.apply(metrics, "--high-frac", "high_frac", ma.mc.high_frac);
      cf.apply(metrics, "--consistency-cap", "consistency_cap", ma.mc.consistency_cap);
      cf.apply(metrics, "--aggregation", "aggregation", ma.aggregation);
      ma.mc.aggregation = ma.aggregation == "paper-raw" ? MetricAggregation::kPaperRaw
                                                        : MetricAggregation::kPenalty;
      ma.mc.validate();
      return cmd_metrics(ma);
    }
    if (simulate->parsed()) {
      cf.load(config_path, {"seed", "clips", "scenario", "jobs"});
      cf.apply(simulate, "--seed", "seed", sa.seed);
      cf.apply(simulate, "--clips", "clips", sa.clips);
      cf.apply(simulate, "--scenario", "scenario", sa.scenario_path);
      cf.apply(simulate, "--jobs", "jobs", sa.jobs);
      return cmd_simulate(sa);
    }
    if (train->parsed()) {
      cf.load(config_path, {"steps", "batch", "lr", "weight_decay", "ema_decay", "t_max",
                            "cond_dropout", "pretrain_steps", "seed"});
      cf.apply(train, "--steps", "steps", ta.tc.steps);
      cf.apply(train, "--batch", "batch", ta.tc.batch_size);
      cf.apply(train, "--lr", "lr", ta.tc.learning_rate);
      cf.apply(train, "--weight-decay", "weight_decay", ta.tc.weight_decay);
      cf.apply(train, "--ema-decay", "ema_decay", ta.tc.ema_decay);
      cf.apply(train, "--t-max", "t_max", ta.tc.t_max);
      cf.apply(train, "--cond-dropout", "cond_dropout", ta.tc.cond_dropout);
      cf.apply(train, "--pretrain-steps", "pretrain_steps", ta.tc.pretrain_activation_steps);
      cf.apply(train, "--seed", "seed", ta.tc.seed);
      ta.tc.validate();
      return cmd_train(ta);
    }
    auto load_refine_cfg = [&](CLI::App* cmd, RefineArgs& r, bool edit_keys) {
      std::set<std::string> keys = {"cond",  "t_inv", "t_inv_frac", "mode",
                                    "steps", "cfg",   "seed"};
      if (edit_keys) {
        keys.insert("factor");
        keys.insert("factor_map");
      }
      cf.load(config_path, keys);
      cf.apply(cmd, "--cond", "cond", r.cond_path);
      cf.apply(cmd, "--t-inv", "t_inv", r.opts.t_inv);
      cf.apply(cmd, "--t-inv-frac", "t_inv_frac", r.opts.t_inv_frac);
      cf.apply(cmd, "--mode", "mode", r.mode);
      cf.apply(cmd, "--steps", "steps", r.opts.steps);
      cf.apply(cmd, "--cfg", "cfg", r.opts.cfg_scale);
      cf.apply(cmd, "--seed", "seed", r.seed);
      if (edit_keys) {
        cf.apply(cmd, "--factor", "factor", r.factor);
        cf.apply(cmd, "--factor-map", "factor_map", r.factor_map);
      }
    };
    if (refine->parsed()) {
      load_refine_cfg(refine, ra, false);
      return cmd_refine(ra);
    }
    if (edit->parsed()) {
      load_refine_cfg(edit, ea, true);
      return cmd_refine(ea);
    }
    if (invert->parsed()) {
      cf.load(config_path, {"cond", "t_inv", "t_inv_frac", "mode", "steps", "seed"});
      cf.apply(invert, "--cond", "cond", ia.cond_path);
      cf.apply(invert, "--t-inv", "t_inv", ia.opts.t_inv);
      cf.apply(invert, "--t-inv-frac", "t_inv_frac", ia.opts.t_inv_frac);
      cf.apply(invert, "--mode", "mode", ia.mode);
      cf.apply(invert, "--steps", "steps", ia.opts.steps);
      cf.apply(invert, "--seed", "seed", ia.seed);
      return cmd_invert(ia);
    }
    if (gradcheck->parsed()) {
      cf.load(config_path, {"probes", "eps", "seed"});
      cf.apply(gradcheck, "--probes", "probes", ga.probes);
      cf.apply(gradcheck, "--eps", "eps", ga.eps_fd);
      cf.apply(gradcheck, "--seed", "seed", ga.seed);
      return cmd_gradcheck(ga);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace biomech
