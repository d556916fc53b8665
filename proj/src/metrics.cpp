#include "biomech/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "biomech/json_writer.hpp"

namespace biomech {

namespace {

constexpr double kBandEpsilon = 1e-9;

double aggregate(const std::vector<double>& magnitudes, MetricAggregation mode) {
  if (magnitudes.empty()) return 0.0;
  double sum = 0.0;
  for (double m : magnitudes)
    sum += (mode == MetricAggregation::kPenalty) ? 1.0 - std::exp(-m) : std::exp(-m);
  return sum / static_cast<double>(magnitudes.size());
}

Eigen::VectorXd horizontal_speeds(const Eigen::MatrixXd& vel, int joint) {
  const int T = static_cast<int>(vel.rows());
  Eigen::VectorXd s(T);
  for (int t = 0; t < T; ++t) {
    const double vx = vel(t, 3 * joint);
    const double vz = vel(t, 3 * joint + 2);
    s[t] = std::hypot(vx, vz);
  }
  return s;
}

double windowed_mean(const Eigen::VectorXd& v, int center, int half_width) {
  const int T = static_cast<int>(v.size());
  const int lo = std::max(0, center - half_width);
  const int hi = std::min(T - 1, center + half_width);
  return v.segment(lo, hi - lo + 1).mean();
}

}  // namespace

void MetricConfig::validate() const {
  if (contact_height_m < 0 || float_height_m < 0 || clip_dist_m < 0 ||
      skate_speed_inst_mps < 0 || skate_speed_avg_mps < 0)
    throw std::invalid_argument("metric thresholds must be non-negative");
  if (!(low_frac >= 0.0 && low_frac < high_frac && high_frac <= 1.0))
    throw std::invalid_argument("band fractions must satisfy 0 <= low < high <= 1");
  if (consistency_cap <= 0.0) throw std::invalid_argument("consistency cap must be positive");
}

const ReferenceStats& reference_stats(const std::string& dataset_id) {
  static const ReferenceStats humanml3d{"humanml3d-gt", 0.124, 0.682, 0.358, 2.60,
                                        0.205,          0.057, 0.000, 0.000};
  static const ReferenceStats kitml{"kitml-gt", 0.352, 1.379, 0.926, 3.06,
                                    0.550,      0.309, 0.208, 0.001};
  if (dataset_id == "humanml3d-gt") return humanml3d;
  if (dataset_id == "kitml-gt") return kitml;
  throw std::invalid_argument("unknown reference dataset \"" + dataset_id + "\"");
}

double foot_skating(const MotionSequence& seq, const Skeleton& skel, const MetricConfig& cfg) {
  seq.validate();
  cfg.validate();
  if (skel.foot_left < 0 || skel.foot_right < 0 ||
      skel.foot_left >= seq.joint_count() || skel.foot_right >= seq.joint_count())
    throw std::invalid_argument("skeleton foot indices missing or out of range");
  const int T = seq.frames();
  if (T < 3) throw std::invalid_argument("sequence too short for foot skating (T >= 3)");

  const Eigen::MatrixXd vel = finite_diff_matrix(seq.positions, seq.fps);
  std::vector<double> magnitudes;
  magnitudes.reserve(2 * static_cast<size_t>(T));
  for (int foot : {skel.foot_left, skel.foot_right}) {
    const Eigen::VectorXd speed = horizontal_speeds(vel, foot);
    for (int t = 0; t < T; ++t) {
      double m = 0.0;
      if (t > 0 && t < T - 1) {
        const double height = seq.positions(t, 3 * foot + 1);
        const bool contact = height < cfg.contact_height_m;
        const bool fast = speed[t] > cfg.skate_speed_inst_mps;
        const bool fast_avg = windowed_mean(speed, t, 2) > cfg.skate_speed_avg_mps;
        if (contact && fast && fast_avg) m = speed[t];
      }
      magnitudes.push_back(m);
    }
  }
  return aggregate(magnitudes, cfg.aggregation);
}

GroundClearance ground_clearance(const MotionSequence& seq, const Skeleton& skel,
                                 const MetricConfig& cfg) {
  seq.validate();
  cfg.validate();
  if (skel.lowest_candidates.empty())
    throw std::invalid_argument("skeleton has no lowest-joint candidates");
  for (int c : skel.lowest_candidates)
    if (c < 0 || c >= seq.joint_count())
      throw std::invalid_argument("lowest candidate index out of range");

  const int T = seq.frames();
  std::vector<double> float_mags(T, 0.0), pen_mags(T, 0.0);
  for (int t = 0; t < T; ++t) {
    double lowest = std::numeric_limits<double>::infinity();
    for (int c : skel.lowest_candidates) lowest = std::min(lowest, seq.positions(t, 3 * c + 1));
    if (lowest > cfg.float_height_m) float_mags[t] = lowest - cfg.float_height_m;
    if (lowest < cfg.pen_plane_m) pen_mags[t] = cfg.pen_plane_m - lowest;
  }
  return {aggregate(float_mags, cfg.aggregation), aggregate(pen_mags, cfg.aggregation)};
}

double foot_clip(const MotionSequence& seq, const Skeleton& skel, const MetricConfig& cfg) {
  seq.validate();
  cfg.validate();
  if (skel.foot_left < 0 || skel.foot_right < 0 ||
      skel.foot_left >= seq.joint_count() || skel.foot_right >= seq.joint_count())
    throw std::invalid_argument("skeleton foot indices missing or out of range");
  const int T = seq.frames();
  std::vector<double> magnitudes(T, 0.0);
  for (int t = 0; t < T; ++t) {
    const double dist = (seq.joint(t, skel.foot_left) - seq.joint(t, skel.foot_right)).norm();
    if (dist < cfg.clip_dist_m) magnitudes[t] = cfg.clip_dist_m - dist;
  }
  return aggregate(magnitudes, cfg.aggregation);
}

double speed_metric(const MotionSequence& seq, const MetricConfig& cfg) {
  seq.validate();
  cfg.validate();
  const int T = seq.frames();
  if (T < 2) throw std::invalid_argument("sequence too short for speed (T >= 2)");
  const int J = seq.joint_count();
  const double dt = 1.0 / seq.fps;
  double sum = 0.0;
  for (int t = 1; t < T; ++t)
    for (int j = 0; j < J; ++j)
      sum += (seq.joint(t, j) - seq.joint(t - 1, j)).norm() / dt;
  return sum / (static_cast<double>(T - 1) * J);
}

double smoothness_metric(const MotionSequence& seq, const MetricConfig& cfg) {
  seq.validate();
  cfg.validate();
  const int T = seq.frames();
  if (T < 4) throw std::invalid_argument("sequence too short for smoothness (T >= 4)");
  const double dt = 1.0 / seq.fps;
  // central second differences are valid on [1, T-2]; their backward
  // differences on [2, T-2]
  const Eigen::MatrixXd accel = second_derivative_matrix(seq.positions, seq.fps);
  const int C = static_cast<int>(accel.cols());
  double sum = 0.0;
  int count = 0;
  for (int t = 2; t <= T - 2; ++t) {
    sum += (accel.row(t) - accel.row(t - 1)).cwiseAbs().sum() / dt;
    count += C;
  }
  return sum / count;
}

double consistency_from_bands(double low, double high, double cap) {
  const double denom = low + high;
  if (denom < kBandEpsilon) return cap;
  return (1.0 - low - high) / denom;
}

double consistency(const MotionSequence& seq, const MetricConfig& cfg, ConsistencyKind kind) {
  seq.validate();
  cfg.validate();
  const int T = seq.frames();
  if (T < 8) throw std::invalid_argument("sequence too short for consistency (T >= 8)");

  const Eigen::MatrixXd deriv = (kind == ConsistencyKind::kVelocity)
                                    ? finite_diff_matrix(seq.positions, seq.fps)
                                    : second_derivative_matrix(seq.positions, seq.fps);
  const int C = static_cast<int>(deriv.cols());
  double low_sq = 0.0, high_sq = 0.0;
  int active = 0;
  for (int c = 0; c < C; ++c) {
    const Eigen::VectorXd channel = deriv.col(c);
    if (channel.norm() == 0.0) continue;  // carries no motion content
    const MagnitudeSpectrum spec = spectrum(channel, seq.fps, SpectrumNormalization::kUnitL2);
    const BandNorms b = band_norms(spec, cfg.low_frac, cfg.high_frac);
    low_sq += b.low * b.low;
    high_sq += b.high * b.high;
    ++active;
  }
  if (active == 0) return cfg.consistency_cap;
  const double low = std::sqrt(low_sq / active);
  const double high = std::sqrt(high_sq / active);
  return consistency_from_bands(low, high, cfg.consistency_cap);
}

MetricReport full_report(const MotionSequence& seq, const Skeleton& skel,
                         const MetricConfig& cfg) {
  MetricReport r;
  r.vc = consistency(seq, cfg, ConsistencyKind::kVelocity);
  r.ac = consistency(seq, cfg, ConsistencyKind::kAcceleration);
  r.speed_mps = speed_metric(seq, cfg);
  r.smoothness = smoothness_metric(seq, cfg);
  const GroundClearance gc = ground_clearance(seq, skel, cfg);
  r.floating = gc.floating;
  r.penetrate = gc.penetrate;
  r.foot_skating = foot_skating(seq, skel, cfg);
  r.clip = foot_clip(seq, skel, cfg);
  r.config = cfg;
  r.frames = seq.frames();
  return r;
}

MetricDeviations compare_to_reference(const MetricReport& report, const ReferenceStats& ref) {
  return {report.vc - ref.vc,
          report.ac - ref.ac,
          report.speed_mps - ref.speed_mps,
          report.smoothness - ref.smoothness,
          report.floating - ref.floating,
          report.foot_skating - ref.foot_skating,
          report.penetrate - ref.penetrate,
          report.clip - ref.clip};
}

std::string report_to_json(const MetricReport& report,
                           const std::map<std::string, std::string>& run_info) {
  JsonWriter w;
  w.begin_object();
  w.key("ac");
  w.value(report.ac);
  w.key("clip");
  w.value(report.clip);
  w.key("config");
  w.begin_object();
  w.key("aggregation");
  w.value(report.config.aggregation == MetricAggregation::kPenalty ? "penalty" : "paper-raw");
  w.key("clip_dist_m");
  w.value(report.config.clip_dist_m);
  w.key("consistency_cap");
  w.value(report.config.consistency_cap);
  w.key("contact_height_m");
  w.value(report.config.contact_height_m);
  w.key("float_height_m");
  w.value(report.config.float_height_m);
  w.key("high_frac");
  w.value(report.config.high_frac);
  w.key("low_frac");
  w.value(report.config.low_frac);
  w.key("pen_plane_m");
  w.value(report.config.pen_plane_m);
  if (!run_info.empty()) {
    w.key("run");
    w.begin_object();
    for (const auto& [k, v] : run_info) {
      w.key(k);
      w.value(v);
    }
    w.end_object();
  }
  w.key("skate_speed_avg_mps");
  w.value(report.config.skate_speed_avg_mps);
  w.key("skate_speed_inst_mps");
  w.value(report.config.skate_speed_inst_mps);
  w.end_object();
  w.key("float");
  w.value(report.floating);
  w.key("foot_skating");
  w.value(report.foot_skating);
  w.key("frames");
  w.value_int(report.frames);
  w.key("penetrate");
  w.value(report.penetrate);
  w.key("smoothness");
  w.value(report.smoothness);
  w.key("speed");
  w.value(report.speed_mps);
  w.key("vc");
  w.value(report.vc);
  w.end_object();
  return w.str() + "\n";
}

MetricReport report_from_json(const std::string& text, const std::string& origin) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw std::runtime_error("malformed JSON in " + origin);
  MetricReport r;
  r.vc = doc.at("vc").get<double>();
  r.ac = doc.at("ac").get<double>();
  r.speed_mps = doc.at("speed").get<double>();
  r.smoothness = doc.at("smoothness").get<double>();
  r.floating = doc.at("float").get<double>();
  r.foot_skating = doc.at("foot_skating").get<double>();
  r.penetrate = doc.at("penetrate").get<double>();
  r.clip = doc.at("clip").get<double>();
  r.frames = doc.at("frames").get<int>();
  const auto& c = doc.at("config");
  r.config.contact_height_m = c.at("contact_height_m").get<double>();
  r.config.float_height_m = c.at("float_height_m").get<double>();
  r.config.clip_dist_m = c.at("clip_dist_m").get<double>();
  r.config.skate_speed_inst_mps = c.at("skate_speed_inst_mps").get<double>();
  r.config.skate_speed_avg_mps = c.at("skate_speed_avg_mps").get<double>();
  r.config.pen_plane_m = c.at("pen_plane_m").get<double>();
  r.config.low_frac = c.at("low_frac").get<double>();
  r.config.high_frac = c.at("high_frac").get<double>();
  r.config.consistency_cap = c.at("consistency_cap").get<double>();
  r.config.aggregation = c.at("aggregation").get<std::string>() == "paper-raw"
                             ? MetricAggregation::kPaperRaw
                             : MetricAggregation::kPenalty;
  return r;
}

}  // namespace biomech
