#pragma once

#include <map>
#include <optional>
#include <string>

#include "biomech/kinematics.hpp"
#include "biomech/motion.hpp"
#include "biomech/skeleton.hpp"

namespace biomech {

// Frame scores follow exp(-violation); "penalty" reports mean(1 - exp(-m))
// so a violation-free sequence scores 0, "paper_raw" reports mean(exp(-m)).
enum class MetricAggregation { kPenalty, kPaperRaw };

struct MetricConfig {
  double contact_height_m = 0.05;
  double float_height_m = 0.05;
  double clip_dist_m = 0.05;
  double skate_speed_inst_mps = 0.50;
  double skate_speed_avg_mps = 0.30;
  double pen_plane_m = 0.0;
  double low_frac = 0.10;
  double high_frac = 0.50;
  MetricAggregation aggregation = MetricAggregation::kPenalty;
  double consistency_cap = 100.0;

  void validate() const;
};

struct MetricReport {
  double vc = 0.0;
  double ac = 0.0;
  double speed_mps = 0.0;
  double smoothness = 0.0;
  double floating = 0.0;  // "float" in serialized form
  double foot_skating = 0.0;
  double penetrate = 0.0;
  double clip = 0.0;
  MetricConfig config;
  int frames = 0;
};

struct ReferenceStats {
  std::string dataset_id;
  double vc, ac, speed_mps, smoothness, floating, foot_skating, penetrate, clip;
};

// ids: "humanml3d-gt", "kitml-gt"
const ReferenceStats& reference_stats(const std::string& dataset_id);

// Horizontal foot speed while the foot is in ground contact and above both
// velocity thresholds (instantaneous and 5-frame window average). Endpoint
// frames have no central velocity estimate and never count as violations.
double foot_skating(const MotionSequence& seq, const Skeleton& skel, const MetricConfig& cfg);

struct GroundClearance {
  double floating = 0.0;
  double penetrate = 0.0;
};
GroundClearance ground_clearance(const MotionSequence& seq, const Skeleton& skel,
                                 const MetricConfig& cfg);

double foot_clip(const MotionSequence& seq, const Skeleton& skel, const MetricConfig& cfg);

// mean per-frame joint displacement speed, m/s
double speed_metric(const MotionSequence& seq, const MetricConfig& cfg);

// mean component-wise |jerk| over fully-central interior frames, m/s^3
double smoothness_metric(const MotionSequence& seq, const MetricConfig& cfg);

enum class ConsistencyKind { kVelocity, kAcceleration };

// Spectral band-ratio metric (1 - l - h) / (l + h) over unit-L2 per-channel
// spectra of the velocity or acceleration signal, band masses aggregated by
// RMS over channels. Returns config.consistency_cap when l + h < 1e-9.
double consistency(const MotionSequence& seq, const MetricConfig& cfg, ConsistencyKind kind);
double consistency_from_bands(double low, double high, double cap);

MetricReport full_report(const MotionSequence& seq, const Skeleton& skel,
                         const MetricConfig& cfg);

struct MetricDeviations {
  double vc, ac, speed_mps, smoothness, floating, foot_skating, penetrate, clip;
};
MetricDeviations compare_to_reference(const MetricReport& report, const ReferenceStats& ref);

// Canonical report serialization; run_info (if any) lands under config.run.
std::string report_to_json(const MetricReport& report,
                           const std::map<std::string, std::string>& run_info = {});
MetricReport report_from_json(const std::string& text, const std::string& origin);

}  // namespace biomech
