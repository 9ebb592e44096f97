#pragma once

// Detection scoring in the ActEV style: one-to-one alignment of detections
// with reference instances, DET curves over a confidence sweep, miss
// probability at fixed false-alarm rates and normalized partial AUDC.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "actdet/geometry.hpp"

namespace actdet {

enum class FaAxis {
  /// False alarms per minute of video.
  kRate,
  /// Detected time outside same-class reference, as a fraction of the time
  /// containing no same-class reference.
  kTime,
};

struct DetPoint {
  double fa{0.0};
  double pmiss{1.0};
  /// Detections with confidence >= threshold produce this point.
  double threshold{0.0};
};

struct DetCurve {
  FaAxis axis{FaAxis::kRate};
  /// fa nondecreasing, pmiss nonincreasing. Always starts with the
  /// nothing-detected point (0, 1).
  std::vector<DetPoint> points;
};

struct AlignOptions {
  double min_temporal_iou{0.2};
  /// Also require mean per-frame box IoU >= min_spatial_iou where the
  /// reference carries boxes.
  bool spatial{false};
  double min_spatial_iou{0.1};
};

struct Alignment {
  /// (detection index, reference index)
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  std::vector<std::size_t> false_alarms;
  std::vector<std::size_t> misses;
};

struct ScoringConfig {
  AlignOptions align;
  double fps{30.0};
  /// Length of each video in frames. Videos absent here are assumed to end
  /// at the last frame any detection or reference touches.
  std::map<std::string, FrameIndex> video_frames;
  double rate_fa_limit{0.2};
  double time_fa_limit{0.2};
  std::vector<double> rate_operating_points{0.15};
  std::vector<double> time_operating_points{0.15, 0.04};
};

/// Greedy matching by descending confidence (ties keep input order). Each
/// detection takes the unmatched reference of the same video and class with
/// the highest temporal IoU, provided it reaches the minimum.
Alignment align(std::span<const ActionInstance> detections,
                std::span<const GroundTruthInstance> references, const AlignOptions& opts);

/// Throws std::invalid_argument when there are no references.
DetCurve det_curve(std::span<const ActionInstance> detections,
                   std::span<const GroundTruthInstance> references, FaAxis axis,
                   const ScoringConfig& cfg);

/// Step interpolation: pmiss of the last point with fa <= target, or 1.
double pmiss_at_fa(const DetCurve& curve, double fa_target);

/// Integral of the right-continuous pmiss step function over [0, fa_limit],
/// divided by fa_limit.
double audc(const DetCurve& curve, double fa_limit);

struct ClassMetrics {
  int class_id{0};
  std::size_t references{0};
  std::size_t detections{0};
  double n_audc_rate{1.0};
  double n_audc_time{1.0};
  /// operating point -> pmiss
  std::map<double, double> pmiss_at_rate_fa;
  std::map<double, double> pmiss_at_time_fa;
  DetCurve rate_curve;
  DetCurve time_curve;
};

struct ScoreReport {
  std::vector<ClassMetrics> classes;
  double mean_n_audc_rate{1.0};
  double mean_n_audc_time{1.0};
  std::map<double, double> mean_pmiss_at_rate_fa;
  std::map<double, double> mean_pmiss_at_time_fa;
};

/// Scores every class that has at least one reference instance and
/// macro-averages over them.
ScoreReport per_class_report(std::span<const ActionInstance> detections,
                             std::span<const GroundTruthInstance> references,
                             const ScoringConfig& cfg);

/// Fills in missing video lengths from the data.
std::map<std::string, FrameIndex> resolve_video_frames(
    std::span<const ActionInstance> detections, std::span<const GroundTruthInstance> references,
    const std::map<std::string, FrameIndex>& known);

}  // namespace actdet
