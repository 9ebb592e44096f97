#include "actdet/scorer.hpp"

#include <algorithm>
#include <iterator>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>

namespace actdet {

namespace {

std::vector<std::size_t> by_confidence(std::span<const ActionInstance> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].confidence > dets[b].confidence;
  });
  return order;
}

double mean_box_iou(const ActionInstance& det, const GroundTruthInstance& gt) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const FrameBox& b : det.boxes) {
    if (const FrameBox* g = gt.box_at(b.frame())) {
      sum += box_iou(b, *g);
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace

Alignment align(std::span<const ActionInstance> detections,
                std::span<const GroundTruthInstance> references, const AlignOptions& opts) {
  Alignment out;
  std::vector<bool> taken(references.size(), false);
  for (std::size_t d : by_confidence(detections)) {
    const ActionInstance& det = detections[d];
    std::size_t best = references.size();
    double best_iou = -1.0;
    for (std::size_t g = 0; g < references.size(); ++g) {
      const GroundTruthInstance& gt = references[g];
      if (taken[g] || gt.class_id != det.class_id || gt.video_id != det.video_id) continue;
      const double iou =
          temporal_iou(det.start_frame, det.end_frame, gt.start_frame, gt.end_frame);
      if (iou < opts.min_temporal_iou || iou <= best_iou) continue;
      if (opts.spatial && !gt.boxes.empty() && mean_box_iou(det, gt) < opts.min_spatial_iou) {
        continue;
      }
      best = g;
      best_iou = iou;
    }
    if (best < references.size()) {
      taken[best] = true;
      out.matches.emplace_back(d, best);
    } else {
      out.false_alarms.push_back(d);
    }
  }
  std::sort(out.false_alarms.begin(), out.false_alarms.end());
  for (std::size_t g = 0; g < references.size(); ++g) {
    if (!taken[g]) out.misses.push_back(g);
  }
  return out;
}

std::map<std::string, FrameIndex> resolve_video_frames(
    std::span<const ActionInstance> detections, std::span<const GroundTruthInstance> references,
    const std::map<std::string, FrameIndex>& known) {
  std::map<std::string, FrameIndex> out = known;
  std::map<std::string, FrameIndex> seen;
  for (const auto& d : detections) {
    seen[d.video_id] = std::max(seen[d.video_id], d.end_frame + 1);
  }
  for (const auto& g : references) {
    seen[g.video_id] = std::max(seen[g.video_id], g.end_frame + 1);
  }
  for (const auto& [video, frames] : seen) out.try_emplace(video, frames);
  return out;
}

namespace {

// Frame-level bookkeeping for the time-based axis, one lane per
// (video, class).
class TimeLedger {
 public:
  TimeLedger(std::span<const GroundTruthInstance> refs,
             const std::map<std::string, FrameIndex>& frames, const std::set<int>& classes) {
    for (const auto& [video, length] : frames) {
      for (int c : classes) {
        Lane& lane = lanes_[{video, c}];
        lane.reference.assign(static_cast<std::size_t>(length), false);
        lane.flagged.assign(static_cast<std::size_t>(length), false);
      }
    }
    for (const auto& g : refs) {
      Lane& lane = lanes_.at({g.video_id, g.class_id});
      const FrameIndex hi =
          std::min<FrameIndex>(g.end_frame, static_cast<FrameIndex>(lane.reference.size()) - 1);
      for (FrameIndex f = std::max<FrameIndex>(0, g.start_frame); f <= hi; ++f) {
        lane.reference[static_cast<std::size_t>(f)] = true;
      }
    }
    for (auto& [key, lane] : lanes_) {
      const auto covered =
          static_cast<FrameIndex>(std::count(lane.reference.begin(), lane.reference.end(), true));
      free_time_ += static_cast<FrameIndex>(lane.reference.size()) - covered;
    }
  }

  void add(const ActionInstance& det) {
    auto it = lanes_.find({det.video_id, det.class_id});
    if (it == lanes_.end()) return;
    Lane& lane = it->second;
    const FrameIndex hi = std::min<FrameIndex>(det.end_frame,
                                               static_cast<FrameIndex>(lane.reference.size()) - 1);
    for (FrameIndex f = std::max<FrameIndex>(0, det.start_frame); f <= hi; ++f) {
      const auto i = static_cast<std::size_t>(f);
      if (!lane.reference[i] && !lane.flagged[i]) {
        lane.flagged[i] = true;
        ++false_time_;
      }
    }
  }

  [[nodiscard]] double ratio() const {
    return free_time_ == 0 ? 0.0
                           : static_cast<double>(false_time_) / static_cast<double>(free_time_);
  }

 private:
  struct Lane {
    std::vector<bool> reference;
    std::vector<bool> flagged;
  };
  std::map<std::pair<std::string, int>, Lane> lanes_;
  FrameIndex free_time_{0};
  FrameIndex false_time_{0};
};

}  // namespace

DetCurve det_curve(std::span<const ActionInstance> detections,
                   std::span<const GroundTruthInstance> references, FaAxis axis,
                   const ScoringConfig& cfg) {
  if (references.empty()) {
    throw std::invalid_argument("det_curve: no reference instances, miss probability undefined");
  }
  const auto frames = resolve_video_frames(detections, references, cfg.video_frames);
  FrameIndex total_frames = 0;
  for (const auto& [video, n] : frames) total_frames += n;
  const double minutes = static_cast<double>(total_frames) / cfg.fps / 60.0;

  std::set<int> classes;
  for (const auto& g : references) classes.insert(g.class_id);
  for (const auto& d : detections) classes.insert(d.class_id);

  const Alignment al = align(detections, references, cfg.align);
  std::vector<bool> matched(detections.size(), false);
  for (const auto& m : al.matches) matched[m.first] = true;

  DetCurve curve{axis, {{0.0, 1.0, std::numeric_limits<double>::infinity()}}};
  const std::vector<std::size_t> order = by_confidence(detections);
  const double n_ref = static_cast<double>(references.size());
  std::size_t hits = 0;
  std::size_t false_alarms = 0;
  std::optional<TimeLedger> ledger;
  if (axis == FaAxis::kTime) ledger.emplace(references, frames, classes);

  for (std::size_t k = 0; k < order.size();) {
    const double threshold = detections[order[k]].confidence;
    // Detections sharing a confidence enter the sweep together.
    for (; k < order.size() && detections[order[k]].confidence == threshold; ++k) {
      const std::size_t d = order[k];
      if (matched[d]) {
        ++hits;
      } else {
        ++false_alarms;
      }
      if (ledger) ledger->add(detections[d]);
    }
    const double fa = axis == FaAxis::kRate
                          ? (minutes > 0.0 ? static_cast<double>(false_alarms) / minutes : 0.0)
                          : ledger->ratio();
    curve.points.push_back({fa, 1.0 - static_cast<double>(hits) / n_ref, threshold});
  }
  return curve;
}

double pmiss_at_fa(const DetCurve& curve, double fa_target) {
  double pmiss = 1.0;
  for (const DetPoint& p : curve.points) {
    if (p.fa > fa_target) break;
    pmiss = p.pmiss;
  }
  return pmiss;
}

double audc(const DetCurve& curve, double fa_limit) {
  if (!(fa_limit > 0.0)) throw std::invalid_argument("audc: fa_limit must be > 0");
  double area = 0.0;
  double x = 0.0;
  double value = 1.0;
  for (const DetPoint& p : curve.points) {
    if (p.fa > fa_limit) break;
    area += value * (p.fa - x);
    x = p.fa;
    value = p.pmiss;
  }
  area += value * (fa_limit - x);
  return area / fa_limit;
}

ScoreReport per_class_report(std::span<const ActionInstance> detections,
                             std::span<const GroundTruthInstance> references,
                             const ScoringConfig& cfg) {
  ScoringConfig shared = cfg;
  shared.video_frames = resolve_video_frames(detections, references, cfg.video_frames);

  std::set<int> classes;
  for (const auto& g : references) classes.insert(g.class_id);

  ScoreReport report;
  for (int c : classes) {
    std::vector<ActionInstance> dets;
    std::vector<GroundTruthInstance> refs;
    std::copy_if(detections.begin(), detections.end(), std::back_inserter(dets),
                 [c](const ActionInstance& d) { return d.class_id == c; });
    std::copy_if(references.begin(), references.end(), std::back_inserter(refs),
                 [c](const GroundTruthInstance& g) { return g.class_id == c; });
    ClassMetrics m;
    m.class_id = c;
    m.references = refs.size();
    m.detections = dets.size();
    m.rate_curve = det_curve(dets, refs, FaAxis::kRate, shared);
    m.time_curve = det_curve(dets, refs, FaAxis::kTime, shared);
    m.n_audc_rate = audc(m.rate_curve, cfg.rate_fa_limit);
    m.n_audc_time = audc(m.time_curve, cfg.time_fa_limit);
    for (double op : cfg.rate_operating_points) m.pmiss_at_rate_fa[op] = pmiss_at_fa(m.rate_curve, op);
    for (double op : cfg.time_operating_points) m.pmiss_at_time_fa[op] = pmiss_at_fa(m.time_curve, op);
    report.classes.push_back(std::move(m));
  }

  if (!report.classes.empty()) {
    const double n = static_cast<double>(report.classes.size());
    report.mean_n_audc_rate = 0.0;
    report.mean_n_audc_time = 0.0;
    for (const auto& m : report.classes) {
      report.mean_n_audc_rate += m.n_audc_rate / n;
      report.mean_n_audc_time += m.n_audc_time / n;
      for (const auto& [op, v] : m.pmiss_at_rate_fa) report.mean_pmiss_at_rate_fa[op] += v / n;
      for (const auto& [op, v] : m.pmiss_at_time_fa) report.mean_pmiss_at_time_fa[op] += v / n;
    }
  }
  return report;
}

}  // namespace actdet
