#include "actdet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace actdet {

FrameBox::FrameBox(FrameIndex frame, int x1, int y1, int x2, int y2)
    : frame_(frame), x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
  if (frame < 0) throw std::invalid_argument("FrameBox: negative frame index");
  if (x1 < 0 || y1 < 0) throw std::invalid_argument("FrameBox: negative coordinate");
  if (x1 >= x2 || y1 >= y2) {
    throw std::invalid_argument("FrameBox: degenerate box (" + std::to_string(x1) + "," +
                                std::to_string(y1) + "," + std::to_string(x2) + "," +
                                std::to_string(y2) + ")");
  }
}

FrameBox FrameBox::on_frame(FrameIndex frame) const { return {frame, x1_, y1_, x2_, y2_}; }

ScoreVector::ScoreVector(std::vector<double> scores) : scores_(std::move(scores)) {
  if (scores_.size() < 2) {
    throw std::invalid_argument("ScoreVector: need background plus at least one class");
  }
  for (double s : scores_) {
    if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("ScoreVector: score outside [0,1]");
  }
}

ScoreVector ScoreVector::zeros(std::size_t num_classes) {
  return ScoreVector(std::vector<double>(num_classes + 1, 0.0));
}

Tube::Tube(std::string id, std::string video_id, std::vector<FrameBox> boxes,
           std::vector<ScoreVector> frame_scores)
    : id_(std::move(id)),
      video_id_(std::move(video_id)),
      boxes_(std::move(boxes)),
      scores_(std::move(frame_scores)) {
  if (boxes_.empty()) throw std::invalid_argument("Tube " + id_ + ": no frames");
  if (boxes_.size() != scores_.size()) {
    throw std::invalid_argument("Tube " + id_ + ": box and score counts differ");
  }
  const FrameIndex start = boxes_.front().frame();
  const std::size_t width = scores_.front().size();
  for (std::size_t k = 0; k < boxes_.size(); ++k) {
    if (boxes_[k].frame() != start + static_cast<FrameIndex>(k)) {
      throw std::invalid_argument("Tube " + id_ + ": frames are not consecutive");
    }
    if (scores_[k].size() != width) {
      throw std::invalid_argument("Tube " + id_ + ": score vectors differ in length");
    }
  }
}

const FrameBox& Tube::box_at(FrameIndex frame) const {
  return boxes_.at(static_cast<std::size_t>(frame - start_frame()));
}

const ScoreVector& Tube::scores_at(FrameIndex frame) const {
  return scores_.at(static_cast<std::size_t>(frame - start_frame()));
}

Tube Tube::with_scores(std::vector<ScoreVector> frame_scores) const {
  return Tube(id_, video_id_, boxes_, std::move(frame_scores));
}

const FrameBox* GroundTruthInstance::box_at(FrameIndex frame) const noexcept {
  if (boxes.empty()) return nullptr;
  const FrameIndex offset = frame - boxes.front().frame();
  if (offset >= 0 && offset < static_cast<FrameIndex>(boxes.size()) &&
      boxes[static_cast<std::size_t>(offset)].frame() == frame) {
    return &boxes[static_cast<std::size_t>(offset)];
  }
  // Sparse annotation: fall back to a search.
  auto it = std::lower_bound(boxes.begin(), boxes.end(), frame,
                             [](const FrameBox& b, FrameIndex f) { return b.frame() < f; });
  return (it != boxes.end() && it->frame() == frame) ? &*it : nullptr;
}

namespace {

std::int64_t intersection_area(const FrameBox& a, const FrameBox& b) noexcept {
  const int w = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const int h = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (w <= 0 || h <= 0) return 0;
  return static_cast<std::int64_t>(w) * h;
}

}  // namespace

double box_iou(const FrameBox& a, const FrameBox& b) noexcept {
  const std::int64_t inter = intersection_area(a, b);
  if (inter == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(a.area() + b.area() - inter);
}

FrameIndex temporal_intersection(const Tube& a, const Tube& b) noexcept {
  const FrameIndex lo = std::max(a.start_frame(), b.start_frame());
  const FrameIndex hi = std::min(a.end_frame(), b.end_frame());
  return std::max<FrameIndex>(0, hi - lo + 1);
}

double temporal_iou(FrameIndex a_start, FrameIndex a_end, FrameIndex b_start,
                    FrameIndex b_end) noexcept {
  const FrameIndex inter =
      std::max<FrameIndex>(0, std::min(a_end, b_end) - std::max(a_start, b_start) + 1);
  if (inter == 0) return 0.0;
  const FrameIndex uni = (a_end - a_start + 1) + (b_end - b_start + 1) - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double tube_link_score(const Tube& prev, const Tube& next, FrameIndex gap_tolerance,
                       LinkMode mode) noexcept {
  const FrameIndex shared = temporal_intersection(prev, next);
  if (shared > 0) {
    const FrameIndex lo = std::max(prev.start_frame(), next.start_frame());
    const FrameIndex hi = lo + shared;
    if (mode == LinkMode::kMeanFrameIou) {
      double sum = 0.0;
      for (FrameIndex f = lo; f < hi; ++f) sum += box_iou(prev.box_at(f), next.box_at(f));
      return sum / static_cast<double>(shared);
    }
    std::int64_t inter = 0;
    std::int64_t uni = 0;
    for (FrameIndex f = lo; f < hi; ++f) {
      const FrameBox& a = prev.box_at(f);
      const FrameBox& b = next.box_at(f);
      const std::int64_t i = intersection_area(a, b);
      inter += i;
      uni += a.area() + b.area() - i;
    }
    return static_cast<double>(inter) / static_cast<double>(uni);
  }
  const FrameIndex gap = next.start_frame() - prev.end_frame();
  if (gap > 0 && gap <= gap_tolerance) {
    return box_iou(prev.boxes().back(), next.boxes().front());
  }
  return 0.0;
}

FrameBox interpolate_box(const FrameBox& a, const FrameBox& b, FrameIndex frame) {
  const double span = static_cast<double>(b.frame() - a.frame());
  const double t = span == 0.0 ? 0.0 : static_cast<double>(frame - a.frame()) / span;
  auto lerp = [t](int u, int v) {
    return static_cast<int>(std::floor(u + t * (v - u) + 0.5));
  };
  return {frame, lerp(a.x1(), b.x1()), lerp(a.y1(), b.y1()), lerp(a.x2(), b.x2()),
          lerp(a.y2(), b.y2())};
}

}  // namespace actdet
