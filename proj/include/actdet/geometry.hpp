#pragma once

// Boxes, tubes and detections shared by every stage of the pipeline.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace actdet {

using FrameIndex = std::int64_t;

/// Axis-aligned box on one frame. Pixel intervals are half-open, so
/// [x1, x2) x [y1, y2) covers (x2 - x1) * (y2 - y1) pixels exactly.
class FrameBox {
 public:
  FrameBox() = default;
  /// Throws std::invalid_argument unless x1 < x2, y1 < y2, frame >= 0 and
  /// the top-left corner is non-negative.
  FrameBox(FrameIndex frame, int x1, int y1, int x2, int y2);

  [[nodiscard]] FrameIndex frame() const noexcept { return frame_; }
  [[nodiscard]] int x1() const noexcept { return x1_; }
  [[nodiscard]] int y1() const noexcept { return y1_; }
  [[nodiscard]] int x2() const noexcept { return x2_; }
  [[nodiscard]] int y2() const noexcept { return y2_; }
  [[nodiscard]] std::int64_t area() const noexcept {
    return static_cast<std::int64_t>(x2_ - x1_) * (y2_ - y1_);
  }
  [[nodiscard]] bool fits(int width, int height) const noexcept {
    return x2_ <= width && y2_ <= height;
  }
  /// Same rectangle placed on another frame.
  [[nodiscard]] FrameBox on_frame(FrameIndex frame) const;

  friend bool operator==(const FrameBox&, const FrameBox&) = default;
  friend auto operator<=>(const FrameBox&, const FrameBox&) = default;

 private:
  FrameIndex frame_{0};
  int x1_{0};
  int y1_{0};
  int x2_{1};
  int y2_{1};
};

/// Multi-label class scores: index 0 is background, 1..C are activities.
/// Entries are independent sigmoid outputs and need not sum to one.
class ScoreVector {
 public:
  ScoreVector() = default;
  explicit ScoreVector(std::vector<double> scores);
  static ScoreVector zeros(std::size_t num_classes);

  [[nodiscard]] std::size_t size() const noexcept { return scores_.size(); }
  [[nodiscard]] std::size_t num_classes() const noexcept {
    return scores_.empty() ? 0 : scores_.size() - 1;
  }
  [[nodiscard]] double operator[](std::size_t i) const { return scores_[i]; }
  [[nodiscard]] std::span<const double> values() const noexcept { return scores_; }

  friend bool operator==(const ScoreVector&, const ScoreVector&) = default;

 private:
  std::vector<double> scores_;
};

/// A run of consecutive frames with one box and one score vector each.
/// Used both for the per-clip tubelets and for the merged tubes built from
/// them; the two only differ in where they sit in the pipeline.
class Tube {
 public:
  Tube() = default;
  /// Boxes must be on consecutive frames starting at boxes.front().frame();
  /// scores must match boxes in count and share one width.
  Tube(std::string id, std::string video_id, std::vector<FrameBox> boxes,
       std::vector<ScoreVector> frame_scores);

  [[nodiscard]] const std::string& id() const noexcept { return id_; }
  [[nodiscard]] const std::string& video_id() const noexcept { return video_id_; }
  [[nodiscard]] FrameIndex start_frame() const noexcept { return boxes_.front().frame(); }
  [[nodiscard]] FrameIndex end_frame() const noexcept { return boxes_.back().frame(); }
  [[nodiscard]] std::size_t length() const noexcept { return boxes_.size(); }
  [[nodiscard]] std::size_t num_classes() const noexcept {
    return scores_.front().num_classes();
  }
  [[nodiscard]] const std::vector<FrameBox>& boxes() const noexcept { return boxes_; }
  [[nodiscard]] const std::vector<ScoreVector>& frame_scores() const noexcept {
    return scores_;
  }
  /// Box on an absolute frame inside [start_frame, end_frame].
  [[nodiscard]] const FrameBox& box_at(FrameIndex frame) const;
  [[nodiscard]] const ScoreVector& scores_at(FrameIndex frame) const;

  [[nodiscard]] Tube with_scores(std::vector<ScoreVector> frame_scores) const;

 private:
  std::string id_;
  std::string video_id_;
  std::vector<FrameBox> boxes_;
  std::vector<ScoreVector> scores_;
};

using Tubelet = Tube;
using ActionTube = Tube;

/// A class-specific detection: the system's final output.
struct ActionInstance {
  std::string video_id;
  int class_id{1};
  FrameIndex start_frame{0};
  FrameIndex end_frame{0};
  std::vector<FrameBox> boxes;
  double confidence{0.0};

  [[nodiscard]] FrameIndex length() const noexcept { return end_frame - start_frame + 1; }
  friend bool operator==(const ActionInstance&, const ActionInstance&) = default;
};

struct GroundTruthInstance {
  std::string video_id;
  int class_id{1};
  FrameIndex start_frame{0};
  FrameIndex end_frame{0};
  /// Optional per-frame boxes; empty when only temporal extent is annotated.
  std::vector<FrameBox> boxes;

  [[nodiscard]] FrameIndex length() const noexcept { return end_frame - start_frame + 1; }
  [[nodiscard]] const FrameBox* box_at(FrameIndex frame) const noexcept;
};

double box_iou(const FrameBox& a, const FrameBox& b) noexcept;

/// Number of frames two tubes have in common.
FrameIndex temporal_intersection(const Tube& a, const Tube& b) noexcept;

/// Temporal IoU of two inclusive frame spans.
double temporal_iou(FrameIndex a_start, FrameIndex a_end, FrameIndex b_start,
                    FrameIndex b_end) noexcept;

enum class LinkMode {
  kMeanFrameIou,  ///< mean per-frame box IoU over shared frames
  kVolumetric,    ///< summed intersection over summed union on shared frames
};

/// Spatio-temporal affinity between an existing tube and a later tubelet.
/// Overlapping spans use the shared frames; a gap of 1..gap_tolerance frames
/// falls back to the IoU of the facing boundary boxes; anything else is 0.
double tube_link_score(const Tube& prev, const Tube& next, FrameIndex gap_tolerance,
                       LinkMode mode = LinkMode::kMeanFrameIou) noexcept;

/// Linear interpolation between two boxes, rounded to the nearest pixel.
FrameBox interpolate_box(const FrameBox& a, const FrameBox& b, FrameIndex frame);

}  // namespace actdet
