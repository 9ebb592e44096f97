#pragma once

// Tubelet-Merge Action-Split.
//
// TubeMerger links a time-ordered stream of tubelets into action-agnostic
// tubes and emits each tube as soon as nothing later can extend it.
// action_split then cuts every tube into per-class instances.

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "actdet/geometry.hpp"

namespace actdet {

struct MergeConfig {
  /// A candidate links a tubelet iff their link score is >= this (and > 0).
  double link_threshold{0.2};
  /// Largest frame gap across which a candidate can still be extended.
  FrameIndex gap_tolerance{16};
  LinkMode link_mode{LinkMode::kMeanFrameIou};

  void validate() const;
};

/// Joins `second` onto the end of `first`. A frame gap is filled with
/// interpolated boxes and scores; on overlapping frames the larger box and
/// the elementwise max of the scores are kept.
ActionTube concatenate(const ActionTube& first, const ActionTube& second);

/// Online merge state for one video. Single owner; not thread safe.
class TubeMerger {
 public:
  using Key = std::uint64_t;

  struct Link {
    Key target;
    double score;
  };

  struct Candidate {
    Key key;
    ActionTube tube;
    /// Links to later tubelets, in their arrival order.
    std::vector<Link> links;
    /// Links received from earlier tubes, including ones since finalized.
    int inbound{0};
    /// Stream time at which the first tubelet of this candidate arrived.
    FrameIndex arrival{0};
  };

  explicit TubeMerger(MergeConfig cfg = {});

  /// Adds the next tubelet of the stream and returns the tubes finalized
  /// by this step. The stream clock moves to the tubelet's start frame.
  /// Throws std::invalid_argument if the tubelet starts before the previous one.
  std::vector<ActionTube> push(const Tubelet& tubelet);

  /// Same, with the stream clock at `stream_time` (the start frame of the
  /// clip the tubelet was cut from). Tubelets pushed at the same stream time
  /// never link to each other; stream_time must not exceed the tubelet start.
  std::vector<ActionTube> push(const Tubelet& tubelet, FrameIndex stream_time);

  /// Moves the clock to `time` without new input, finalizing every
  /// candidate that can no longer be linked.
  std::vector<ActionTube> advance(FrameIndex time);

  /// Ends the stream: drains all candidates.
  std::vector<ActionTube> finish();

  [[nodiscard]] const std::vector<Candidate>& candidates() const noexcept { return candidates_; }
  [[nodiscard]] FrameIndex current_time() const noexcept { return current_time_; }
  [[nodiscard]] const MergeConfig& config() const noexcept { return cfg_; }
  /// Key the next pushed tubelet will receive.
  [[nodiscard]] Key next_key() const noexcept { return next_key_; }

 private:
  enum class EndOutcome { kFinalized, kMerged };

  std::vector<ActionTube> expire(bool everything);
  EndOutcome check_end(std::size_t index, std::vector<ActionTube>& finalized);
  void merge_into(std::size_t survivor, std::size_t absorbed);
  std::size_t index_of(Key key) const;

  MergeConfig cfg_;
  std::vector<Candidate> candidates_;
  FrameIndex current_time_{-1};
  Key next_key_{0};
};

/// Offline convenience: push every tubelet, then finish.
std::vector<ActionTube> merge_all(std::span<const Tubelet> tubelets, const MergeConfig& cfg);

struct SplitConfig {
  /// Moving-average half window (kappa).
  int smooth_half_window{8};
  /// A frame belongs to an instance when its smoothed score is > this (alpha).
  double score_threshold{0.5};
  /// An instance closes after more than this many low frames in a row (beta).
  FrameIndex max_gap{16};
  /// Instances spanning fewer frames are dropped (gamma).
  FrameIndex min_length{16};

  void validate() const;
};

/// Per-class moving average over 2k+1 frames; the window is truncated at
/// the tube ends and divided by the number of frames actually covered.
ActionTube smooth(const ActionTube& tube, int half_window);

/// Instances of one class in an already smoothed tube.
std::vector<ActionInstance> extract_actions(const ActionTube& smoothed, int class_id,
                                            const SplitConfig& cfg);

/// Smooths each tube and extracts instances for classes 1..C.
std::vector<ActionInstance> action_split(std::span<const ActionTube> tubes,
                                         std::size_t num_classes, const SplitConfig& cfg);

/// Baseline without merging or splitting: every tubelet whose mean class
/// score exceeds the threshold becomes an instance of its own.
std::vector<ActionInstance> independent_instances(std::span<const Tubelet> tubelets,
                                                  std::size_t num_classes,
                                                  double score_threshold);

}  // namespace actdet
