#pragma once

// Synthetic scenarios: rectangular actors sliding through a static scene,
// rendered straight to clip masks, with ground truth from their class
// timelines. Stands in for a real detector's output during evaluation.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "actdet/classify.hpp"
#include "actdet/pipeline.hpp"

namespace actdet {

/// Class shown over the inclusive frame span; class 0 means idle (no
/// activity, no ground truth).
struct ActivitySegment {
  int class_id{1};
  FrameIndex start_frame{0};
  FrameIndex end_frame{0};
};

struct ActorSpec {
  FrameIndex spawn_frame{0};
  /// Top-left corner on the spawn frame.
  double x{0.0};
  double y{0.0};
  /// Pixels per frame.
  double vx{0.0};
  double vy{0.0};
  int width{10};
  int height{10};
  /// Contiguous segments; together they cover the actor's lifetime, which
  /// starts at spawn_frame and ends with the last segment.
  std::vector<ActivitySegment> timeline;

  [[nodiscard]] FrameIndex last_frame() const { return timeline.back().end_frame; }
  /// Box on an absolute frame inside the lifetime.
  [[nodiscard]] FrameBox box_at(FrameIndex frame) const;
};

struct SyntheticScenario {
  std::uint64_t seed{0};
  std::string video_id{"synthetic"};
  FrameIndex duration{64};
  std::size_t height{112};
  std::size_t width{112};
  FrameIndex clip_length{16};
  FrameIndex clip_stride{16};
  /// Standard deviation of the Gaussian perturbation of mask probabilities.
  double noise{0.0};
  std::vector<ActorSpec> actors;

  /// Throws std::invalid_argument naming the actor and frame when an actor
  /// leaves the frame or its timeline has holes.
  void validate() const;
  [[nodiscard]] std::int64_t clip_count() const;
};

struct SyntheticVideo {
  SyntheticScenario scenario;
  /// Already passed through the byte quantization of the mask file format,
  /// so in-memory and on-disk runs see the same values.
  std::vector<ClipMask> clips;
  std::vector<GroundTruthInstance> truth;
};

ClipMask render_clip(const SyntheticScenario& scn, std::int64_t clip_index);
std::vector<GroundTruthInstance> scenario_truth(const SyntheticScenario& scn);
SyntheticVideo render(const SyntheticScenario& scn);

/// Per-class mean of the per-frame oracle over each extracted tubelet
/// (background = 1 - max), keyed by tubelet id.
FileBackedScores oracle_score_table(std::span<const SyntheticVideo> videos,
                                    const PipelineConfig& cfg);

/// Writes <dir>/masks/<video>/clip_<k>.gbm, <dir>/gt.json, <dir>/videos.json
/// and <dir>/scores.csv.
void write_synthetic(const std::filesystem::path& dir, std::span<const SyntheticVideo> videos,
                     const PipelineConfig& cfg);

MemoryClipSource memory_source(std::span<const SyntheticVideo> videos);
std::vector<GroundTruthInstance> all_truth(std::span<const SyntheticVideo> videos);
std::map<std::string, FrameIndex> video_lengths(std::span<const SyntheticVideo> videos);

struct RandomScenarioOptions {
  std::size_t actors{1};
  FrameIndex duration{1000};
  std::size_t num_classes{3};
  FrameIndex min_segment{120};
  FrameIndex max_segment{400};
  /// Probability that an actor stays alive for the whole video.
  double full_lifetime{0.5};
  double noise{0.0};
};

/// Actors in separate horizontal lanes with background between them, each
/// moving slowly enough to stay in frame. Consecutive segments of one actor
/// always have different classes.
SyntheticScenario random_scenario(std::uint64_t seed, const std::string& video_id,
                                  const RandomScenarioOptions& opts, const PipelineConfig& cfg);

/// One actor walking (class 1) across the frame for the whole video.
SyntheticScenario single_walker(const PipelineConfig& cfg, FrameIndex duration,
                                double noise = 0.0);
/// Two actors in adjacent lanes passing each other in opposite directions.
SyntheticScenario crossing_pair(const PipelineConfig& cfg, FrameIndex duration);
/// Long activities (classes 1 and 2, >= 300 frames) interleaved with short
/// ones (class 3, <= 32 frames).
SyntheticScenario mixed_lengths(std::uint64_t seed, const std::string& video_id,
                                const PipelineConfig& cfg, std::size_t actors,
                                FrameIndex duration);

/// Renders the scenarios, then times run_stream over them. Scoring uses the
/// oracle built from the scenarios' ground truth.
ThroughputReport benchmark(const PipelineConfig& cfg, std::span<const SyntheticScenario> scenarios);

}  // namespace actdet
