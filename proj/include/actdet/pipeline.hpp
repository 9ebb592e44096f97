#pragma once

// Streaming driver: per clip extract -> score -> merge, with finalized tubes
// split and emitted as soon as the merger lets go of them.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "actdet/classify.hpp"
#include "actdet/extract.hpp"
#include "actdet/scorer.hpp"
#include "actdet/tmas.hpp"

namespace actdet {

struct PipelineConfig {
  FrameIndex clip_length{16};
  FrameIndex clip_stride{16};
  std::size_t height{448};
  std::size_t width{800};
  ExtractionConfig extraction;
  MergeConfig merge;
  SplitConfig split;
  ScoringConfig scoring;
  ClassCatalog catalog = ClassCatalog::numbered(1);
  int workers{1};
  /// false scores every tubelet on its own, without merging or splitting.
  bool use_tmas{true};

  void validate() const;
};

/// Reads "key = value" lines; "[section]" prefixes later keys with
/// "section."; '#' starts a comment. Unknown keys are an error.
PipelineConfig parse_config(const std::string& text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});
/// Applies one "key", "value" pair, as the config file would.
void apply_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);

/// Random access to the clip masks of a set of videos.
class ClipSource {
 public:
  virtual ~ClipSource() = default;
  [[nodiscard]] virtual std::vector<std::string> videos() const = 0;
  [[nodiscard]] virtual std::int64_t clip_count(const std::string& video_id) const = 0;
  [[nodiscard]] virtual ClipMask load(const std::string& video_id, std::int64_t index) const = 0;
};

/// Clips stored as <root>/<video_id>/clip_<index>.gbm.
class DirectoryClipSource final : public ClipSource {
 public:
  explicit DirectoryClipSource(std::filesystem::path root);
  [[nodiscard]] std::vector<std::string> videos() const override;
  [[nodiscard]] std::int64_t clip_count(const std::string& video_id) const override;
  [[nodiscard]] ClipMask load(const std::string& video_id, std::int64_t index) const override;

 private:
  std::filesystem::path root_;
};

class MemoryClipSource final : public ClipSource {
 public:
  void add(const std::string& video_id, std::vector<ClipMask> clips);
  [[nodiscard]] std::vector<std::string> videos() const override;
  [[nodiscard]] std::int64_t clip_count(const std::string& video_id) const override;
  [[nodiscard]] ClipMask load(const std::string& video_id, std::int64_t index) const override;

 private:
  std::map<std::string, std::vector<ClipMask>> clips_;
};

/// Seconds spent per stage. For multi-worker runs these are per-worker
/// averages, so they never add up to more than the wall time.
struct StageTimes {
  double io{0.0};
  double extract{0.0};
  double classify{0.0};
  double merge{0.0};
  double split{0.0};

  [[nodiscard]] double total() const noexcept { return io + extract + classify + merge + split; }
};

struct ThroughputReport {
  std::uint64_t frames{0};
  std::uint64_t clips{0};
  std::uint64_t videos{0};
  int workers{1};
  double wall_seconds{0.0};
  double fps{0.0};
  StageTimes stages;
};

struct Emission {
  ActionInstance instance;
  /// Clip whose processing released the instance; clip_count means the
  /// end-of-stream flush.
  std::int64_t clip_index{0};
};

struct VideoResult {
  std::string video_id;
  std::vector<Emission> emissions;
  std::uint64_t frames{0};
  std::uint64_t clips{0};
  StageTimes stages;
};

struct StreamResult {
  /// Sorted by video id, then emission order.
  std::vector<ActionInstance> instances;
  std::vector<VideoResult> videos;
  ThroughputReport report;
};

/// Online run over one video.
VideoResult run_video(const PipelineConfig& cfg, const std::string& video_id,
                      const ClipSource& clips, const ScoreSource& scores,
                      const std::function<void(const Emission&)>& sink = {});

/// Runs every listed video (all videos of the source when empty) on
/// cfg.workers threads. Output is independent of the worker count.
StreamResult run_stream(const PipelineConfig& cfg, const ClipSource& clips,
                        const ScoreSource& scores, std::vector<std::string> video_ids = {});

nlohmann::json to_json(const ThroughputReport& report);

}  // namespace actdet
