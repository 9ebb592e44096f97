#pragma once

// On-disk formats.
//
//   .gbm clip mask   "GBM1", u32 version=1, u32 T, u32 H, u32 W (little endian),
//                    then T*H*W bytes in (t, y, x) order, byte = round(p * 255).
//                    Stored as <root>/<video_id>/clip_<index>.gbm.
//   tubelets         JSON Lines, one Tube per line.
//   detections       JSON Lines, one ActionInstance per line.
//   ground truth     JSON array of GroundTruthInstance.
//   video lengths    JSON object {video_id: frame_count}.
//   score table      CSV "tubelet_id,score_0,...,score_C".
//   DET curves       CSV "class_id,axis,threshold,fa,pmiss".

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "actdet/classify.hpp"
#include "actdet/extract.hpp"
#include "actdet/geometry.hpp"
#include "actdet/scorer.hpp"

namespace actdet {

/// Malformed input; offset is the byte (or line, for text formats) where
/// parsing stopped.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  [[nodiscard]] std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

inline constexpr std::uint32_t kGbmVersion = 1;

std::vector<std::uint8_t> quantize_mask(const ClipMask& mask);
ClipMask dequantize_mask(const Dims& dims, std::span<const std::uint8_t> bytes);

void write_gbm(std::ostream& out, const ClipMask& mask);
void write_gbm(const std::filesystem::path& path, const ClipMask& mask);
ClipMask read_gbm(std::istream& in);
ClipMask read_gbm(const std::filesystem::path& path);

std::filesystem::path clip_path(const std::filesystem::path& root, const std::string& video_id,
                                std::int64_t clip_index);

/// Video ids under a mask root, sorted.
std::vector<std::string> list_videos(const std::filesystem::path& root);

/// Number of clips for a video. Throws std::runtime_error naming the first
/// missing index if the clip files are not numbered 0..n-1 without holes.
std::int64_t count_clips(const std::filesystem::path& root, const std::string& video_id);

nlohmann::json to_json(const Tube& tube);
Tube tube_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ActionInstance& inst);
ActionInstance instance_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GroundTruthInstance& gt);
GroundTruthInstance ground_truth_from_json(const nlohmann::json& j);

void write_tubes_jsonl(std::ostream& out, const std::vector<Tube>& tubes);
std::vector<Tube> read_tubes_jsonl(std::istream& in);
void write_instances_jsonl(std::ostream& out, const std::vector<ActionInstance>& instances);
std::vector<ActionInstance> read_instances_jsonl(std::istream& in);

void write_ground_truth(std::ostream& out, const std::vector<GroundTruthInstance>& truth);
std::vector<GroundTruthInstance> read_ground_truth(std::istream& in);

void write_video_frames(std::ostream& out, const std::map<std::string, FrameIndex>& frames);
std::map<std::string, FrameIndex> read_video_frames(std::istream& in);

void write_score_table(std::ostream& out, const FileBackedScores& scores);
FileBackedScores read_score_table(std::istream& in);

void write_det_curves_csv(std::ostream& out, const ScoreReport& report);
nlohmann::json to_json(const ScoreReport& report);

std::string read_text(const std::filesystem::path& path);

}  // namespace actdet
