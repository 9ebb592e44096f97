#pragma once

// Turning a clip's foreground-probability volume into tubelets: threshold,
// label 3D connected components, then box each component frame by frame.

#include <cstdint>
#include <string>
#include <vector>

#include "actdet/geometry.hpp"
#include "actdet/loss.hpp"

namespace actdet {

/// Per-clip output of the localization network.
using ClipMask = MaskVolume;

struct BinaryVolume {
  Dims dims;
  std::vector<std::uint8_t> bits;

  [[nodiscard]] std::size_t count() const noexcept;
};

struct LabelVolume {
  Dims dims;
  /// 0 is background; components are numbered 1..count in scan order of
  /// their first voxel.
  std::vector<std::int32_t> labels;
  std::int32_t count{0};
};

enum class Connectivity { kFace = 6, kFull = 26 };

struct ExtractionConfig {
  double threshold{0.5};
  Connectivity connectivity{Connectivity::kFull};
  std::size_t min_voxels{50};
  std::int64_t min_frame_area{4};

  void validate() const;
};

/// Where a clip sits in its video; used for absolute frame numbers and ids.
struct ClipRef {
  std::string video_id;
  std::int64_t clip_index{0};
  FrameIndex start_frame{0};
};

BinaryVolume binarize(const ClipMask& mask, double threshold);

LabelVolume label_components(const BinaryVolume& volume, Connectivity connectivity);

/// One tubelet per component that survives the size filters. Frames inside a
/// component's span with no voxels get boxes interpolated from the nearest
/// populated frames. Scores start at zero with num_classes + 1 entries.
/// Tubelet ids are "<video_id>/<clip_index>/<component_index>" with the
/// zero-based index of the component before filtering.
std::vector<Tubelet> components_to_tubelets(const LabelVolume& labels, const ClipRef& clip,
                                            const ExtractionConfig& cfg,
                                            std::size_t num_classes);

std::vector<Tubelet> extract(const ClipMask& mask, const ClipRef& clip,
                             const ExtractionConfig& cfg, std::size_t num_classes);

std::string tubelet_id(const std::string& video_id, std::int64_t clip_index,
                       std::int64_t component_index);

}  // namespace actdet
