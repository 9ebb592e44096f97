#include "actdet/extract.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace actdet {

std::size_t BinaryVolume::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

void ExtractionConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("ExtractionConfig: threshold must lie in (0,1)");
  }
  if (connectivity != Connectivity::kFace && connectivity != Connectivity::kFull) {
    throw std::invalid_argument("ExtractionConfig: connectivity must be 6 or 26");
  }
  if (min_frame_area < 0) throw std::invalid_argument("ExtractionConfig: min_frame_area < 0");
}

std::string tubelet_id(const std::string& video_id, std::int64_t clip_index,
                       std::int64_t component_index) {
  return video_id + "/" + std::to_string(clip_index) + "/" + std::to_string(component_index);
}

BinaryVolume binarize(const ClipMask& mask, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("binarize: threshold must lie in (0,1)");
  }
  BinaryVolume out{mask.dims(), std::vector<std::uint8_t>(mask.dims().voxels(), 0)};
  auto values = mask.values();
  for (std::size_t i = 0; i < values.size(); ++i) out.bits[i] = values[i] >= threshold ? 1 : 0;
  return out;
}

namespace {

struct Offset {
  int dt, dy, dx;
};

// Neighbours already visited in (t, y, x) scan order.
constexpr std::array<Offset, 3> kFacePrior{{{-1, 0, 0}, {0, -1, 0}, {0, 0, -1}}};

constexpr std::array<Offset, 13> make_full_prior() {
  std::array<Offset, 13> out{};
  std::size_t n = 0;
  for (int dt = -1; dt <= 0; ++dt) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const bool before = dt < 0 || (dt == 0 && (dy < 0 || (dy == 0 && dx < 0)));
        if (before) out[n++] = {dt, dy, dx};
      }
    }
  }
  return out;
}
constexpr std::array<Offset, 13> kFullPrior = make_full_prior();

class DisjointSet {
 public:
  std::int32_t make() {
    parent_.push_back(static_cast<std::int32_t>(parent_.size()));
    return parent_.back();
  }
  std::int32_t find(std::int32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  // Smaller root wins so roots stay the earliest provisional label.
  std::int32_t unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
    return a;
  }
  [[nodiscard]] std::size_t size() const noexcept { return parent_.size(); }

 private:
  std::vector<std::int32_t> parent_;
};

template <std::size_t N>
void first_pass(const BinaryVolume& v, const std::array<Offset, N>& prior,
                std::vector<std::int32_t>& provisional, DisjointSet& sets) {
  const Dims& d = v.dims;
  const auto T = static_cast<long>(d.frames);
  const auto H = static_cast<long>(d.height);
  const auto W = static_cast<long>(d.width);
  for (long t = 0; t < T; ++t) {
    for (long y = 0; y < H; ++y) {
      for (long x = 0; x < W; ++x) {
        const std::size_t i = d.index(t, y, x);
        if (!v.bits[i]) continue;
        std::int32_t label = -1;
        for (const Offset& o : prior) {
          const long nt = t + o.dt, ny = y + o.dy, nx = x + o.dx;
          if (nt < 0 || ny < 0 || ny >= H || nx < 0 || nx >= W) continue;
          const std::int32_t n = provisional[d.index(nt, ny, nx)];
          if (n < 0) continue;
          label = label < 0 ? sets.find(n) : sets.unite(label, n);
        }
        provisional[i] = label < 0 ? sets.make() : label;
      }
    }
  }
}

}  // namespace

LabelVolume label_components(const BinaryVolume& volume, Connectivity connectivity) {
  const Dims& d = volume.dims;
  if (volume.bits.size() != d.voxels()) {
    throw std::invalid_argument("label_components: bit count does not match dims");
  }
  std::vector<std::int32_t> provisional(d.voxels(), -1);
  DisjointSet sets;
  if (connectivity == Connectivity::kFace) {
    first_pass(volume, kFacePrior, provisional, sets);
  } else {
    first_pass(volume, kFullPrior, provisional, sets);
  }

  LabelVolume out{d, std::vector<std::int32_t>(d.voxels(), 0), 0};
  std::vector<std::int32_t> final_label(sets.size(), 0);
  for (std::size_t i = 0; i < provisional.size(); ++i) {
    if (provisional[i] < 0) continue;
    const std::int32_t root = sets.find(provisional[i]);
    if (final_label[root] == 0) final_label[root] = ++out.count;
    out.labels[i] = final_label[root];
  }
  return out;
}

namespace {

struct FrameExtent {
  int x1{std::numeric_limits<int>::max()};
  int y1{std::numeric_limits<int>::max()};
  int x2{-1};
  int y2{-1};
  [[nodiscard]] bool empty() const noexcept { return x2 < 0; }
  [[nodiscard]] std::int64_t area() const noexcept {
    return empty() ? 0 : static_cast<std::int64_t>(x2 - x1) * (y2 - y1);
  }
};

}  // namespace

std::vector<Tubelet> components_to_tubelets(const LabelVolume& labels, const ClipRef& clip,
                                            const ExtractionConfig& cfg,
                                            std::size_t num_classes) {
  const Dims& d = labels.dims;
  const auto n = static_cast<std::size_t>(labels.count);
  std::vector<std::size_t> voxels(n, 0);
  std::vector<FrameExtent> extents(n * d.frames);
  for (std::size_t t = 0; t < d.frames; ++t) {
    for (std::size_t y = 0; y < d.height; ++y) {
      const std::int32_t* row = &labels.labels[d.index(t, y, 0)];
      for (std::size_t x = 0; x < d.width; ++x) {
        if (row[x] == 0) continue;
        const auto c = static_cast<std::size_t>(row[x] - 1);
        ++voxels[c];
        FrameExtent& e = extents[c * d.frames + t];
        e.x1 = std::min(e.x1, static_cast<int>(x));
        e.y1 = std::min(e.y1, static_cast<int>(y));
        e.x2 = std::max(e.x2, static_cast<int>(x) + 1);
        e.y2 = std::max(e.y2, static_cast<int>(y) + 1);
      }
    }
  }

  std::vector<Tubelet> out;
  for (std::size_t c = 0; c < n; ++c) {
    if (voxels[c] < cfg.min_voxels) continue;
    const FrameExtent* ext = &extents[c * d.frames];
    std::vector<std::size_t> populated;
    bool large_enough = false;
    for (std::size_t t = 0; t < d.frames; ++t) {
      if (ext[t].empty()) continue;
      populated.push_back(t);
      large_enough = large_enough || ext[t].area() >= cfg.min_frame_area;
    }
    if (!large_enough) continue;

    std::vector<FrameBox> boxes;
    boxes.reserve(populated.back() - populated.front() + 1);
    for (std::size_t k = 0; k < populated.size(); ++k) {
      const std::size_t t = populated[k];
      const FrameExtent& e = ext[t];
      const FrameIndex frame = clip.start_frame + static_cast<FrameIndex>(t);
      FrameBox box(frame, e.x1, e.y1, e.x2, e.y2);
      if (k > 0 && populated[k - 1] + 1 < t) {
        // Component skipped frames (diagonal temporal contact); fill the hole.
        const FrameBox before = boxes.back();
        for (FrameIndex f = before.frame() + 1; f < frame; ++f) {
          boxes.push_back(interpolate_box(before, box, f));
        }
      }
      boxes.push_back(box);
    }
    std::vector<ScoreVector> scores(boxes.size(), ScoreVector::zeros(num_classes));
    out.emplace_back(tubelet_id(clip.video_id, clip.clip_index, static_cast<std::int64_t>(c)),
                     clip.video_id, std::move(boxes), std::move(scores));
  }
  return out;
}

std::vector<Tubelet> extract(const ClipMask& mask, const ClipRef& clip,
                             const ExtractionConfig& cfg, std::size_t num_classes) {
  cfg.validate();
  const LabelVolume labels = label_components(binarize(mask, cfg.threshold), cfg.connectivity);
  return components_to_tubelets(labels, clip, cfg, num_classes);
}

}  // namespace actdet
