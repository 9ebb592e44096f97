#pragma once

// Localization losses over T x H x W probability volumes: binary cross
// entropy, global Dice, Patch-Dice and their multi-scale weighted sum.
//
// Patch-Dice tiles every frame into patch_h x patch_w windows (ragged at the
// right and bottom edges, never padded) and sums a smoothed Dice term per
// window, so a missed small actor costs as much as a missed large one.

#include <cstddef>
#include <span>
#include <vector>

namespace actdet {

struct Dims {
  std::size_t frames{0};
  std::size_t height{0};
  std::size_t width{0};

  [[nodiscard]] std::size_t voxels() const noexcept { return frames * height * width; }
  [[nodiscard]] std::size_t index(std::size_t t, std::size_t y, std::size_t x) const noexcept {
    return (t * height + y) * width + x;
  }
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Probabilities (or binary ground truth) laid out row-major as (t, y, x).
class MaskVolume {
 public:
  MaskVolume() = default;
  /// Throws std::invalid_argument if the value count does not match dims or
  /// any value lies outside [0, 1].
  MaskVolume(Dims dims, std::vector<double> values);
  static MaskVolume filled(Dims dims, double value);

  [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] double at(std::size_t t, std::size_t y, std::size_t x) const noexcept {
    return values_[dims_.index(t, y, x)];
  }
  [[nodiscard]] bool is_binary() const noexcept;

 private:
  Dims dims_;
  std::vector<double> values_;
};

/// Gradient of a loss with respect to every predicted value.
struct GradientVolume {
  Dims dims;
  std::vector<double> values;
};

struct PatchGrid {
  std::size_t patch_h{16};
  std::size_t patch_w{16};

  /// T * ceil(H / patch_h) * ceil(W / patch_w).
  [[nodiscard]] std::size_t patch_count(const Dims& dims) const noexcept;
};

enum class PatchReduction { kSum, kMean };

inline constexpr double kProbabilityClip = 1e-7;
inline constexpr double kDiceEpsilon = 1e-7;

struct DiceOptions {
  double epsilon{kDiceEpsilon};
  /// Adds epsilon to the numerator too, so an empty patch predicted empty
  /// scores 0. With false the numerator is 2*sum(p*q) only and such a patch
  /// scores 1.
  bool smoothed_numerator{true};
};

struct LossConfig {
  double bce_weight{1.0};
  double pdl_weight{1.0};
  int scales{3};
  PatchGrid grid;
  DiceOptions dice;
  PatchReduction reduction{PatchReduction::kSum};

  void validate() const;
};

struct PatchDiceResult {
  double sum{0.0};
  double mean{0.0};
  std::size_t patches{0};

  [[nodiscard]] double reduced(PatchReduction r) const noexcept {
    return r == PatchReduction::kSum ? sum : mean;
  }
};

/// Mean binary cross entropy; predictions are clamped into [clip, 1 - clip].
double bce_loss(const MaskVolume& truth, const MaskVolume& pred,
                double clip = kProbabilityClip);

/// Dice over the whole volume as one region.
double dice_loss(const MaskVolume& truth, const MaskVolume& pred, DiceOptions opts = {});

PatchDiceResult patch_dice_loss(const MaskVolume& truth, const MaskVolume& pred,
                                const PatchGrid& grid, DiceOptions opts = {});

/// d(loss)/d(pred) of patch_dice_loss under the chosen reduction.
GradientVolume pdl_gradient(const MaskVolume& truth, const MaskVolume& pred,
                            const PatchGrid& grid, DiceOptions opts = {},
                            PatchReduction reduction = PatchReduction::kSum);

/// Spatial max pooling by a power-of-two factor with ceiling output size.
MaskVolume downsample_mask(const MaskVolume& mask, std::size_t factor);

/// Levels 0..scales-1, level s pooled by 2^s.
std::vector<MaskVolume> build_pyramid(const MaskVolume& mask, int scales);

/// Sum over levels of bce_weight * BCE + pdl_weight * PDL.
double multiscale_loss(std::span<const MaskVolume> truth_pyramid,
                       std::span<const MaskVolume> pred_pyramid, const LossConfig& cfg);

}  // namespace actdet
