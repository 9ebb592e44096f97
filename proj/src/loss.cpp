#include "actdet/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace actdet {

namespace {

void require_same_dims(const MaskVolume& a, const MaskVolume& b, const char* what) {
  const Dims& x = a.dims();
  const Dims& y = b.dims();
  if (!(x == y)) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(x.frames) + "x" + std::to_string(x.height) + "x" +
                                std::to_string(x.width) + " vs " + std::to_string(y.frames) + "x" +
                                std::to_string(y.height) + "x" + std::to_string(y.width) + ")");
  }
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

// Per-patch sums: intersection, sum of squared truth, sum of squared prediction.
struct PatchSums {
  double inter{0.0};
  double truth_sq{0.0};
  double pred_sq{0.0};
};

std::vector<PatchSums> accumulate_patches(const MaskVolume& truth, const MaskVolume& pred,
                                          const PatchGrid& grid) {
  const Dims& d = truth.dims();
  const std::size_t rows = ceil_div(d.height, grid.patch_h);
  const std::size_t cols = ceil_div(d.width, grid.patch_w);
  std::vector<PatchSums> sums(d.frames * rows * cols);
  auto y = truth.values();
  auto p = pred.values();
  for (std::size_t t = 0; t < d.frames; ++t) {
    for (std::size_t r = 0; r < d.height; ++r) {
      PatchSums* row = &sums[(t * rows + r / grid.patch_h) * cols];
      const std::size_t base = d.index(t, r, 0);
      for (std::size_t c = 0; c < d.width; ++c) {
        PatchSums& s = row[c / grid.patch_w];
        const double yi = y[base + c];
        const double pi = p[base + c];
        s.inter += yi * pi;
        s.truth_sq += yi * yi;
        s.pred_sq += pi * pi;
      }
    }
  }
  return sums;
}

double dice_term(const PatchSums& s, const DiceOptions& opts) {
  const double num = 2.0 * s.inter + (opts.smoothed_numerator ? opts.epsilon : 0.0);
  return 1.0 - num / (s.truth_sq + s.pred_sq + opts.epsilon);
}

void check_grid(const PatchGrid& grid) {
  if (grid.patch_h == 0 || grid.patch_w == 0) {
    throw std::invalid_argument("PatchGrid: patch dimensions must be >= 1");
  }
}

}  // namespace

MaskVolume::MaskVolume(Dims dims, std::vector<double> values)
    : dims_(dims), values_(std::move(values)) {
  if (values_.size() != dims_.voxels()) {
    throw std::invalid_argument("MaskVolume: expected " + std::to_string(dims_.voxels()) +
                                " values, got " + std::to_string(values_.size()));
  }
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("MaskVolume: value outside [0,1]");
  }
}

MaskVolume MaskVolume::filled(Dims dims, double value) {
  return MaskVolume(dims, std::vector<double>(dims.voxels(), value));
}

bool MaskVolume::is_binary() const noexcept {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return v == 0.0 || v == 1.0; });
}

std::size_t PatchGrid::patch_count(const Dims& dims) const noexcept {
  if (patch_h == 0 || patch_w == 0) return 0;
  return dims.frames * ceil_div(dims.height, patch_h) * ceil_div(dims.width, patch_w);
}

void LossConfig::validate() const {
  if (!(bce_weight >= 0.0) || !(pdl_weight >= 0.0)) {
    throw std::invalid_argument("LossConfig: loss weights must be non-negative");
  }
  if (!(dice.epsilon > 0.0)) throw std::invalid_argument("LossConfig: epsilon must be > 0");
  if (scales < 1) throw std::invalid_argument("LossConfig: need at least one scale");
  check_grid(grid);
}

double bce_loss(const MaskVolume& truth, const MaskVolume& pred, double clip) {
  require_same_dims(truth, pred, "bce_loss");
  auto y = truth.values();
  auto p = pred.values();
  if (y.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double q = std::clamp(p[i], clip, 1.0 - clip);
    total += y[i] * std::log(q) + (1.0 - y[i]) * std::log(1.0 - q);
  }
  return -total / static_cast<double>(y.size());
}

double dice_loss(const MaskVolume& truth, const MaskVolume& pred, DiceOptions opts) {
  require_same_dims(truth, pred, "dice_loss");
  PatchSums s;
  auto y = truth.values();
  auto p = pred.values();
  for (std::size_t i = 0; i < y.size(); ++i) {
    s.inter += y[i] * p[i];
    s.truth_sq += y[i] * y[i];
    s.pred_sq += p[i] * p[i];
  }
  return dice_term(s, opts);
}

PatchDiceResult patch_dice_loss(const MaskVolume& truth, const MaskVolume& pred,
                                const PatchGrid& grid, DiceOptions opts) {
  require_same_dims(truth, pred, "patch_dice_loss");
  check_grid(grid);
  PatchDiceResult out;
  for (const PatchSums& s : accumulate_patches(truth, pred, grid)) {
    out.sum += dice_term(s, opts);
    ++out.patches;
  }
  out.mean = out.patches == 0 ? 0.0 : out.sum / static_cast<double>(out.patches);
  return out;
}

GradientVolume pdl_gradient(const MaskVolume& truth, const MaskVolume& pred,
                            const PatchGrid& grid, DiceOptions opts,
                            PatchReduction reduction) {
  require_same_dims(truth, pred, "pdl_gradient");
  check_grid(grid);
  const Dims& d = truth.dims();
  const std::vector<PatchSums> sums = accumulate_patches(truth, pred, grid);
  const double scale =
      reduction == PatchReduction::kMean && !sums.empty() ? 1.0 / static_cast<double>(sums.size())
                                                          : 1.0;
  const double num_eps = opts.smoothed_numerator ? opts.epsilon : 0.0;
  const std::size_t rows = ceil_div(d.height, grid.patch_h);
  const std::size_t cols = ceil_div(d.width, grid.patch_w);

  // term = 1 - (2I + e_n) / (D + e), with I = sum(y q), D = sum(y^2) + sum(q^2):
  // d term / d q_i = -(2 y_i (D + e) - (2I + e_n) 2 q_i) / (D + e)^2
  GradientVolume grad{d, std::vector<double>(d.voxels(), 0.0)};
  auto y = truth.values();
  auto p = pred.values();
  for (std::size_t t = 0; t < d.frames; ++t) {
    for (std::size_t r = 0; r < d.height; ++r) {
      const PatchSums* row = &sums[(t * rows + r / grid.patch_h) * cols];
      const std::size_t base = d.index(t, r, 0);
      for (std::size_t c = 0; c < d.width; ++c) {
        const PatchSums& s = row[c / grid.patch_w];
        const double denom = s.truth_sq + s.pred_sq + opts.epsilon;
        const double num = 2.0 * s.inter + num_eps;
        const std::size_t i = base + c;
        grad.values[i] = -scale * (2.0 * y[i] * denom - num * 2.0 * p[i]) / (denom * denom);
      }
    }
  }
  return grad;
}

MaskVolume downsample_mask(const MaskVolume& mask, std::size_t factor) {
  if (factor == 0 || (factor & (factor - 1)) != 0) {
    throw std::invalid_argument("downsample_mask: factor must be a power of two");
  }
  const Dims& d = mask.dims();
  if (factor == 1) return mask;
  const Dims out{d.frames, ceil_div(d.height, factor), ceil_div(d.width, factor)};
  std::vector<double> values(out.voxels(), 0.0);
  for (std::size_t t = 0; t < d.frames; ++t) {
    for (std::size_t y = 0; y < d.height; ++y) {
      for (std::size_t x = 0; x < d.width; ++x) {
        double& cell = values[out.index(t, y / factor, x / factor)];
        cell = std::max(cell, mask.at(t, y, x));
      }
    }
  }
  return MaskVolume(out, std::move(values));
}

std::vector<MaskVolume> build_pyramid(const MaskVolume& mask, int scales) {
  if (scales < 1) throw std::invalid_argument("build_pyramid: need at least one scale");
  std::vector<MaskVolume> levels;
  levels.reserve(static_cast<std::size_t>(scales));
  levels.push_back(mask);
  for (int s = 1; s < scales; ++s) levels.push_back(downsample_mask(levels.back(), 2));
  return levels;
}

double multiscale_loss(std::span<const MaskVolume> truth_pyramid,
                       std::span<const MaskVolume> pred_pyramid, const LossConfig& cfg) {
  cfg.validate();
  if (truth_pyramid.size() != pred_pyramid.size()) {
    throw std::invalid_argument("multiscale_loss: pyramids have " +
                                std::to_string(truth_pyramid.size()) + " and " +
                                std::to_string(pred_pyramid.size()) + " levels");
  }
  if (truth_pyramid.size() != static_cast<std::size_t>(cfg.scales)) {
    throw std::invalid_argument("multiscale_loss: expected " + std::to_string(cfg.scales) +
                                " levels, got " + std::to_string(truth_pyramid.size()));
  }
  double total = 0.0;
  for (std::size_t s = 0; s < truth_pyramid.size(); ++s) {
    const MaskVolume& y = truth_pyramid[s];
    const MaskVolume& q = pred_pyramid[s];
    const double pdl = patch_dice_loss(y, q, cfg.grid, cfg.dice).reduced(cfg.reduction);
    total += cfg.bce_weight * bce_loss(y, q) + cfg.pdl_weight * pdl;
  }
  return total;
}

}  // namespace actdet
