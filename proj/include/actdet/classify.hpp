#pragma once

// Pluggable tubelet scoring. The trained classifier is replaced by one of
// three score sources; all of them produce C+1 multi-label sigmoid scores.

#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "actdet/geometry.hpp"

namespace actdet {

/// Activity class names. Class ids are 1-based; 0 is background.
class ClassCatalog {
 public:
  ClassCatalog() = default;
  explicit ClassCatalog(std::vector<std::string> names);
  /// Catalog with generic names "class_1" .. "class_<n>".
  static ClassCatalog numbered(std::size_t num_classes);

  [[nodiscard]] std::size_t size() const noexcept { return names_.size(); }
  [[nodiscard]] const std::string& name(int class_id) const;
  /// Returns 0 if the name is unknown.
  [[nodiscard]] int id(const std::string& name) const noexcept;
  [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
};

/// Clip-level vectors keyed by tubelet id, broadcast to every frame.
struct FileBackedScores {
  std::unordered_map<std::string, ScoreVector> table;
};

/// Per-frame scores derived from annotations: class c is 1 on frames where
/// the tubelet box overlaps a class-c ground-truth box with IoU >= iou_threshold.
struct OracleScores {
  std::vector<GroundTruthInstance> annotations;
  double iou_threshold{0.5};
};

struct ConstantScores {
  ScoreVector scores;
};

using ScoreSource = std::variant<FileBackedScores, OracleScores, ConstantScores>;

/// Prepares an oracle source for fast per-video lookup.
class OracleIndex {
 public:
  /// Keeps pointers into src.annotations; src must outlive the index.
  explicit OracleIndex(const OracleScores& src);
  [[nodiscard]] std::vector<ScoreVector> frame_scores(const Tubelet& t,
                                                      std::size_t num_classes) const;

 private:
  double iou_threshold_;
  std::unordered_map<std::string, std::vector<const GroundTruthInstance*>> by_video_;
};

/// Returns the tubelet with frame scores filled in; frames and boxes are
/// untouched. Throws std::out_of_range naming the id when a file-backed
/// table has no row for it, and std::invalid_argument when a vector's length
/// is not catalog.size() + 1.
Tubelet score_tubelet(const Tubelet& t, const ScoreSource& src, const ClassCatalog& catalog);

/// Batch form that builds the oracle index once.
std::vector<Tubelet> score_tubelets(const std::vector<Tubelet>& tubelets,
                                    const ScoreSource& src, const ClassCatalog& catalog);

/// BCE summed over all C+1 outputs, predictions clamped like bce_loss.
double multilabel_bce(const ScoreVector& target, const ScoreVector& predicted);

}  // namespace actdet
