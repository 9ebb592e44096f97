#include "actdet/classify.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <stdexcept>

#include "actdet/loss.hpp"

namespace actdet {

ClassCatalog::ClassCatalog(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw std::invalid_argument("ClassCatalog: need at least one class");
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw std::invalid_argument("ClassCatalog: empty class name");
    if (!seen.insert(n).second) throw std::invalid_argument("ClassCatalog: duplicate name " + n);
  }
}

ClassCatalog ClassCatalog::numbered(std::size_t num_classes) {
  std::vector<std::string> names;
  for (std::size_t c = 1; c <= num_classes; ++c) names.push_back("class_" + std::to_string(c));
  return ClassCatalog(std::move(names));
}

const std::string& ClassCatalog::name(int class_id) const {
  if (class_id < 1 || static_cast<std::size_t>(class_id) > names_.size()) {
    throw std::out_of_range("ClassCatalog: no class id " + std::to_string(class_id));
  }
  return names_[static_cast<std::size_t>(class_id - 1)];
}

int ClassCatalog::id(const std::string& name) const noexcept {
  auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? 0 : static_cast<int>(it - names_.begin()) + 1;
}

OracleIndex::OracleIndex(const OracleScores& src) : iou_threshold_(src.iou_threshold) {
  for (const auto& gt : src.annotations) by_video_[gt.video_id].push_back(&gt);
}

std::vector<ScoreVector> OracleIndex::frame_scores(const Tubelet& t,
                                                   std::size_t num_classes) const {
  std::vector<ScoreVector> out;
  out.reserve(t.length());
  auto it = by_video_.find(t.video_id());
  std::vector<double> row(num_classes + 1);
  for (const FrameBox& box : t.boxes()) {
    std::fill(row.begin(), row.end(), 0.0);
    if (it != by_video_.end()) {
      for (const GroundTruthInstance* gt : it->second) {
        if (gt->class_id < 1 || static_cast<std::size_t>(gt->class_id) > num_classes) continue;
        if (box.frame() < gt->start_frame || box.frame() > gt->end_frame) continue;
        const FrameBox* g = gt->box_at(box.frame());
        if (g != nullptr && box_iou(box, *g) >= iou_threshold_) {
          row[static_cast<std::size_t>(gt->class_id)] = 1.0;
        }
      }
    }
    row[0] = 1.0 - *std::max_element(row.begin() + 1, row.end());
    out.emplace_back(row);
  }
  return out;
}

namespace {

const ScoreVector& checked(const ScoreVector& v, const ClassCatalog& catalog) {
  if (v.size() != catalog.size() + 1) {
    throw std::invalid_argument("score vector has " + std::to_string(v.size()) +
                                " entries, catalog needs " + std::to_string(catalog.size() + 1));
  }
  return v;
}

Tubelet broadcast(const Tubelet& t, const ScoreVector& v) {
  return t.with_scores(std::vector<ScoreVector>(t.length(), v));
}

Tubelet score_with(const Tubelet& t, const ScoreSource& src, const ClassCatalog& catalog,
                   const OracleIndex* oracle) {
  if (const auto* file = std::get_if<FileBackedScores>(&src)) {
    auto it = file->table.find(t.id());
    if (it == file->table.end()) {
      throw std::out_of_range("no scores for tubelet id '" + t.id() + "'");
    }
    return broadcast(t, checked(it->second, catalog));
  }
  if (const auto* constant = std::get_if<ConstantScores>(&src)) {
    return broadcast(t, checked(constant->scores, catalog));
  }
  return t.with_scores(oracle->frame_scores(t, catalog.size()));
}

}  // namespace

Tubelet score_tubelet(const Tubelet& t, const ScoreSource& src, const ClassCatalog& catalog) {
  if (const auto* o = std::get_if<OracleScores>(&src)) {
    const OracleIndex index(*o);
    return score_with(t, src, catalog, &index);
  }
  return score_with(t, src, catalog, nullptr);
}

std::vector<Tubelet> score_tubelets(const std::vector<Tubelet>& tubelets,
                                    const ScoreSource& src, const ClassCatalog& catalog) {
  std::optional<OracleIndex> index;
  if (const auto* o = std::get_if<OracleScores>(&src)) index.emplace(*o);
  std::vector<Tubelet> out;
  out.reserve(tubelets.size());
  for (const auto& t : tubelets) {
    out.push_back(score_with(t, src, catalog, index ? &*index : nullptr));
  }
  return out;
}

double multilabel_bce(const ScoreVector& target, const ScoreVector& predicted) {
  if (target.size() != predicted.size()) {
    throw std::invalid_argument("multilabel_bce: length mismatch (" +
                                std::to_string(target.size()) + " vs " +
                                std::to_string(predicted.size()) + ")");
  }
  double total = 0.0;
  for (std::size_t c = 0; c < target.size(); ++c) {
    const double q = std::clamp(predicted[c], kProbabilityClip, 1.0 - kProbabilityClip);
    total -= target[c] * std::log(q) + (1.0 - target[c]) * std::log(1.0 - q);
  }
  return total;
}

}  // namespace actdet
