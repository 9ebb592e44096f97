#include "actdet/tmas.hpp"

#include <algorithm>
#include <iterator>
#include <stdexcept>
#include <string>

namespace actdet {

void MergeConfig::validate() const {
  if (!(link_threshold > 0.0 && link_threshold <= 1.0)) {
    throw std::invalid_argument("MergeConfig: link threshold must lie in (0,1]");
  }
  if (gap_tolerance < 0) throw std::invalid_argument("MergeConfig: gap tolerance < 0");
}

void SplitConfig::validate() const {
  if (smooth_half_window < 0) throw std::invalid_argument("SplitConfig: kappa < 0");
  if (!(score_threshold > 0.0 && score_threshold < 1.0)) {
    throw std::invalid_argument("SplitConfig: alpha must lie in (0,1)");
  }
  if (max_gap < 0) throw std::invalid_argument("SplitConfig: beta < 0");
  if (min_length < 1) throw std::invalid_argument("SplitConfig: gamma < 1");
}

namespace {

ScoreVector lerp_scores(const ScoreVector& a, const ScoreVector& b, double t) {
  std::vector<double> v(a.size());
  for (std::size_t c = 0; c < v.size(); ++c) {
    v[c] = std::clamp(a[c] + t * (b[c] - a[c]), 0.0, 1.0);
  }
  return ScoreVector(std::move(v));
}

ScoreVector max_scores(const ScoreVector& a, const ScoreVector& b) {
  std::vector<double> v(a.size());
  for (std::size_t c = 0; c < v.size(); ++c) v[c] = std::max(a[c], b[c]);
  return ScoreVector(std::move(v));
}

}  // namespace

ActionTube concatenate(const ActionTube& first, const ActionTube& second) {
  if (second.start_frame() < first.start_frame()) {
    throw std::invalid_argument("concatenate: second tube starts before the first");
  }
  std::vector<FrameBox> boxes = first.boxes();
  std::vector<ScoreVector> scores = first.frame_scores();
  const FrameIndex first_end = first.end_frame();

  if (second.start_frame() > first_end + 1) {
    const FrameBox a = first.boxes().back();
    const FrameBox& b = second.boxes().front();
    const ScoreVector& sa = first.frame_scores().back();
    const ScoreVector& sb = second.frame_scores().front();
    const double span = static_cast<double>(b.frame() - a.frame());
    for (FrameIndex f = first_end + 1; f < second.start_frame(); ++f) {
      boxes.push_back(interpolate_box(a, b, f));
      scores.push_back(lerp_scores(sa, sb, static_cast<double>(f - a.frame()) / span));
    }
  }
  for (std::size_t k = 0; k < second.length(); ++k) {
    const FrameBox& box = second.boxes()[k];
    const ScoreVector& s = second.frame_scores()[k];
    if (box.frame() <= first_end) {
      const auto i = static_cast<std::size_t>(box.frame() - first.start_frame());
      if (box.area() > boxes[i].area()) boxes[i] = box;
      scores[i] = max_scores(scores[i], s);
    } else {
      boxes.push_back(box);
      scores.push_back(s);
    }
  }
  return ActionTube(first.id(), first.video_id(), std::move(boxes), std::move(scores));
}

TubeMerger::TubeMerger(MergeConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::size_t TubeMerger::index_of(Key key) const {
  for (std::size_t i = 0; i < candidates_.size(); ++i) {
    if (candidates_[i].key == key) return i;
  }
  throw std::logic_error("TubeMerger: link to unknown candidate " + std::to_string(key));
}

std::vector<ActionTube> TubeMerger::push(const Tubelet& tubelet) {
  return push(tubelet, tubelet.start_frame());
}

std::vector<ActionTube> TubeMerger::push(const Tubelet& tubelet, FrameIndex stream_time) {
  if (stream_time < current_time_) {
    throw std::invalid_argument("TubeMerger: tubelet " + tubelet.id() + " arrives at frame " +
                                std::to_string(stream_time) +
                                ", before the previous tubelet at frame " +
                                std::to_string(current_time_));
  }
  if (stream_time > tubelet.start_frame()) {
    throw std::invalid_argument("TubeMerger: tubelet " + tubelet.id() + " starts at frame " +
                                std::to_string(tubelet.start_frame()) +
                                ", before its stream time " + std::to_string(stream_time));
  }
  current_time_ = stream_time;
  std::vector<ActionTube> finalized = expire(false);

  Candidate incoming{next_key_++, tubelet, {}, 0, stream_time};
  for (Candidate& c : candidates_) {
    if (c.arrival >= stream_time) continue;
    const double score = tube_link_score(c.tube, tubelet, cfg_.gap_tolerance, cfg_.link_mode);
    if (score > 0.0 && score >= cfg_.link_threshold) {
      c.links.push_back({incoming.key, score});
      ++incoming.inbound;
    }
  }
  candidates_.push_back(std::move(incoming));
  return finalized;
}

std::vector<ActionTube> TubeMerger::advance(FrameIndex time) {
  if (time < current_time_) {
    throw std::invalid_argument("TubeMerger: cannot move clock back from frame " +
                                std::to_string(current_time_) + " to " + std::to_string(time));
  }
  current_time_ = time;
  return expire(false);
}

std::vector<ActionTube> TubeMerger::finish() { return expire(true); }

std::vector<ActionTube> TubeMerger::expire(bool everything) {
  std::vector<ActionTube> finalized;
  std::size_t i = 0;
  while (i < candidates_.size()) {
    const bool ended =
        everything || current_time_ - candidates_[i].tube.end_frame() > cfg_.gap_tolerance;
    if (!ended) {
      ++i;
      continue;
    }
    // A merged survivor keeps index i and is examined again with its new end.
    check_end(i, finalized);
  }
  return finalized;
}

TubeMerger::EndOutcome TubeMerger::check_end(std::size_t index,
                                             std::vector<ActionTube>& finalized) {
  const Candidate& c = candidates_[index];
  std::size_t target = candidates_.size();
  if (c.links.size() == 1) {
    const std::size_t t = index_of(c.links.front().target);
    if (candidates_[t].inbound == 1) target = t;
  } else if (c.links.size() > 1) {
    // First maximum wins, i.e. the earliest-created tubelet on ties.
    const Link* best = &c.links.front();
    for (const Link& l : c.links) {
      if (l.score > best->score) best = &l;
    }
    target = index_of(best->target);
  }
  if (target == candidates_.size()) {
    finalized.push_back(std::move(candidates_[index].tube));
    candidates_.erase(candidates_.begin() + static_cast<std::ptrdiff_t>(index));
    return EndOutcome::kFinalized;
  }
  merge_into(index, target);
  return EndOutcome::kMerged;
}

void TubeMerger::merge_into(std::size_t survivor, std::size_t absorbed) {
  const Key gone = candidates_[absorbed].key;
  // The survivor's other links belonged to its old end and lapse.
  for (const Link& l : candidates_[survivor].links) {
    if (l.target != gone) --candidates_[index_of(l.target)].inbound;
  }
  for (std::size_t i = 0; i < candidates_.size(); ++i) {
    if (i == survivor || i == absorbed) continue;
    auto& links = candidates_[i].links;
    std::erase_if(links, [gone](const Link& l) { return l.target == gone; });
  }
  Candidate& s = candidates_[survivor];
  Candidate& a = candidates_[absorbed];
  s.tube = concatenate(s.tube, a.tube);
  s.links = std::move(a.links);
  candidates_.erase(candidates_.begin() + static_cast<std::ptrdiff_t>(absorbed));
}

std::vector<ActionTube> merge_all(std::span<const Tubelet> tubelets, const MergeConfig& cfg) {
  TubeMerger merger(cfg);
  std::vector<ActionTube> out;
  for (const Tubelet& t : tubelets) {
    auto done = merger.push(t);
    std::move(done.begin(), done.end(), std::back_inserter(out));
  }
  auto rest = merger.finish();
  std::move(rest.begin(), rest.end(), std::back_inserter(out));
  return out;
}

ActionTube smooth(const ActionTube& tube, int half_window) {
  if (half_window < 0) throw std::invalid_argument("smooth: negative half window");
  if (half_window == 0) return tube;
  const auto n = static_cast<long>(tube.length());
  const std::size_t width = tube.frame_scores().front().size();
  const auto& in = tube.frame_scores();
  std::vector<ScoreVector> out;
  out.reserve(in.size());
  std::vector<double> row(width);
  for (long f = 0; f < n; ++f) {
    const long lo = std::max(0L, f - half_window);
    const long hi = std::min(n - 1, f + static_cast<long>(half_window));
    std::fill(row.begin(), row.end(), 0.0);
    for (long k = lo; k <= hi; ++k) {
      for (std::size_t c = 0; c < width; ++c) row[c] += in[static_cast<std::size_t>(k)][c];
    }
    const double count = static_cast<double>(hi - lo + 1);
    for (double& v : row) v = std::clamp(v / count, 0.0, 1.0);
    out.emplace_back(row);
  }
  return tube.with_scores(std::move(out));
}

std::vector<ActionInstance> extract_actions(const ActionTube& smoothed, int class_id,
                                            const SplitConfig& cfg) {
  std::vector<ActionInstance> out;
  const auto cls = static_cast<std::size_t>(class_id);
  const FrameIndex first = smoothed.start_frame();

  auto close = [&](FrameIndex start, FrameIndex end) {
    if (end - start + 1 < cfg.min_length) return;
    ActionInstance inst;
    inst.video_id = smoothed.video_id();
    inst.class_id = class_id;
    inst.start_frame = start;
    inst.end_frame = end;
    double sum = 0.0;
    for (FrameIndex f = start; f <= end; ++f) {
      inst.boxes.push_back(smoothed.box_at(f));
      sum += smoothed.scores_at(f)[cls];
    }
    inst.confidence = std::clamp(sum / static_cast<double>(end - start + 1), 0.0, 1.0);
    out.push_back(std::move(inst));
  };

  FrameIndex run_start = -1;
  FrameIndex last_above = -1;
  FrameIndex low_count = 0;
  for (std::size_t k = 0; k < smoothed.length(); ++k) {
    const FrameIndex f = first + static_cast<FrameIndex>(k);
    if (smoothed.frame_scores()[k][cls] > cfg.score_threshold) {
      if (run_start < 0) run_start = f;
      last_above = f;
      low_count = 0;
    } else {
      ++low_count;
    }
    if (low_count > cfg.max_gap) {
      if (run_start >= 0) close(run_start, last_above);
      run_start = -1;
      low_count = 0;
    }
  }
  if (run_start >= 0) close(run_start, last_above);
  return out;
}

std::vector<ActionInstance> action_split(std::span<const ActionTube> tubes,
                                         std::size_t num_classes, const SplitConfig& cfg) {
  cfg.validate();
  std::vector<ActionInstance> out;
  for (const ActionTube& tube : tubes) {
    if (tube.num_classes() < num_classes) {
      throw std::invalid_argument("action_split: tube " + tube.id() + " has only " +
                                  std::to_string(tube.num_classes()) + " classes");
    }
    const ActionTube s = smooth(tube, cfg.smooth_half_window);
    for (std::size_t c = 1; c <= num_classes; ++c) {
      auto found = extract_actions(s, static_cast<int>(c), cfg);
      std::move(found.begin(), found.end(), std::back_inserter(out));
    }
  }
  return out;
}

std::vector<ActionInstance> independent_instances(std::span<const Tubelet> tubelets,
                                                  std::size_t num_classes,
                                                  double score_threshold) {
  std::vector<ActionInstance> out;
  for (const Tubelet& t : tubelets) {
    for (std::size_t c = 1; c <= num_classes; ++c) {
      double sum = 0.0;
      for (const ScoreVector& s : t.frame_scores()) sum += s[c];
      const double mean = sum / static_cast<double>(t.length());
      if (!(mean > score_threshold)) continue;
      out.push_back({t.video_id(), static_cast<int>(c), t.start_frame(), t.end_frame(),
                     t.boxes(), std::clamp(mean, 0.0, 1.0)});
    }
  }
  return out;
}

}  // namespace actdet
