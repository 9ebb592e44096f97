#include "actdet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "actdet/io.hpp"

namespace actdet {

namespace {

int round_px(double v) { return static_cast<int>(std::floor(v + 0.5)); }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string where(std::size_t actor) { return "actor " + std::to_string(actor); }

}  // namespace

FrameBox ActorSpec::box_at(FrameIndex frame) const {
  const double dt = static_cast<double>(frame - spawn_frame);
  const int x1 = round_px(x + vx * dt);
  const int y1 = round_px(y + vy * dt);
  return FrameBox(frame, x1, y1, x1 + width, y1 + height);
}

void SyntheticScenario::validate() const {
  if (duration <= 0) throw std::invalid_argument("scenario: duration must be > 0");
  if (height == 0 || width == 0) throw std::invalid_argument("scenario: empty resolution");
  if (clip_length <= 0 || clip_stride <= 0 || clip_stride > clip_length) {
    throw std::invalid_argument("scenario: need 0 < clip_stride <= clip_length");
  }
  if (!(noise >= 0.0)) throw std::invalid_argument("scenario: noise must be >= 0");
  for (std::size_t i = 0; i < actors.size(); ++i) {
    const ActorSpec& a = actors[i];
    if (a.width <= 0 || a.height <= 0) {
      throw std::invalid_argument("scenario: " + where(i) + " has an empty footprint");
    }
    if (a.timeline.empty()) throw std::invalid_argument("scenario: " + where(i) + " has no timeline");
    if (a.spawn_frame < 0 || a.timeline.front().start_frame != a.spawn_frame) {
      throw std::invalid_argument("scenario: " + where(i) + " timeline must start at its spawn frame");
    }
    for (std::size_t s = 0; s < a.timeline.size(); ++s) {
      const ActivitySegment& seg = a.timeline[s];
      if (seg.class_id < 0 || seg.end_frame < seg.start_frame) {
        throw std::invalid_argument("scenario: " + where(i) + " segment " + std::to_string(s) +
                                    " is malformed");
      }
      if (s > 0 && seg.start_frame != a.timeline[s - 1].end_frame + 1) {
        throw std::invalid_argument("scenario: " + where(i) + " timeline has a hole before frame " +
                                    std::to_string(seg.start_frame));
      }
    }
    if (a.last_frame() >= duration) {
      throw std::invalid_argument("scenario: " + where(i) + " outlives the video");
    }
    for (FrameIndex f = a.spawn_frame; f <= a.last_frame(); ++f) {
      const double dt = static_cast<double>(f - a.spawn_frame);
      const int x1 = round_px(a.x + a.vx * dt);
      const int y1 = round_px(a.y + a.vy * dt);
      if (x1 < 0 || y1 < 0 || x1 + a.width > static_cast<int>(width) ||
          y1 + a.height > static_cast<int>(height)) {
        throw std::invalid_argument("scenario: " + where(i) + " leaves the frame at frame " +
                                    std::to_string(f));
      }
    }
  }
}

std::int64_t SyntheticScenario::clip_count() const {
  if (duration <= clip_length) return 1;
  return (duration - clip_length + clip_stride - 1) / clip_stride + 1;
}

ClipMask render_clip(const SyntheticScenario& scn, std::int64_t clip_index) {
  const Dims dims{static_cast<std::size_t>(scn.clip_length), scn.height, scn.width};
  const FrameIndex start = clip_index * scn.clip_stride;
  std::vector<std::uint8_t> fg(dims.voxels(), 0);
  for (const ActorSpec& a : scn.actors) {
    for (std::size_t t = 0; t < dims.frames; ++t) {
      const FrameIndex f = start + static_cast<FrameIndex>(t);
      if (f < a.spawn_frame || f > a.last_frame()) continue;
      const FrameBox b = a.box_at(f);
      for (int y = b.y1(); y < b.y2(); ++y) {
        std::fill_n(fg.begin() + static_cast<std::ptrdiff_t>(
                                     dims.index(t, static_cast<std::size_t>(y),
                                                static_cast<std::size_t>(b.x1()))),
                    b.x2() - b.x1(), std::uint8_t{1});
      }
    }
  }

  std::vector<double> p(dims.voxels());
  if (scn.noise == 0.0) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = fg[i] ? 0.9 : 0.1;
  } else {
    std::seed_seq seq{static_cast<std::uint32_t>(scn.seed), static_cast<std::uint32_t>(scn.seed >> 32),
                      static_cast<std::uint32_t>(fnv1a(scn.video_id)),
                      static_cast<std::uint32_t>(clip_index)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, scn.noise);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double n = gauss(rng);
      p[i] = std::clamp(fg[i] ? 0.9 + n : 0.1 - n, 0.0, 1.0);
    }
  }
  return dequantize_mask(dims, quantize_mask(MaskVolume(dims, std::move(p))));
}

std::vector<GroundTruthInstance> scenario_truth(const SyntheticScenario& scn) {
  std::vector<GroundTruthInstance> out;
  for (const ActorSpec& a : scn.actors) {
    for (const ActivitySegment& seg : a.timeline) {
      if (seg.class_id == 0) continue;
      GroundTruthInstance gt{scn.video_id, seg.class_id, seg.start_frame, seg.end_frame, {}};
      for (FrameIndex f = seg.start_frame; f <= seg.end_frame; ++f) gt.boxes.push_back(a.box_at(f));
      out.push_back(std::move(gt));
    }
  }
  return out;
}

SyntheticVideo render(const SyntheticScenario& scn) {
  scn.validate();
  SyntheticVideo v{scn, {}, scenario_truth(scn)};
  const std::int64_t n = scn.clip_count();
  v.clips.reserve(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) v.clips.push_back(render_clip(scn, k));
  return v;
}

FileBackedScores oracle_score_table(std::span<const SyntheticVideo> videos,
                                    const PipelineConfig& cfg) {
  FileBackedScores table;
  const std::size_t num_classes = cfg.catalog.size();
  for (const SyntheticVideo& v : videos) {
    const OracleScores truth{v.truth, 0.5};
    const OracleIndex oracle(truth);
    for (std::size_t k = 0; k < v.clips.size(); ++k) {
      const auto index = static_cast<std::int64_t>(k);
      const ClipRef ref{v.scenario.video_id, index, index * v.scenario.clip_stride};
      for (const Tubelet& t : extract(v.clips[k], ref, cfg.extraction, num_classes)) {
        std::vector<double> mean(num_classes + 1, 0.0);
        for (const ScoreVector& s : oracle.frame_scores(t, num_classes)) {
          for (std::size_t c = 1; c <= num_classes; ++c) mean[c] += s[c];
        }
        for (std::size_t c = 1; c <= num_classes; ++c) mean[c] /= static_cast<double>(t.length());
        mean[0] = 1.0 - *std::max_element(mean.begin() + 1, mean.end());
        table.table.emplace(t.id(), ScoreVector(std::move(mean)));
      }
    }
  }
  return table;
}

void write_synthetic(const std::filesystem::path& dir, std::span<const SyntheticVideo> videos,
                     const PipelineConfig& cfg) {
  namespace fs = std::filesystem;
  const fs::path masks = dir / "masks";
  for (const SyntheticVideo& v : videos) {
    fs::create_directories(masks / v.scenario.video_id);
    for (std::size_t k = 0; k < v.clips.size(); ++k) {
      write_gbm(clip_path(masks, v.scenario.video_id, static_cast<std::int64_t>(k)), v.clips[k]);
    }
  }
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("gt.json");
    write_ground_truth(out, all_truth(videos));
  }
  {
    auto out = open("videos.json");
    write_video_frames(out, video_lengths(videos));
  }
  {
    auto out = open("scores.csv");
    write_score_table(out, oracle_score_table(videos, cfg));
  }
}

MemoryClipSource memory_source(std::span<const SyntheticVideo> videos) {
  MemoryClipSource src;
  for (const SyntheticVideo& v : videos) src.add(v.scenario.video_id, v.clips);
  return src;
}

std::vector<GroundTruthInstance> all_truth(std::span<const SyntheticVideo> videos) {
  std::vector<GroundTruthInstance> out;
  for (const SyntheticVideo& v : videos) out.insert(out.end(), v.truth.begin(), v.truth.end());
  return out;
}

std::map<std::string, FrameIndex> video_lengths(std::span<const SyntheticVideo> videos) {
  std::map<std::string, FrameIndex> out;
  for (const SyntheticVideo& v : videos) out[v.scenario.video_id] = v.scenario.duration;
  return out;
}

namespace {

SyntheticScenario blank(std::uint64_t seed, const std::string& video_id, const PipelineConfig& cfg,
                        FrameIndex duration, double noise) {
  SyntheticScenario s;
  s.seed = seed;
  s.video_id = video_id;
  s.duration = duration;
  s.height = cfg.height;
  s.width = cfg.width;
  s.clip_length = cfg.clip_length;
  s.clip_stride = cfg.clip_stride;
  s.noise = noise;
  return s;
}

// Lane i of n: rows [top, bottom) with a margin left empty on both sides.
struct Lane {
  int top;
  int bottom;
};

constexpr int kLaneMargin = 4;

Lane lane(std::size_t i, std::size_t n, std::size_t height) {
  const int h = static_cast<int>(height / n);
  if (h < 2 * kLaneMargin + 4) {
    throw std::invalid_argument("scenario: " + std::to_string(n) + " lanes do not fit in " +
                                std::to_string(height) + " rows");
  }
  const int top = static_cast<int>(i) * h;
  return {top + kLaneMargin, top + h - kLaneMargin};
}

// Places an actor so that its straight path over `frames` stays in [0, width).
void place_horizontally(ActorSpec& a, double vx, FrameIndex frames, std::size_t width,
                        std::mt19937_64& rng) {
  const double range = static_cast<double>(width) - a.width;
  const double travel = std::abs(vx) * static_cast<double>(frames - 1);
  const double slack = std::max(0.0, range - travel - 1.0);
  std::uniform_real_distribution<double> pos(0.0, slack);
  const double offset = std::floor(pos(rng));
  a.vx = vx;
  a.x = vx >= 0.0 ? offset : offset + travel;
}

}  // namespace

SyntheticScenario random_scenario(std::uint64_t seed, const std::string& video_id,
                                  const RandomScenarioOptions& opts, const PipelineConfig& cfg) {
  if (opts.num_classes == 0) throw std::invalid_argument("random_scenario: need a class");
  if (opts.min_segment <= 0 || opts.max_segment < opts.min_segment) {
    throw std::invalid_argument("random_scenario: bad segment length range");
  }
  SyntheticScenario scn = blank(seed, video_id, cfg, opts.duration, opts.noise);
  std::mt19937_64 rng(seed);
  auto uniform_int = [&](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };

  for (std::size_t i = 0; i < opts.actors; ++i) {
    const Lane ln = lane(i, opts.actors, cfg.height);
    ActorSpec a;
    const int lane_h = ln.bottom - ln.top;
    a.height = static_cast<int>(uniform_int(std::max(4, lane_h / 2), lane_h));
    a.y = static_cast<double>(uniform_int(ln.top, ln.bottom - a.height));
    a.width = static_cast<int>(
        uniform_int(8, std::max<std::int64_t>(8, static_cast<std::int64_t>(cfg.width) / 4)));

    FrameIndex first = 0;
    FrameIndex last = opts.duration - 1;
    if (!std::bernoulli_distribution(opts.full_lifetime)(rng)) {
      const FrameIndex span = std::max<FrameIndex>(opts.min_segment, opts.duration / 3);
      first = uniform_int(0, std::max<FrameIndex>(0, opts.duration - span) / 2);
      last = uniform_int(std::min(opts.duration - 1, first + span - 1), opts.duration - 1);
    }
    a.spawn_frame = first;
    const FrameIndex frames = last - first + 1;

    const double max_speed =
        std::min(1.0, (static_cast<double>(cfg.width) - a.width - 1.0) / static_cast<double>(frames));
    const double vx = std::uniform_real_distribution<double>(-max_speed, max_speed)(rng);
    place_horizontally(a, vx, frames, cfg.width, rng);

    int previous = 0;
    for (FrameIndex f = first; f <= last;) {
      FrameIndex len = uniform_int(opts.min_segment, opts.max_segment);
      if (last - (f + len) + 1 < opts.min_segment) len = last - f + 1;
      int cls = static_cast<int>(uniform_int(1, static_cast<std::int64_t>(opts.num_classes)));
      if (opts.num_classes > 1) {
        while (cls == previous) {
          cls = static_cast<int>(uniform_int(1, static_cast<std::int64_t>(opts.num_classes)));
        }
      }
      a.timeline.push_back({cls, f, std::min(last, f + len - 1)});
      previous = cls;
      f += len;
    }
    scn.actors.push_back(std::move(a));
  }
  scn.validate();
  return scn;
}

SyntheticScenario single_walker(const PipelineConfig& cfg, FrameIndex duration, double noise) {
  SyntheticScenario scn = blank(1, "walker", cfg, duration, noise);
  ActorSpec a;
  a.width = std::max(8, static_cast<int>(cfg.width) / 10);
  a.height = std::max(8, static_cast<int>(cfg.height) / 4);
  a.y = std::floor((static_cast<double>(cfg.height) - a.height) / 2.0);
  a.x = 0.0;
  a.vx = duration > 1 ? std::min(1.0, (static_cast<double>(cfg.width) - a.width - 1.0) /
                                          static_cast<double>(duration - 1))
                      : 0.0;
  a.spawn_frame = 0;
  a.timeline = {{1, 0, duration - 1}};
  scn.actors.push_back(std::move(a));
  scn.validate();
  return scn;
}

SyntheticScenario crossing_pair(const PipelineConfig& cfg, FrameIndex duration) {
  SyntheticScenario scn = blank(2, "crossing", cfg, duration, 0.0);
  for (std::size_t i = 0; i < 2; ++i) {
    const Lane ln = lane(i, 2, cfg.height);
    ActorSpec a;
    a.width = std::max(8, static_cast<int>(cfg.width) / 10);
    a.height = ln.bottom - ln.top;
    a.y = ln.top;
    const double speed = std::min(1.0, (static_cast<double>(cfg.width) - a.width - 1.0) /
                                           static_cast<double>(std::max<FrameIndex>(1, duration - 1)));
    a.vx = i == 0 ? speed : -speed;
    a.x = i == 0 ? 0.0 : speed * static_cast<double>(duration - 1);
    a.spawn_frame = 0;
    a.timeline = {{1, 0, duration - 1}};
    scn.actors.push_back(std::move(a));
  }
  scn.validate();
  return scn;
}

SyntheticScenario mixed_lengths(std::uint64_t seed, const std::string& video_id,
                                const PipelineConfig& cfg, std::size_t actors,
                                FrameIndex duration) {
  constexpr FrameIndex kLongMin = 300;
  constexpr FrameIndex kLongMax = 400;
  constexpr FrameIndex kShortMin = 20;
  constexpr FrameIndex kShortMax = 32;
  if (duration < kLongMin) throw std::invalid_argument("mixed_lengths: duration below 300 frames");
  SyntheticScenario scn = blank(seed, video_id, cfg, duration, 0.0);
  std::mt19937_64 rng(seed);
  auto uniform_int = [&](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };
  for (std::size_t i = 0; i < actors; ++i) {
    const Lane ln = lane(i, actors, cfg.height);
    ActorSpec a;
    a.height = ln.bottom - ln.top;
    a.y = ln.top;
    a.width = std::max(8, static_cast<int>(cfg.width) / 8);
    a.spawn_frame = 0;
    const double max_speed = std::min(
        0.5, (static_cast<double>(cfg.width) - a.width - 1.0) / static_cast<double>(duration));
    place_horizontally(a, std::uniform_real_distribution<double>(-max_speed, max_speed)(rng),
                       duration, cfg.width, rng);

    int long_class = static_cast<int>(i % 2) + 1;
    for (FrameIndex f = 0; f < duration;) {
      FrameIndex len = uniform_int(kLongMin, kLongMax);
      if (duration - (f + len) < kShortMax + kLongMin) len = duration - f;
      a.timeline.push_back({long_class, f, f + len - 1});
      f += len;
      long_class = 3 - long_class;
      if (f >= duration) break;
      const FrameIndex short_len = uniform_int(kShortMin, kShortMax);
      a.timeline.push_back({3, f, f + short_len - 1});
      f += short_len;
    }
    scn.actors.push_back(std::move(a));
  }
  scn.validate();
  return scn;
}

ThroughputReport benchmark(const PipelineConfig& cfg,
                           std::span<const SyntheticScenario> scenarios) {
  if (scenarios.empty()) return {};
  PipelineConfig local = cfg;
  local.clip_length = scenarios.front().clip_length;
  local.clip_stride = scenarios.front().clip_stride;
  local.height = scenarios.front().height;
  local.width = scenarios.front().width;
  std::vector<SyntheticVideo> videos;
  for (const SyntheticScenario& s : scenarios) {
    if (s.clip_length != local.clip_length || s.clip_stride != local.clip_stride ||
        s.height != local.height || s.width != local.width) {
      throw std::invalid_argument("benchmark: scenarios must share clip geometry");
    }
    videos.push_back(render(s));
  }
  const MemoryClipSource source = memory_source(videos);
  const ScoreSource scores = OracleScores{all_truth(videos), 0.5};
  return run_stream(local, source, scores).report;
}

}  // namespace actdet
