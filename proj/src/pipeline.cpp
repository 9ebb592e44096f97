#include "actdet/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include "actdet/io.hpp"

namespace actdet {

void PipelineConfig::validate() const {
  if (clip_length <= 0) throw std::invalid_argument("clip_length must be > 0");
  if (clip_stride <= 0 || clip_stride > clip_length) {
    throw std::invalid_argument("clip_stride must be in [1, clip_length]");
  }
  if (height == 0 || width == 0) throw std::invalid_argument("resolution must be non-zero");
  if (catalog.size() == 0) throw std::invalid_argument("class catalog is empty");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (scoring.fps <= 0.0) throw std::invalid_argument("scorer.fps must be > 0");
  extraction.validate();
  merge.validate();
  split.validate();
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw std::invalid_argument("config: bad value '" + value + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw std::invalid_argument("config: bad boolean '" + value + "' for " + key);
}

std::vector<std::string> parse_list(const std::string& value) {
  std::string body = value;
  if (body.size() >= 2 && body.front() == '[' && body.back() == ']') {
    body = body.substr(1, body.size() - 2);
  }
  std::vector<std::string> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = unquote(trim(item));
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

void apply_config_value(PipelineConfig& cfg, const std::string& key, const std::string& raw) {
  const std::string value = unquote(trim(raw));
  auto num = [&]<typename T>(T& field) { field = parse_number<T>(key, value); };

  if (key == "clip_length") num(cfg.clip_length);
  else if (key == "clip_stride") num(cfg.clip_stride);
  else if (key == "height") num(cfg.height);
  else if (key == "width") num(cfg.width);
  else if (key == "workers") num(cfg.workers);
  else if (key == "tmas") cfg.use_tmas = parse_bool(key, value);
  else if (key == "classes") {
    const auto names = parse_list(trim(raw));
    if (names.size() == 1 && names.front().find_first_not_of("0123456789") == std::string::npos) {
      cfg.catalog = ClassCatalog::numbered(parse_number<std::size_t>(key, names.front()));
    } else {
      cfg.catalog = ClassCatalog(names);
    }
  }
  else if (key == "extraction.threshold") num(cfg.extraction.threshold);
  else if (key == "extraction.connectivity") {
    const int c = parse_number<int>(key, value);
    if (c != 6 && c != 26) throw std::invalid_argument("config: connectivity must be 6 or 26");
    cfg.extraction.connectivity = c == 6 ? Connectivity::kFace : Connectivity::kFull;
  }
  else if (key == "extraction.min_voxels") num(cfg.extraction.min_voxels);
  else if (key == "extraction.min_frame_area") num(cfg.extraction.min_frame_area);
  else if (key == "link.threshold") num(cfg.merge.link_threshold);
  else if (key == "link.delta_t") num(cfg.merge.gap_tolerance);
  else if (key == "link.mode") {
    if (value == "mean_frame_iou") cfg.merge.link_mode = LinkMode::kMeanFrameIou;
    else if (value == "volumetric") cfg.merge.link_mode = LinkMode::kVolumetric;
    else throw std::invalid_argument("config: link.mode must be mean_frame_iou or volumetric");
  }
  else if (key == "split.kappa") num(cfg.split.smooth_half_window);
  else if (key == "split.alpha") num(cfg.split.score_threshold);
  else if (key == "split.beta") num(cfg.split.max_gap);
  else if (key == "split.gamma") num(cfg.split.min_length);
  else if (key == "scorer.t_iou") num(cfg.scoring.align.min_temporal_iou);
  else if (key == "scorer.spatial") cfg.scoring.align.spatial = parse_bool(key, value);
  else if (key == "scorer.s_iou") num(cfg.scoring.align.min_spatial_iou);
  else if (key == "scorer.fps") num(cfg.scoring.fps);
  else if (key == "scorer.rate_fa_limit") num(cfg.scoring.rate_fa_limit);
  else if (key == "scorer.time_fa_limit") num(cfg.scoring.time_fa_limit);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

PipelineConfig parse_config(const std::string& text, PipelineConfig base) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config: expected 'key = value'", line_no);
    }
    std::string key = trim(line.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    try {
      apply_config_value(base, key, line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what(), line_no);
    }
  }
  base.validate();
  return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  return parse_config(read_text(path), std::move(base));
}

DirectoryClipSource::DirectoryClipSource(std::filesystem::path root) : root_(std::move(root)) {}

std::vector<std::string> DirectoryClipSource::videos() const { return list_videos(root_); }

std::int64_t DirectoryClipSource::clip_count(const std::string& video_id) const {
  return count_clips(root_, video_id);
}

ClipMask DirectoryClipSource::load(const std::string& video_id, std::int64_t index) const {
  const auto path = clip_path(root_, video_id, index);
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("missing clip index " + std::to_string(index) + " for video " +
                             video_id + " (" + path.string() + ")");
  }
  return read_gbm(path);
}

void MemoryClipSource::add(const std::string& video_id, std::vector<ClipMask> clips) {
  clips_[video_id] = std::move(clips);
}

std::vector<std::string> MemoryClipSource::videos() const {
  std::vector<std::string> out;
  for (const auto& [id, clips] : clips_) out.push_back(id);
  return out;
}

std::int64_t MemoryClipSource::clip_count(const std::string& video_id) const {
  const auto it = clips_.find(video_id);
  if (it == clips_.end()) throw std::out_of_range("unknown video " + video_id);
  return static_cast<std::int64_t>(it->second.size());
}

ClipMask MemoryClipSource::load(const std::string& video_id, std::int64_t index) const {
  const auto it = clips_.find(video_id);
  if (it == clips_.end()) throw std::out_of_range("unknown video " + video_id);
  if (index < 0 || index >= static_cast<std::int64_t>(it->second.size())) {
    throw std::runtime_error("missing clip index " + std::to_string(index) + " for video " +
                             video_id);
  }
  return it->second[static_cast<std::size_t>(index)];
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

VideoResult run_video(const PipelineConfig& cfg, const std::string& video_id,
                      const ClipSource& clips, const ScoreSource& scores,
                      const std::function<void(const Emission&)>& sink) {
  VideoResult result;
  result.video_id = video_id;
  const std::int64_t n = clips.clip_count(video_id);
  const std::size_t num_classes = cfg.catalog.size();
  const Dims expected{static_cast<std::size_t>(cfg.clip_length), cfg.height, cfg.width};
  TubeMerger merger(cfg.merge);
  StageTimes& st = result.stages;

  auto emit = [&](std::vector<ActionInstance> instances, std::int64_t clip_index) {
    for (auto& inst : instances) {
      Emission e{std::move(inst), clip_index};
      if (sink) sink(e);
      result.emissions.push_back(std::move(e));
    }
  };
  auto split = [&](const std::vector<ActionTube>& tubes, std::int64_t clip_index) {
    if (tubes.empty()) return;
    const auto t0 = Clock::now();
    auto instances = action_split(tubes, num_classes, cfg.split);
    st.split += seconds_since(t0);
    emit(std::move(instances), clip_index);
  };

  for (std::int64_t k = 0; k < n; ++k) {
    const FrameIndex clip_start = k * cfg.clip_stride;

    auto t0 = Clock::now();
    const ClipMask mask = clips.load(video_id, k);
    st.io += seconds_since(t0);
    if (!(mask.dims() == expected)) {
      throw std::invalid_argument(
          "clip " + std::to_string(k) + " of video " + video_id + " is " +
          std::to_string(mask.dims().frames) + "x" + std::to_string(mask.dims().height) + "x" +
          std::to_string(mask.dims().width) + ", config expects " +
          std::to_string(expected.frames) + "x" + std::to_string(expected.height) + "x" +
          std::to_string(expected.width));
    }

    t0 = Clock::now();
    std::vector<Tubelet> tubelets =
        extract(mask, ClipRef{video_id, k, clip_start}, cfg.extraction, num_classes);
    st.extract += seconds_since(t0);

    t0 = Clock::now();
    tubelets = score_tubelets(tubelets, scores, cfg.catalog);
    st.classify += seconds_since(t0);

    if (!cfg.use_tmas) {
      t0 = Clock::now();
      auto instances = independent_instances(tubelets, num_classes, cfg.split.score_threshold);
      st.split += seconds_since(t0);
      emit(std::move(instances), k);
      continue;
    }

    t0 = Clock::now();
    std::stable_sort(tubelets.begin(), tubelets.end(), [](const Tubelet& a, const Tubelet& b) {
      return a.start_frame() < b.start_frame();
    });
    std::vector<ActionTube> finalized = merger.advance(clip_start);
    for (const Tubelet& t : tubelets) {
      auto done = merger.push(t, clip_start);
      std::move(done.begin(), done.end(), std::back_inserter(finalized));
    }
    st.merge += seconds_since(t0);
    split(finalized, k);
  }

  if (cfg.use_tmas) {
    const auto t0 = Clock::now();
    const std::vector<ActionTube> rest = merger.finish();
    st.merge += seconds_since(t0);
    split(rest, n);
  }

  result.clips = static_cast<std::uint64_t>(n);
  result.frames =
      n == 0 ? 0 : static_cast<std::uint64_t>((n - 1) * cfg.clip_stride + cfg.clip_length);
  return result;
}

StreamResult run_stream(const PipelineConfig& cfg, const ClipSource& clips,
                        const ScoreSource& scores, std::vector<std::string> video_ids) {
  cfg.validate();
  if (video_ids.empty()) video_ids = clips.videos();
  std::sort(video_ids.begin(), video_ids.end());
  video_ids.erase(std::unique(video_ids.begin(), video_ids.end()), video_ids.end());

  StreamResult out;
  out.videos.resize(video_ids.size());
  const int workers =
      std::max(1, std::min<int>(cfg.workers, static_cast<int>(video_ids.size())));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < video_ids.size(); i = next++) {
      try {
        out.videos[i] = run_video(cfg, video_ids[i], clips, scores);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const auto start = Clock::now();
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  const double wall = seconds_since(start);
  if (failure) std::rethrow_exception(failure);

  ThroughputReport& rep = out.report;
  rep.workers = workers;
  rep.videos = video_ids.size();
  rep.wall_seconds = wall;
  for (const VideoResult& v : out.videos) {
    rep.frames += v.frames;
    rep.clips += v.clips;
    rep.stages.io += v.stages.io / workers;
    rep.stages.extract += v.stages.extract / workers;
    rep.stages.classify += v.stages.classify / workers;
    rep.stages.merge += v.stages.merge / workers;
    rep.stages.split += v.stages.split / workers;
    for (const Emission& e : v.emissions) out.instances.push_back(e.instance);
  }
  rep.fps = wall > 0.0 ? static_cast<double>(rep.frames) / wall : 0.0;
  return out;
}

nlohmann::json to_json(const ThroughputReport& report) {
  return {
      {"frames", report.frames},
      {"clips", report.clips},
      {"videos", report.videos},
      {"workers", report.workers},
      {"wall_seconds", report.wall_seconds},
      {"fps", report.fps},
      {"stages",
       {{"io", report.stages.io},
        {"extract", report.stages.extract},
        {"classify", report.stages.classify},
        {"merge", report.stages.merge},
        {"split", report.stages.split}}},
  };
}

}  // namespace actdet
