#include "actdet/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <regex>
#include <set>
#include <sstream>

namespace actdet {

using nlohmann::json;

namespace {

constexpr std::array<char, 4> kGbmMagic{'G', 'B', 'M', '1'};
constexpr std::uint64_t kGbmHeaderBytes = 20;

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff),
                              static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), b.size());
}

std::uint32_t get_u32(std::istream& in, std::uint64_t offset, const char* field) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), b.size());
  if (in.gcount() != 4) {
    throw FormatError(std::string("gbm: truncated header field ") + field,
                      offset + static_cast<std::uint64_t>(in.gcount()));
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

}  // namespace

std::vector<std::uint8_t> quantize_mask(const ClipMask& mask) {
  std::vector<std::uint8_t> bytes(mask.values().size());
  auto v = mask.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    bytes[i] = static_cast<std::uint8_t>(std::lround(v[i] * 255.0));
  }
  return bytes;
}

ClipMask dequantize_mask(const Dims& dims, std::span<const std::uint8_t> bytes) {
  std::vector<double> values(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) values[i] = bytes[i] / 255.0;
  return ClipMask(dims, std::move(values));
}

void write_gbm(std::ostream& out, const ClipMask& mask) {
  const Dims& d = mask.dims();
  out.write(kGbmMagic.data(), kGbmMagic.size());
  put_u32(out, kGbmVersion);
  put_u32(out, static_cast<std::uint32_t>(d.frames));
  put_u32(out, static_cast<std::uint32_t>(d.height));
  put_u32(out, static_cast<std::uint32_t>(d.width));
  const auto bytes = quantize_mask(mask);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void write_gbm(const std::filesystem::path& path, const ClipMask& mask) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_gbm(out, mask);
}

ClipMask read_gbm(std::istream& in) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (in.gcount() != 4) {
    throw FormatError("gbm: truncated magic", static_cast<std::uint64_t>(in.gcount()));
  }
  if (magic != kGbmMagic) throw FormatError("gbm: bad magic, expected GBM1", 0);
  const std::uint32_t version = get_u32(in, 4, "version");
  if (version != kGbmVersion) {
    throw FormatError("gbm: unsupported version " + std::to_string(version), 4);
  }
  const std::uint32_t t = get_u32(in, 8, "T");
  const std::uint32_t h = get_u32(in, 12, "H");
  const std::uint32_t w = get_u32(in, 16, "W");
  if (t == 0) throw FormatError("gbm: zero frame count", 8);
  if (h == 0) throw FormatError("gbm: zero height", 12);
  if (w == 0) throw FormatError("gbm: zero width", 16);
  const Dims dims{t, h, w};
  std::vector<std::uint8_t> bytes(dims.voxels());
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  const auto got = static_cast<std::uint64_t>(in.gcount());
  if (got != bytes.size()) {
    throw FormatError("gbm: payload truncated, expected " + std::to_string(bytes.size()) +
                          " bytes",
                      kGbmHeaderBytes + got);
  }
  return dequantize_mask(dims, bytes);
}

ClipMask read_gbm(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_gbm(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

std::filesystem::path clip_path(const std::filesystem::path& root, const std::string& video_id,
                                std::int64_t clip_index) {
  return root / video_id / ("clip_" + std::to_string(clip_index) + ".gbm");
}

std::vector<std::string> list_videos(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) {
    throw std::runtime_error("mask root " + root.string() + " is not a directory");
  }
  std::vector<std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory()) out.push_back(entry.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::int64_t count_clips(const std::filesystem::path& root, const std::string& video_id) {
  const auto dir = root / video_id;
  if (!std::filesystem::is_directory(dir)) {
    throw std::runtime_error("no mask directory for video " + video_id);
  }
  static const std::regex pattern(R"(clip_(\d+)\.gbm)");
  std::set<std::int64_t> found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) found.insert(std::stoll(m[1].str()));
  }
  std::int64_t expected = 0;
  for (std::int64_t idx : found) {
    if (idx != expected) {
      throw std::runtime_error("video " + video_id + ": missing clip index " +
                               std::to_string(expected));
    }
    ++expected;
  }
  return expected;
}

json to_json(const Tube& tube) {
  json boxes = json::array();
  for (const FrameBox& b : tube.boxes()) boxes.push_back({b.x1(), b.y1(), b.x2(), b.y2()});
  json scores = json::array();
  for (const ScoreVector& s : tube.frame_scores()) {
    scores.push_back(std::vector<double>(s.values().begin(), s.values().end()));
  }
  return {{"id", tube.id()},
          {"video_id", tube.video_id()},
          {"start_frame", tube.start_frame()},
          {"end_frame", tube.end_frame()},
          {"boxes", std::move(boxes)},
          {"scores", std::move(scores)}};
}

Tube tube_from_json(const json& j) {
  const FrameIndex start = j.at("start_frame").get<FrameIndex>();
  std::vector<FrameBox> boxes;
  for (const auto& b : j.at("boxes")) {
    boxes.emplace_back(start + static_cast<FrameIndex>(boxes.size()), b.at(0).get<int>(),
                       b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>());
  }
  std::vector<ScoreVector> scores;
  for (const auto& s : j.at("scores")) scores.emplace_back(s.get<std::vector<double>>());
  Tube t(j.at("id").get<std::string>(), j.at("video_id").get<std::string>(), std::move(boxes),
         std::move(scores));
  if (j.contains("end_frame") && j.at("end_frame").get<FrameIndex>() != t.end_frame()) {
    throw std::invalid_argument("tube " + t.id() + ": end_frame disagrees with box count");
  }
  return t;
}

json to_json(const ActionInstance& inst) {
  json boxes = json::array();
  for (const FrameBox& b : inst.boxes) boxes.push_back({b.x1(), b.y1(), b.x2(), b.y2()});
  return {{"video_id", inst.video_id},       {"class_id", inst.class_id},
          {"start_frame", inst.start_frame}, {"end_frame", inst.end_frame},
          {"confidence", inst.confidence},   {"boxes", std::move(boxes)}};
}

ActionInstance instance_from_json(const json& j) {
  ActionInstance inst;
  inst.video_id = j.at("video_id").get<std::string>();
  inst.class_id = j.at("class_id").get<int>();
  inst.start_frame = j.at("start_frame").get<FrameIndex>();
  inst.end_frame = j.at("end_frame").get<FrameIndex>();
  inst.confidence = j.at("confidence").get<double>();
  if (inst.end_frame < inst.start_frame) {
    throw std::invalid_argument("detection ends before it starts");
  }
  if (j.contains("boxes")) {
    for (const auto& b : j.at("boxes")) {
      inst.boxes.emplace_back(inst.start_frame + static_cast<FrameIndex>(inst.boxes.size()),
                              b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(),
                              b.at(3).get<int>());
    }
  }
  return inst;
}

json to_json(const GroundTruthInstance& gt) {
  json j{{"video_id", gt.video_id},
         {"class_id", gt.class_id},
         {"start_frame", gt.start_frame},
         {"end_frame", gt.end_frame}};
  if (!gt.boxes.empty()) {
    json boxes = json::array();
    for (const FrameBox& b : gt.boxes) boxes.push_back({b.frame(), b.x1(), b.y1(), b.x2(), b.y2()});
    j["boxes"] = std::move(boxes);
  }
  return j;
}

GroundTruthInstance ground_truth_from_json(const json& j) {
  GroundTruthInstance gt;
  gt.video_id = j.at("video_id").get<std::string>();
  gt.class_id = j.at("class_id").get<int>();
  gt.start_frame = j.at("start_frame").get<FrameIndex>();
  gt.end_frame = j.at("end_frame").get<FrameIndex>();
  if (gt.end_frame < gt.start_frame) {
    throw std::invalid_argument("ground truth instance ends before it starts");
  }
  if (j.contains("boxes")) {
    for (const auto& b : j.at("boxes")) {
      gt.boxes.emplace_back(b.at(0).get<FrameIndex>(), b.at(1).get<int>(), b.at(2).get<int>(),
                            b.at(3).get<int>(), b.at(4).get<int>());
    }
  }
  return gt;
}

namespace {

template <typename T, typename Parse>
std::vector<T> read_jsonl(std::istream& in, Parse parse) {
  std::vector<T> out;
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(json::parse(line)));
    } catch (const std::exception& e) {
      throw FormatError(std::string("jsonl line ") + std::to_string(lineno) + ": " + e.what(),
                        lineno);
    }
  }
  return out;
}

}  // namespace

void write_tubes_jsonl(std::ostream& out, const std::vector<Tube>& tubes) {
  for (const auto& t : tubes) out << to_json(t).dump() << '\n';
}

std::vector<Tube> read_tubes_jsonl(std::istream& in) {
  return read_jsonl<Tube>(in, [](const json& j) { return tube_from_json(j); });
}

void write_instances_jsonl(std::ostream& out, const std::vector<ActionInstance>& instances) {
  for (const auto& i : instances) out << to_json(i).dump() << '\n';
}

std::vector<ActionInstance> read_instances_jsonl(std::istream& in) {
  return read_jsonl<ActionInstance>(in, [](const json& j) { return instance_from_json(j); });
}

void write_ground_truth(std::ostream& out, const std::vector<GroundTruthInstance>& truth) {
  json arr = json::array();
  for (const auto& g : truth) arr.push_back(to_json(g));
  out << arr.dump() << '\n';
}

std::vector<GroundTruthInstance> read_ground_truth(std::istream& in) {
  const json arr = json::parse(in);
  if (!arr.is_array()) throw FormatError("ground truth must be a JSON array", 0);
  std::vector<GroundTruthInstance> out;
  for (const auto& j : arr) out.push_back(ground_truth_from_json(j));
  return out;
}

void write_video_frames(std::ostream& out, const std::map<std::string, FrameIndex>& frames) {
  out << json(frames).dump() << '\n';
}

std::map<std::string, FrameIndex> read_video_frames(std::istream& in) {
  return json::parse(in).get<std::map<std::string, FrameIndex>>();
}

void write_score_table(std::ostream& out, const FileBackedScores& scores) {
  std::size_t width = 0;
  for (const auto& [id, v] : scores.table) width = std::max(width, v.size());
  out << "tubelet_id";
  for (std::size_t c = 0; c < width; ++c) out << ",score_" << c;
  out << '\n';
  // Sorted for reproducible files.
  std::map<std::string, const ScoreVector*> sorted;
  for (const auto& [id, v] : scores.table) sorted.emplace(id, &v);
  for (const auto& [id, v] : sorted) {
    out << id;
    for (double s : v->values()) out << ',' << format_double(s);
    out << '\n';
  }
}

FileBackedScores read_score_table(std::istream& in) {
  FileBackedScores out;
  std::string line;
  std::uint64_t lineno = 0;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (columns == 0) {
      if (cells.size() < 3 || cells[0] != "tubelet_id") {
        throw FormatError("score table: header must be tubelet_id,score_0,...,score_C", lineno);
      }
      columns = cells.size();
      continue;
    }
    if (cells.size() != columns) {
      throw FormatError("score table: expected " + std::to_string(columns) + " columns", lineno);
    }
    std::vector<double> v;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      double x = 0.0;
      const auto* first = cells[c].data();
      const auto* last = first + cells[c].size();
      auto [ptr, ec] = std::from_chars(first, last, x);
      if (ec != std::errc() || ptr != last) {
        throw FormatError("score table: bad number '" + cells[c] + "'", lineno);
      }
      v.push_back(x);
    }
    try {
      out.table.insert_or_assign(cells[0], ScoreVector(std::move(v)));
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("score table: ") + e.what(), lineno);
    }
  }
  if (columns == 0) throw FormatError("score table: missing header", 0);
  return out;
}

void write_det_curves_csv(std::ostream& out, const ScoreReport& report) {
  out << "class_id,axis,threshold,fa,pmiss\n";
  for (const auto& m : report.classes) {
    for (const DetCurve* curve : {&m.rate_curve, &m.time_curve}) {
      const char* axis = curve->axis == FaAxis::kRate ? "rate" : "time";
      for (const DetPoint& p : curve->points) {
        out << m.class_id << ',' << axis << ','
            << (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) << ','
            << format_double(p.fa) << ',' << format_double(p.pmiss) << '\n';
      }
    }
  }
}

json to_json(const ScoreReport& report) {
  auto points = [](const std::map<double, double>& m) {
    json j = json::object();
    for (const auto& [op, v] : m) j[format_double(op)] = v;
    return j;
  };
  json classes = json::array();
  for (const auto& m : report.classes) {
    classes.push_back({{"class_id", m.class_id},
                       {"references", m.references},
                       {"detections", m.detections},
                       {"n_audc_rate", m.n_audc_rate},
                       {"n_audc_time", m.n_audc_time},
                       {"pmiss_at_rate_fa", points(m.pmiss_at_rate_fa)},
                       {"pmiss_at_time_fa", points(m.pmiss_at_time_fa)}});
  }
  return {{"classes", std::move(classes)},
          {"mean_n_audc_rate", report.mean_n_audc_rate},
          {"mean_n_audc_time", report.mean_n_audc_time},
          {"mean_pmiss_at_rate_fa", points(report.mean_pmiss_at_rate_fa)},
          {"mean_pmiss_at_time_fa", points(report.mean_pmiss_at_time_fa)}};
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace actdet
