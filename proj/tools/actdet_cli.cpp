// actdet command line: file-based access to every stage of the pipeline.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "actdet/classify.hpp"
#include "actdet/extract.hpp"
#include "actdet/io.hpp"
#include "actdet/loss.hpp"
#include "actdet/pipeline.hpp"
#include "actdet/scorer.hpp"
#include "actdet/synth.hpp"
#include "actdet/tmas.hpp"

namespace fs = std::filesystem;
using namespace actdet;

namespace {

struct Globals {
  std::string config;
  std::uint64_t seed{0};
  std::optional<int> workers;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

// Writes to `path`, or stdout for "" and "-".
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  fn(out);
}

PipelineConfig base_config(const Globals& g) {
  PipelineConfig cfg = g.config.empty() ? PipelineConfig{} : load_config(g.config);
  if (g.workers) cfg.workers = *g.workers;
  return cfg;
}

// Score source flags shared by extract and run.
struct ScoreFlags {
  std::string table;
  std::string oracle;
  std::string constant;

  void attach(CLI::App* app) {
    auto* t = app->add_option("--scores", table, "score table CSV keyed by tubelet id");
    auto* o = app->add_option("--oracle", oracle, "ground-truth JSON used as an oracle scorer");
    auto* c = app->add_option("--constant", constant, "fixed score vector, e.g. 0.1,0.9");
    t->excludes(o)->excludes(c);
    o->excludes(c);
  }

  [[nodiscard]] bool given() const { return !table.empty() || !oracle.empty() || !constant.empty(); }

  [[nodiscard]] ScoreSource load(std::size_t num_classes) const {
    if (!table.empty()) {
      auto in = open_in(table);
      return read_score_table(in);
    }
    if (!oracle.empty()) {
      auto in = open_in(oracle);
      return OracleScores{read_ground_truth(in), 0.5};
    }
    if (!constant.empty()) {
      std::vector<double> v;
      std::stringstream ss(constant);
      for (std::string item; std::getline(ss, item, ',');) v.push_back(std::stod(item));
      return ConstantScores{ScoreVector(std::move(v))};
    }
    std::vector<double> zeros(num_classes + 1, 0.0);
    zeros[0] = 1.0;
    return ConstantScores{ScoreVector(std::move(zeros))};
  }
};

void add_geometry_flags(CLI::App* app, PipelineConfig& cfg) {
  app->add_option_function<FrameIndex>(
      "--clip-length", [&cfg](FrameIndex v) { cfg.clip_length = v; }, "frames per clip");
  app->add_option_function<FrameIndex>(
      "--clip-stride", [&cfg](FrameIndex v) { cfg.clip_stride = v; }, "frames between clip starts");
  app->add_option_function<std::size_t>(
      "--classes", [&cfg](std::size_t n) { cfg.catalog = ClassCatalog::numbered(n); },
      "number of activity classes");
  app->add_option_function<std::size_t>(
      "--height", [&cfg](std::size_t v) { cfg.height = v; }, "frame height");
  app->add_option_function<std::size_t>(
      "--width", [&cfg](std::size_t v) { cfg.width = v; }, "frame width");
}

void add_tmas_flags(CLI::App* app, PipelineConfig& cfg) {
  app->add_option_function<double>(
      "--theta-link", [&cfg](double v) { cfg.merge.link_threshold = v; }, "link threshold");
  app->add_option_function<FrameIndex>(
      "--delta-t", [&cfg](FrameIndex v) { cfg.merge.gap_tolerance = v; }, "largest linkable gap");
  app->add_option_function<int>(
      "--kappa", [&cfg](int v) { cfg.split.smooth_half_window = v; }, "smoothing half window");
  app->add_option_function<double>(
      "--alpha", [&cfg](double v) { cfg.split.score_threshold = v; }, "instance score threshold");
  app->add_option_function<FrameIndex>(
      "--beta", [&cfg](FrameIndex v) { cfg.split.max_gap = v; }, "low frames that close an instance");
  app->add_option_function<FrameIndex>(
      "--gamma", [&cfg](FrameIndex v) { cfg.split.min_length = v; }, "shortest kept instance");
}

std::vector<std::string> pick_videos(const fs::path& masks, const std::vector<std::string>& wanted) {
  return wanted.empty() ? list_videos(masks) : wanted;
}

int cmd_extract(const PipelineConfig& cfg, const std::string& masks,
                const std::vector<std::string>& videos, const ScoreFlags& sf,
                const std::string& out_path) {
  const DirectoryClipSource source(masks);
  const ScoreSource scores = sf.load(cfg.catalog.size());
  std::vector<Tube> all;
  for (const std::string& v : pick_videos(masks, videos)) {
    const std::int64_t n = source.clip_count(v);
    for (std::int64_t k = 0; k < n; ++k) {
      auto tubelets = extract(source.load(v, k), ClipRef{v, k, k * cfg.clip_stride},
                              cfg.extraction, cfg.catalog.size());
      if (sf.given()) tubelets = score_tubelets(tubelets, scores, cfg.catalog);
      std::move(tubelets.begin(), tubelets.end(), std::back_inserter(all));
    }
  }
  with_output(out_path, [&](std::ostream& out) { write_tubes_jsonl(out, all); });
  return 0;
}

int cmd_tmas(const PipelineConfig& cfg, const std::string& in_path, const std::string& out_path) {
  std::vector<Tube> tubelets;
  if (in_path.empty() || in_path == "-") {
    tubelets = read_tubes_jsonl(std::cin);
  } else {
    auto in = open_in(in_path);
    tubelets = read_tubes_jsonl(in);
  }
  // Tubelets are grouped per video; the stream clock of each is the start of
  // the stride slot it begins in.
  std::map<std::string, std::vector<Tube>> per_video;
  for (auto& t : tubelets) per_video[t.video_id()].push_back(std::move(t));

  std::vector<ActionInstance> instances;
  for (auto& [video, list] : per_video) {
    auto slot = [&](const Tube& t) { return t.start_frame() / cfg.clip_stride * cfg.clip_stride; };
    std::stable_sort(list.begin(), list.end(),
                     [&](const Tube& a, const Tube& b) { return slot(a) < slot(b); });
    TubeMerger merger(cfg.merge);
    std::vector<ActionTube> tubes;
    for (const Tube& t : list) {
      auto done = merger.push(t, slot(t));
      std::move(done.begin(), done.end(), std::back_inserter(tubes));
    }
    auto rest = merger.finish();
    std::move(rest.begin(), rest.end(), std::back_inserter(tubes));
    const std::size_t num_classes = tubes.empty() ? 0 : tubes.front().num_classes();
    auto found = action_split(tubes, num_classes, cfg.split);
    std::move(found.begin(), found.end(), std::back_inserter(instances));
  }
  with_output(out_path, [&](std::ostream& out) { write_instances_jsonl(out, instances); });
  return 0;
}

int cmd_score(const PipelineConfig& cfg, const std::string& det_path, const std::string& gt_path,
              const std::string& videos_path, const std::string& report_path,
              const std::string& curves_path) {
  auto det_in = open_in(det_path);
  const auto detections = read_instances_jsonl(det_in);
  auto gt_in = open_in(gt_path);
  const auto truth = read_ground_truth(gt_in);
  ScoringConfig sc = cfg.scoring;
  if (!videos_path.empty()) {
    auto in = open_in(videos_path);
    sc.video_frames = read_video_frames(in);
  }
  const ScoreReport report = per_class_report(detections, truth, sc);
  with_output(report_path, [&](std::ostream& out) { out << to_json(report).dump(2) << '\n'; });
  if (!curves_path.empty()) {
    with_output(curves_path, [&](std::ostream& out) { write_det_curves_csv(out, report); });
  }
  return 0;
}

int cmd_run(const PipelineConfig& cfg, const std::string& masks,
            const std::vector<std::string>& videos, const ScoreFlags& sf,
            const std::string& out_path, const std::string& report_path) {
  const DirectoryClipSource source(masks);
  const StreamResult result =
      run_stream(cfg, source, sf.load(cfg.catalog.size()), pick_videos(masks, videos));
  with_output(out_path, [&](std::ostream& out) { write_instances_jsonl(out, result.instances); });
  if (!report_path.empty()) {
    with_output(report_path,
                [&](std::ostream& out) { out << to_json(result.report).dump(2) << '\n'; });
  } else {
    std::cerr << to_json(result.report).dump() << '\n';
  }
  return 0;
}

struct SynthFlags {
  std::string preset{"random"};
  std::size_t videos{1};
  std::size_t actors{1};
  FrameIndex duration{1000};
  double noise{0.0};
  FrameIndex min_segment{120};
  FrameIndex max_segment{400};

  void attach(CLI::App* app) {
    app->add_option("--preset", preset, "walker | crossing | mixed | random")
        ->check(CLI::IsMember({"walker", "crossing", "mixed", "random"}))
        ->capture_default_str();
    app->add_option("--videos", videos, "number of videos")->capture_default_str();
    app->add_option("--actors", actors, "actors per video (mixed, random)")->capture_default_str();
    app->add_option("--duration", duration, "frames per video")->capture_default_str();
    app->add_option("--noise", noise, "mask noise standard deviation")->capture_default_str();
    app->add_option("--min-segment", min_segment, "shortest activity segment (random)")
        ->capture_default_str();
    app->add_option("--max-segment", max_segment, "longest activity segment (random)")
        ->capture_default_str();
  }

  [[nodiscard]] std::vector<SyntheticScenario> scenarios(const PipelineConfig& cfg,
                                                         std::uint64_t seed) const {
    std::vector<SyntheticScenario> out;
    for (std::size_t i = 0; i < videos; ++i) {
      const std::uint64_t s = seed + i;
      const std::string id = "video_" + std::to_string(i);
      SyntheticScenario scn;
      if (preset == "walker") {
        scn = single_walker(cfg, duration, noise);
      } else if (preset == "crossing") {
        scn = crossing_pair(cfg, duration);
        scn.noise = noise;
      } else if (preset == "mixed") {
        scn = mixed_lengths(s, id, cfg, actors, duration);
        scn.noise = noise;
      } else {
        RandomScenarioOptions opts;
        opts.actors = actors;
        opts.duration = duration;
        opts.num_classes = cfg.catalog.size();
        opts.min_segment = min_segment;
        opts.max_segment = max_segment;
        opts.noise = noise;
        scn = random_scenario(s, id, opts, cfg);
      }
      scn.seed = s;
      scn.video_id = id;
      out.push_back(std::move(scn));
    }
    return out;
  }
};

int cmd_synth(const PipelineConfig& cfg, std::uint64_t seed, const SynthFlags& flags,
              const std::string& out_dir) {
  std::vector<SyntheticVideo> videos;
  for (const auto& scn : flags.scenarios(cfg, seed)) videos.push_back(render(scn));
  write_synthetic(out_dir, videos, cfg);
  std::size_t instances = 0;
  for (const auto& v : videos) instances += v.truth.size();
  std::cout << nlohmann::json{{"videos", videos.size()}, {"ground_truth", instances},
                              {"dir", out_dir}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_bench(const PipelineConfig& cfg, std::uint64_t seed, const SynthFlags& flags) {
  const auto scenarios = flags.scenarios(cfg, seed);
  std::cout << to_json(benchmark(cfg, scenarios)).dump(2) << '\n';
  return 0;
}

int cmd_loss_eval(const std::string& truth_path, const std::string& pred_path,
                  const LossConfig& lc) {
  const MaskVolume truth = read_gbm(fs::path(truth_path));
  const MaskVolume pred = read_gbm(fs::path(pred_path));
  const PatchDiceResult pdl = patch_dice_loss(truth, pred, lc.grid, lc.dice);
  const auto tp = build_pyramid(truth, lc.scales);
  const auto pp = build_pyramid(pred, lc.scales);
  nlohmann::json j{
      {"bce", bce_loss(truth, pred)},
      {"dice", dice_loss(truth, pred, lc.dice)},
      {"patch_dice_sum", pdl.sum},
      {"patch_dice_mean", pdl.mean},
      {"patches", pdl.patches},
      {"multiscale", multiscale_loss(tp, pp, lc)},
  };
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online activity detection from per-clip foreground masks"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "random seed for synth and bench")->capture_default_str();
  app.add_option("--workers", g.workers, "parallel videos");

  // Flag callbacks run after the config is loaded, so flags override it.
  PipelineConfig cfg;

  std::string masks;
  std::vector<std::string> only_videos;
  std::string out_path;
  std::string in_path;
  ScoreFlags sf;

  auto* extract_cmd = app.add_subcommand("extract", "clip masks -> tubelets (JSON Lines)");
  extract_cmd->add_option("--masks", masks, "mask root directory")->required();
  extract_cmd->add_option("--video", only_videos, "restrict to these videos");
  extract_cmd->add_option("--out,-o", out_path, "output file (default stdout)");
  sf.attach(extract_cmd);

  auto* tmas_cmd = app.add_subcommand("tmas", "scored tubelets -> action instances");
  tmas_cmd->add_option("--in,-i", in_path, "tubelet JSON Lines (default stdin)");
  tmas_cmd->add_option("--out,-o", out_path, "output file (default stdout)");

  std::string gt_path;
  std::string videos_path;
  std::string report_path;
  std::string curves_path;
  auto* score_cmd = app.add_subcommand("score", "detections vs ground truth -> metrics");
  score_cmd->add_option("--detections,-d", in_path, "detections JSON Lines")->required();
  score_cmd->add_option("--gt", gt_path, "ground truth JSON")->required();
  score_cmd->add_option("--video-frames", videos_path, "JSON object of video lengths");
  score_cmd->add_option("--report", report_path, "metrics JSON (default stdout)");
  score_cmd->add_option("--curves", curves_path, "DET curve points CSV");

  auto* run_cmd = app.add_subcommand("run", "clip masks -> action instances, online");
  run_cmd->add_option("--masks", masks, "mask root directory")->required();
  run_cmd->add_option("--video", only_videos, "restrict to these videos");
  run_cmd->add_option("--out,-o", out_path, "detections JSON Lines (default stdout)");
  run_cmd->add_option("--report", report_path, "throughput JSON (default stderr)");
  bool no_tmas = false;
  run_cmd->add_flag("--no-tmas", no_tmas, "score tubelets independently");
  sf.attach(run_cmd);

  SynthFlags synth_flags;
  std::string out_dir;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic scenario to disk");
  synth_cmd->add_option("--out,-o", out_dir, "output directory")->required();
  synth_flags.attach(synth_cmd);

  SynthFlags bench_flags;
  bench_flags.duration = 2000;
  auto* bench_cmd = app.add_subcommand("bench", "throughput on synthetic clips");
  bench_flags.attach(bench_cmd);

  std::string truth_path;
  std::string pred_path;
  LossConfig lc;
  bool strict = false;
  bool mean = false;
  auto* loss_cmd = app.add_subcommand("loss-eval", "localization losses between two masks");
  loss_cmd->add_option("--truth", truth_path, "ground-truth mask (.gbm)")->required();
  loss_cmd->add_option("--pred", pred_path, "predicted mask (.gbm)")->required();
  loss_cmd->add_option("--patch", lc.grid.patch_h, "patch side")->capture_default_str();
  loss_cmd->add_option("--scales", lc.scales, "pyramid levels")->capture_default_str();
  loss_cmd->add_flag("--strict", strict, "no epsilon in the Dice numerator");
  loss_cmd->add_flag("--mean", mean, "average patch terms instead of summing");

  for (auto* sub : {extract_cmd, tmas_cmd, run_cmd, synth_cmd, bench_cmd}) {
    add_geometry_flags(sub, cfg);
  }
  add_tmas_flags(tmas_cmd, cfg);
  add_tmas_flags(run_cmd, cfg);

  try {
    // The config has to be in place before option callbacks fire, so it is
    // loaded from a first lenient pass over the arguments.
    {
      CLI::App pre;
      pre.allow_extras();
      pre.add_option("--config", g.config);
      pre.add_option("--workers", g.workers);
      pre.set_help_flag();
      pre.parse(argc, argv);
      cfg = base_config(g);
    }
    app.parse(argc, argv);
    if (g.workers) cfg.workers = *g.workers;
    if (no_tmas) cfg.use_tmas = false;
    lc.grid.patch_w = lc.grid.patch_h;
    lc.dice.smoothed_numerator = !strict;
    lc.reduction = mean ? PatchReduction::kMean : PatchReduction::kSum;
    cfg.validate();

    if (*extract_cmd) return cmd_extract(cfg, masks, only_videos, sf, out_path);
    if (*tmas_cmd) return cmd_tmas(cfg, in_path, out_path);
    if (*score_cmd) {
      return cmd_score(cfg, in_path, gt_path, videos_path, report_path, curves_path);
    }
    if (*run_cmd) return cmd_run(cfg, masks, only_videos, sf, out_path, report_path);
    if (*synth_cmd) return cmd_synth(cfg, g.seed, synth_flags, out_dir);
    if (*bench_cmd) return cmd_bench(cfg, g.seed, bench_flags);
    if (*loss_cmd) {
      lc.validate();
      return cmd_loss_eval(truth_path, pred_path, lc);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
