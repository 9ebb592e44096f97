#include <doctest.h>

#include <fstream>

#include "actdet/io.hpp"
#include "actdet/synth.hpp"

using namespace actdet;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.height = 112;
  cfg.width = 112;
  cfg.catalog = ClassCatalog::numbered(3);
  return cfg;
}

ActorSpec still_actor(FrameIndex first, FrameIndex last, int cls = 1) {
  ActorSpec a;
  a.spawn_frame = first;
  a.x = 20;
  a.y = 30;
  a.timeline = {{cls, first, last}};
  return a;
}

std::string file_bytes(const fs::path& p) { return read_text(p); }

}  // namespace

TEST_CASE("a scene without actors renders background only") {
  SyntheticScenario s;
  s.duration = 48;
  const SyntheticVideo v = render(s);
  CHECK(v.clips.size() == 3);
  CHECK(v.truth.empty());
  for (const auto& c : v.clips)
    for (double p : c.values()) CHECK(p == doctest::Approx(0.1).epsilon(0.01));
}

TEST_CASE("one static actor") {
  SyntheticScenario s;
  s.duration = 64;
  s.actors = {still_actor(0, 63)};
  const SyntheticVideo v = render(s);
  REQUIRE(v.clips.size() == 4);
  REQUIRE(v.truth.size() == 1);
  CHECK(v.truth[0].start_frame == 0);
  CHECK(v.truth[0].end_frame == 63);
  CHECK(v.truth[0].boxes.size() == 64);
  CHECK(v.truth[0].boxes[10] == FrameBox(10, 20, 30, 30, 40));
  const Dims& d = v.clips[2].dims();
  CHECK(v.clips[2].at(5, 35, 25) > 0.5);
  CHECK(v.clips[2].at(5, 35, 31) < 0.5);
  CHECK(d.frames == 16);
}

TEST_CASE("clip count covers the duration") {
  SyntheticScenario s;
  s.duration = 16;
  CHECK(s.clip_count() == 1);
  s.duration = 17;
  CHECK(s.clip_count() == 2);
  s.duration = 64;
  s.clip_stride = 8;
  CHECK(s.clip_count() == 7);
}

TEST_CASE("scenario validation") {
  SyntheticScenario s;
  s.duration = 64;
  ActorSpec a = still_actor(0, 63);
  a.vx = 2.0;
  s.actors = {a};
  try {
    s.validate();
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("actor 0") != std::string::npos);
    CHECK(msg.find("leaves the frame at frame 42") != std::string::npos);
  }
  a = still_actor(0, 63);
  a.timeline.push_back({2, 70, 80});
  s.actors = {a};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("noise is seeded") {
  SyntheticScenario s;
  s.duration = 32;
  s.noise = 0.2;
  s.actors = {still_actor(0, 31)};
  const auto a = render(s);
  const auto b = render(s);
  CHECK(a.clips[1].values().size() == b.clips[1].values().size());
  CHECK(std::equal(a.clips[1].values().begin(), a.clips[1].values().end(),
                   b.clips[1].values().begin()));
  s.seed = 9;
  const auto c = render(s);
  CHECK_FALSE(std::equal(a.clips[1].values().begin(), a.clips[1].values().end(),
                         c.clips[1].values().begin()));
}

TEST_CASE("written datasets are byte identical for one seed") {
  const PipelineConfig cfg = small_config();
  RandomScenarioOptions opts;
  opts.actors = 2;
  opts.duration = 200;
  opts.min_segment = 40;
  opts.max_segment = 80;
  opts.noise = 0.1;
  const std::vector<SyntheticVideo> videos{render(random_scenario(3, "a", opts, cfg))};
  const fs::path one = fs::temp_directory_path() / "actdet_synth_1";
  const fs::path two = fs::temp_directory_path() / "actdet_synth_2";
  fs::remove_all(one);
  fs::remove_all(two);
  write_synthetic(one, videos, cfg);
  write_synthetic(two, std::vector{render(random_scenario(3, "a", opts, cfg))}, cfg);
  for (const char* name : {"gt.json", "videos.json", "scores.csv", "masks/a/clip_5.gbm"}) {
    CHECK(file_bytes(one / name) == file_bytes(two / name));
  }
  CHECK(count_clips(one / "masks", "a") == 13);
  fs::remove_all(one);
  fs::remove_all(two);
}

TEST_CASE("random scenarios") {
  const PipelineConfig cfg = small_config();
  RandomScenarioOptions opts;
  opts.duration = 1500;
  for (std::size_t actors = 1; actors <= 5; ++actors) {
    opts.actors = actors;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const SyntheticScenario s = random_scenario(seed, "r", opts, cfg);
      REQUIRE(s.actors.size() == actors);
      for (std::size_t i = 0; i < actors; ++i) {
        const ActorSpec& a = s.actors[i];
        for (std::size_t k = 1; k < a.timeline.size(); ++k) {
          CHECK(a.timeline[k].class_id != a.timeline[k - 1].class_id);
          CHECK(a.timeline[k].start_frame == a.timeline[k - 1].end_frame + 1);
        }
        for (const auto& seg : a.timeline) CHECK(seg.end_frame - seg.start_frame + 1 >= opts.min_segment);
        // Actors keep to their own band of rows.
        const int band = static_cast<int>(cfg.height / actors);
        CHECK(a.y >= static_cast<double>(band * static_cast<int>(i)));
        CHECK(a.y + a.height <= static_cast<double>(band * static_cast<int>(i + 1)));
      }
    }
  }
}

TEST_CASE("mixed lengths alternate long and short activities") {
  const SyntheticScenario s = mixed_lengths(4, "m", small_config(), 2, 2000);
  for (const ActorSpec& a : s.actors) {
    CHECK(a.timeline.front().class_id != 3);
    CHECK(a.timeline.back().class_id != 3);
    for (const auto& seg : a.timeline) {
      const FrameIndex len = seg.end_frame - seg.start_frame + 1;
      if (seg.class_id == 3) CHECK((len >= 20 && len <= 32));
      else CHECK(len >= 300);
    }
  }
  CHECK_THROWS_AS(mixed_lengths(4, "m", small_config(), 2, 100), std::invalid_argument);
}

TEST_CASE("benchmark on an empty scene") {
  PipelineConfig cfg = small_config();
  SyntheticScenario s;
  s.duration = 320;
  const ThroughputReport r = benchmark(cfg, std::vector{s});
  CHECK(r.frames == 320);
  CHECK(r.clips == 20);
  CHECK(r.stages.merge < 0.01);
  CHECK(r.stages.split < 0.01);
  CHECK(r.fps > 0.0);
}
