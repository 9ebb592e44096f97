#include <doctest.h>

#include <random>

#include "actdet/extract.hpp"
#include "support.hpp"

using namespace actdet;
using namespace actdet::testing;

namespace {

BinaryVolume bits_with(Dims d, std::initializer_list<std::array<std::size_t, 3>> on) {
  BinaryVolume v{d, std::vector<std::uint8_t>(d.voxels(), 0)};
  for (const auto& [t, y, x] : on) v.bits[d.index(t, y, x)] = 1;
  return v;
}

MaskVolume cube_mask(Dims d, std::size_t t0, std::size_t t1, std::size_t y0, std::size_t y1,
                     std::size_t x0, std::size_t x1, double p = 0.9) {
  std::vector<double> v(d.voxels(), 0.0);
  for (std::size_t t = t0; t <= t1; ++t)
    for (std::size_t y = y0; y <= y1; ++y)
      for (std::size_t x = x0; x <= x1; ++x) v[d.index(t, y, x)] = p;
  return MaskVolume(d, std::move(v));
}

}  // namespace

TEST_CASE("binarize") {
  const Dims d{1, 1, 3};
  CHECK(binarize(MaskVolume::filled(d, 0.0), 0.5).count() == 0);
  CHECK(binarize(MaskVolume::filled(d, 1.0), 0.5).count() == 3);
  const auto b = binarize(MaskVolume(d, {0.4, 0.5, 0.6}), 0.5);
  CHECK(b.bits == std::vector<std::uint8_t>{0, 1, 1});
}

TEST_CASE("label_components fixtures") {
  SUBCASE("solid cube") {
    const auto m = cube_mask(Dims{6, 6, 6}, 1, 4, 1, 4, 1, 4);
    const auto l = label_components(binarize(m, 0.5), Connectivity::kFace);
    CHECK(l.count == 1);
  }
  SUBCASE("separated blobs") {
    const auto v = bits_with(Dims{4, 6, 6}, {{0, 0, 0}, {0, 0, 1}, {3, 5, 5}, {2, 5, 5}});
    CHECK(label_components(v, Connectivity::kFull).count == 2);
    CHECK(label_components(v, Connectivity::kFace).count == 2);
  }
  SUBCASE("diagonal contact in a frame") {
    const auto v = bits_with(Dims{1, 3, 3}, {{0, 0, 0}, {0, 1, 1}});
    CHECK(label_components(v, Connectivity::kFace).count == 2);
    CHECK(label_components(v, Connectivity::kFull).count == 1);
  }
  SUBCASE("diagonal contact across frames") {
    const auto v = bits_with(Dims{2, 3, 3}, {{0, 0, 0}, {1, 1, 1}});
    CHECK(label_components(v, Connectivity::kFace).count == 2);
    CHECK(label_components(v, Connectivity::kFull).count == 1);
  }
  SUBCASE("labels follow the scan order of first voxels") {
    const auto v = bits_with(Dims{1, 3, 5}, {{0, 0, 4}, {0, 2, 0}, {0, 1, 4}});
    const auto l = label_components(v, Connectivity::kFace);
    CHECK(l.count == 2);
    CHECK(l.labels[v.dims.index(0, 0, 4)] == 1);
    CHECK(l.labels[v.dims.index(0, 1, 4)] == 1);
    CHECK(l.labels[v.dims.index(0, 2, 0)] == 2);
  }
  SUBCASE("U shape merges two provisional labels") {
    const auto v = bits_with(Dims{1, 2, 3}, {{0, 0, 0}, {0, 0, 2}, {0, 1, 0}, {0, 1, 1}, {0, 1, 2}});
    CHECK(label_components(v, Connectivity::kFace).count == 1);
  }
}

TEST_CASE("label_components matches flood fill on random volumes") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 40; ++i) {
    const auto v = random_bits(Dims{4, 12, 12}, rng, 0.1 + 0.02 * (i % 20));
    for (auto conn : {Connectivity::kFace, Connectivity::kFull}) {
      const auto l = label_components(v, conn);
      const auto ref = flood_fill(v, conn);
      CHECK(same_partition(l.labels, ref));
      CHECK(l.count == *std::max_element(ref.begin(), ref.end()));
    }
  }
}

TEST_CASE("26-connectivity never yields more components than 6") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto v = random_bits(Dims{3, 10, 10}, rng, 0.25);
    CHECK(label_components(v, Connectivity::kFull).count <=
          label_components(v, Connectivity::kFace).count);
  }
}

TEST_CASE("components_to_tubelets") {
  ExtractionConfig cfg;
  cfg.min_voxels = 1;
  SUBCASE("tight boxes with clip offset") {
    const auto m = cube_mask(Dims{4, 8, 8}, 0, 3, 2, 5, 2, 5);
    const auto ts = extract(m, ClipRef{"v", 2, 32}, cfg, 2);
    REQUIRE(ts.size() == 1);
    CHECK(ts[0].start_frame() == 32);
    CHECK(ts[0].end_frame() == 35);
    for (const auto& b : ts[0].boxes()) {
      CHECK(b.x1() == 2);
      CHECK(b.y1() == 2);
      CHECK(b.x2() == 6);
      CHECK(b.y2() == 6);
    }
    CHECK(ts[0].id() == "v/2/0");
    CHECK(ts[0].video_id() == "v");
    for (const auto& s : ts[0].frame_scores()) CHECK(s == ScoreVector::zeros(2));
  }
  SUBCASE("frames without voxels are interpolated") {
    // Not reachable through labelling: a component cannot skip a frame.
    const Dims d{3, 8, 8};
    LabelVolume l{d, std::vector<std::int32_t>(d.voxels(), 0), 1};
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 4; ++x) l.labels[d.index(0, y, x)] = 1;
    for (std::size_t y = 2; y < 6; ++y)
      for (std::size_t x = 2; x < 6; ++x) l.labels[d.index(2, y, x)] = 1;
    const auto ts = components_to_tubelets(l, ClipRef{"v", 0, 0}, cfg, 1);
    REQUIRE(ts.size() == 1);
    REQUIRE(ts[0].length() == 3);
    CHECK(ts[0].box_at(1) == FrameBox(1, 1, 1, 5, 5));
  }
  SUBCASE("small components are dropped") {
    cfg.min_voxels = 8;
    const auto v = bits_with(Dims{1, 4, 4}, {{0, 0, 0}, {0, 0, 1}, {0, 0, 2}});
    CHECK(components_to_tubelets(label_components(v, Connectivity::kFull), ClipRef{"v", 0, 0},
                                 cfg, 1)
              .empty());
  }
  SUBCASE("thin components are dropped by frame area") {
    cfg.min_frame_area = 4;
    const auto v = bits_with(Dims{3, 4, 4}, {{0, 1, 1}, {1, 1, 1}, {2, 1, 1}});
    CHECK(components_to_tubelets(label_components(v, Connectivity::kFull), ClipRef{"v", 0, 0},
                                 cfg, 1)
              .empty());
  }
  SUBCASE("component ids count dropped components too") {
    cfg.min_voxels = 2;
    cfg.min_frame_area = 1;
    const auto v = bits_with(Dims{1, 4, 6}, {{0, 0, 0}, {0, 3, 3}, {0, 3, 4}});
    const auto ts = components_to_tubelets(label_components(v, Connectivity::kFull),
                                           ClipRef{"cam", 7, 112}, cfg, 1);
    REQUIRE(ts.size() == 1);
    CHECK(ts[0].id() == "cam/7/1");
  }
}

TEST_CASE("extract") {
  const ExtractionConfig cfg;
  SUBCASE("empty mask") {
    CHECK(extract(MaskVolume::filled(Dims{16, 32, 32}, 0.0), ClipRef{"v", 0, 0}, cfg, 1).empty());
  }
  SUBCASE("blob spanning the clip") {
    const auto m = cube_mask(Dims{16, 32, 32}, 0, 15, 4, 10, 4, 10);
    const auto ts = extract(m, ClipRef{"v", 0, 0}, cfg, 1);
    REQUIRE(ts.size() == 1);
    CHECK(ts[0].length() == 16);
  }
  SUBCASE("two disjoint moving blobs") {
    const Dims d{16, 40, 60};
    std::vector<double> v(d.voxels(), 0.05);
    for (std::size_t t = 0; t < d.frames; ++t) {
      for (std::size_t y = 2; y < 10; ++y)
        for (std::size_t x = t; x < t + 8; ++x) v[d.index(t, y, x)] = 0.95;
      for (std::size_t y = 25; y < 35; ++y)
        for (std::size_t x = 50 - t; x < 58 - t; ++x) v[d.index(t, y, x)] = 0.95;
    }
    const auto ts = extract(MaskVolume(d, v), ClipRef{"v", 0, 0}, cfg, 1);
    REQUIRE(ts.size() == 2);
    for (std::size_t k = 1; k < 16; ++k) {
      CHECK(ts[0].boxes()[k].x1() == ts[0].boxes()[k - 1].x1() + 1);
      CHECK(ts[1].boxes()[k].x1() == ts[1].boxes()[k - 1].x1() - 1);
    }
  }
  SUBCASE("every foreground voxel sits inside its component's box") {
    std::mt19937_64 rng(8);
    ExtractionConfig loose;
    loose.min_voxels = 0;
    loose.min_frame_area = 0;
    const Dims d{5, 16, 16};
    for (int i = 0; i < 10; ++i) {
      const auto m = random_volume(d, rng);
      const auto b = binarize(m, 0.5);
      const auto l = label_components(b, Connectivity::kFull);
      const auto ts = components_to_tubelets(l, ClipRef{"v", 0, 0}, loose, 1);
      CHECK(ts.size() == static_cast<std::size_t>(l.count));
      for (std::size_t t = 0; t < d.frames; ++t)
        for (std::size_t y = 0; y < d.height; ++y)
          for (std::size_t x = 0; x < d.width; ++x) {
            const auto lab = l.labels[d.index(t, y, x)];
            CHECK((lab != 0) == (b.bits[d.index(t, y, x)] != 0));
            if (lab == 0) continue;
            const FrameBox& box = ts[static_cast<std::size_t>(lab - 1)].box_at(
                static_cast<FrameIndex>(t));
            CHECK(static_cast<int>(x) >= box.x1());
            CHECK(static_cast<int>(x) < box.x2());
            CHECK(static_cast<int>(y) >= box.y1());
            CHECK(static_cast<int>(y) < box.y2());
          }
    }
  }
}

TEST_CASE("ExtractionConfig validation") {
  ExtractionConfig cfg;
  cfg.threshold = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.threshold = 0.5;
  cfg.connectivity = static_cast<Connectivity>(18);
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
