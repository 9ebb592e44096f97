#include <doctest.h>

#include <random>
#include <set>

#include "actdet/geometry.hpp"
#include "support.hpp"

using namespace actdet;
using actdet::testing::still_tube;

TEST_CASE("FrameBox rejects degenerate or negative boxes") {
  CHECK_THROWS_AS(FrameBox(0, 2, 0, 2, 5), std::invalid_argument);
  CHECK_THROWS_AS(FrameBox(0, 0, 3, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(FrameBox(-1, 0, 0, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(FrameBox(0, -1, 0, 1, 1), std::invalid_argument);
  const FrameBox b(3, 1, 2, 4, 6);
  CHECK(b.area() == 12);
  CHECK(b.fits(4, 6));
  CHECK_FALSE(b.fits(3, 6));
  CHECK(b.on_frame(7).frame() == 7);
}

TEST_CASE("ScoreVector bounds") {
  CHECK_THROWS_AS(ScoreVector({0.5}), std::invalid_argument);
  CHECK_THROWS_AS(ScoreVector({0.5, 1.5}), std::invalid_argument);
  CHECK_THROWS_AS(ScoreVector({-0.1, 0.5}), std::invalid_argument);
  const ScoreVector z = ScoreVector::zeros(3);
  CHECK(z.size() == 4);
  CHECK(z.num_classes() == 3);
}

TEST_CASE("Tube needs consecutive frames and matching scores") {
  std::vector<FrameBox> boxes{{0, 0, 0, 1, 1}, {2, 0, 0, 1, 1}};
  std::vector<ScoreVector> s(2, ScoreVector::zeros(1));
  CHECK_THROWS_AS(Tube("t", "v", boxes, s), std::invalid_argument);
  boxes[1] = FrameBox(1, 0, 0, 1, 1);
  CHECK_NOTHROW(Tube("t", "v", boxes, s));
  CHECK_THROWS_AS(Tube("t", "v", boxes, {ScoreVector::zeros(1)}), std::invalid_argument);
  CHECK_THROWS_AS(Tube("t", "v", boxes, {ScoreVector::zeros(1), ScoreVector::zeros(2)}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Tube("t", "v", {}, {}), std::invalid_argument);
  const Tube t("t", "v", boxes, s);
  CHECK_THROWS_AS((void)t.box_at(2), std::out_of_range);
}

TEST_CASE("box_iou") {
  const FrameBox a(0, 0, 0, 2, 2);
  CHECK(box_iou(a, a) == 1.0);
  CHECK(box_iou(a, FrameBox(0, 5, 5, 6, 6)) == 0.0);
  CHECK(box_iou(a, FrameBox(0, 1, 1, 3, 3)) == doctest::Approx(1.0 / 7.0).epsilon(1e-15));
  CHECK(box_iou(a, FrameBox(0, 2, 0, 4, 2)) == 0.0);  // edges touch, no shared pixel
}

TEST_CASE("box_iou is symmetric, bounded, 1 only for identical boxes") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> c(0, 12);
  for (int i = 0; i < 2000; ++i) {
    const int ax = c(rng), ay = c(rng), bx = c(rng), by = c(rng);
    const FrameBox a(0, ax, ay, ax + 1 + c(rng), ay + 1 + c(rng));
    const FrameBox b(0, bx, by, bx + 1 + c(rng), by + 1 + c(rng));
    const double ab = box_iou(a, b);
    CHECK(ab == box_iou(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK((ab == 1.0) == (a == b));
  }
}

TEST_CASE("temporal_intersection") {
  const Tube a = still_tube("a", 0, 16, 0, 0, 4, 4);
  CHECK(temporal_intersection(a, still_tube("b", 16, 16, 0, 0, 4, 4)) == 0);
  CHECK(temporal_intersection(a, still_tube("b", 10, 16, 0, 0, 4, 4)) == 6);
  CHECK(temporal_intersection(a, a) == 16);
}

TEST_CASE("temporal_intersection matches brute-force set intersection") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<FrameIndex> start(0, 40);
  std::uniform_int_distribution<FrameIndex> len(1, 20);
  for (int i = 0; i < 1000; ++i) {
    const Tube a = still_tube("a", start(rng), len(rng), 0, 0, 2, 2);
    const Tube b = still_tube("b", start(rng), len(rng), 0, 0, 2, 2);
    std::set<FrameIndex> fa;
    std::size_t shared = 0;
    for (const auto& box : a.boxes()) fa.insert(box.frame());
    for (const auto& box : b.boxes()) shared += fa.count(box.frame());
    CHECK(temporal_intersection(a, b) == static_cast<FrameIndex>(shared));
    CHECK(temporal_intersection(a, b) == temporal_intersection(b, a));
  }
}

TEST_CASE("tube_link_score") {
  SUBCASE("shared frames with identical boxes") {
    const Tube p = still_tube("p", 0, 16, 0, 0, 10, 10);
    const Tube c = still_tube("c", 8, 16, 0, 0, 10, 10);
    CHECK(tube_link_score(p, c, 16) == 1.0);
  }
  SUBCASE("gap beyond the horizon") {
    const Tube p = still_tube("p", 0, 16, 0, 0, 10, 10);
    CHECK(tube_link_score(p, still_tube("c", 15 + 5, 4, 0, 0, 10, 10), 5) == 1.0);
    CHECK(tube_link_score(p, still_tube("c", 15 + 5, 4, 0, 0, 10, 10), 4) == 0.0);
  }
  SUBCASE("boundary boxes across a one-frame step") {
    const Tube p = still_tube("p", 0, 16, 0, 0, 10, 10);
    const Tube c = still_tube("c", 16, 16, 5, 0, 15, 10);
    CHECK(tube_link_score(p, c, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("mean over shared frames versus volumetric") {
    std::vector<FrameBox> pb{{0, 0, 0, 10, 10}, {1, 0, 0, 10, 10}};
    std::vector<FrameBox> cb{{0, 0, 0, 10, 10}, {1, 0, 0, 2, 2}};
    std::vector<ScoreVector> s(2, ScoreVector::zeros(1));
    const Tube p("p", "v", pb, s);
    const Tube c("c", "v", cb, s);
    CHECK(tube_link_score(p, c, 16) == doctest::Approx((1.0 + 0.04) / 2.0));
    CHECK(tube_link_score(p, c, 16, LinkMode::kVolumetric) ==
          doctest::Approx((100.0 + 4.0) / 200.0));
  }
  SUBCASE("zero whenever no overlap and the gap exceeds the horizon") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<FrameIndex> gap(1, 40);
    for (int i = 0; i < 200; ++i) {
      const FrameIndex g = gap(rng);
      const Tube p = still_tube("p", 0, 8, 0, 0, 10, 10);
      const Tube c = still_tube("c", 7 + g, 8, 0, 0, 10, 10);
      const FrameIndex tol = gap(rng);
      CHECK((tube_link_score(p, c, tol) == 0.0) == (g > tol));
    }
  }
}

TEST_CASE("interpolate_box") {
  const FrameBox a(0, 0, 0, 4, 4);
  const FrameBox b(2, 2, 4, 8, 8);
  CHECK(interpolate_box(a, b, 1) == FrameBox(1, 1, 2, 6, 6));
  CHECK(interpolate_box(a, b, 0) == a);
  CHECK(interpolate_box(a, b, 2) == b);
}

TEST_CASE("temporal_iou of inclusive spans") {
  CHECK(temporal_iou(0, 9, 0, 9) == 1.0);
  CHECK(temporal_iou(0, 9, 10, 19) == 0.0);
  CHECK(temporal_iou(0, 9, 5, 14) == doctest::Approx(5.0 / 15.0));
}
