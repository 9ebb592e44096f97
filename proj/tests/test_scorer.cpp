#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "actdet/scorer.hpp"

using namespace actdet;

namespace {

ActionInstance det(FrameIndex s, FrameIndex e, double conf, int cls = 1,
                   const std::string& video = "v") {
  return ActionInstance{video, cls, s, e, {}, conf};
}

GroundTruthInstance ref(FrameIndex s, FrameIndex e, int cls = 1, const std::string& video = "v") {
  return GroundTruthInstance{video, cls, s, e, {}};
}

DetCurve curve_of(std::vector<std::pair<double, double>> pts) {
  DetCurve c;
  for (auto [fa, pm] : pts) c.points.push_back({fa, pm, 0.0});
  return c;
}

}  // namespace

TEST_CASE("align") {
  const AlignOptions opts;
  SUBCASE("identical detections") {
    const std::vector<GroundTruthInstance> g{ref(0, 99), ref(200, 299)};
    const std::vector<ActionInstance> d{det(0, 99, 0.9), det(200, 299, 0.8)};
    const auto a = align(d, g, opts);
    CHECK(a.matches.size() == 2);
    CHECK(a.misses.empty());
    CHECK(a.false_alarms.empty());
  }
  SUBCASE("no detections") {
    const std::vector<GroundTruthInstance> g{ref(0, 99), ref(200, 299)};
    const auto a = align({}, g, opts);
    CHECK(a.misses == std::vector<std::size_t>{0, 1});
  }
  SUBCASE("two detections compete for one reference") {
    const std::vector<GroundTruthInstance> g{ref(0, 99)};
    const std::vector<ActionInstance> d{det(0, 99, 0.4), det(10, 90, 0.7)};
    const auto a = align(d, g, opts);
    REQUIRE(a.matches.size() == 1);
    CHECK(a.matches[0].first == 1);
    CHECK(a.false_alarms == std::vector<std::size_t>{0});
  }
  SUBCASE("class, video and overlap must agree") {
    const std::vector<GroundTruthInstance> g{ref(0, 99)};
    const std::vector<ActionInstance> d{det(0, 99, 0.9, 2), det(0, 99, 0.9, 1, "w"),
                                        det(90, 500, 0.9)};
    const auto a = align(d, g, opts);
    CHECK(a.matches.empty());
    CHECK(a.false_alarms.size() == 3);
  }
  SUBCASE("spatial check uses reference boxes") {
    GroundTruthInstance g = ref(0, 1);
    g.boxes = {FrameBox(0, 0, 0, 10, 10), FrameBox(1, 0, 0, 10, 10)};
    ActionInstance far = det(0, 1, 0.9);
    far.boxes = {FrameBox(0, 50, 50, 60, 60), FrameBox(1, 50, 50, 60, 60)};
    AlignOptions sp;
    sp.spatial = true;
    CHECK(align(std::vector{far}, std::vector{g}, sp).matches.empty());
    CHECK(align(std::vector{far}, std::vector{g}, opts).matches.size() == 1);
  }
}

TEST_CASE("det_curve") {
  ScoringConfig cfg;
  SUBCASE("perfect detections reach (0, 0)") {
    const std::vector<GroundTruthInstance> g{ref(0, 99), ref(200, 299)};
    const std::vector<ActionInstance> d{det(0, 99, 0.9), det(200, 299, 0.8)};
    for (auto axis : {FaAxis::kRate, FaAxis::kTime}) {
      const auto c = det_curve(d, g, axis, cfg);
      CHECK(c.points.front().fa == 0.0);
      CHECK(c.points.front().pmiss == 1.0);
      CHECK(c.points.back().fa == 0.0);
      CHECK(c.points.back().pmiss == 0.0);
    }
  }
  SUBCASE("one minute of false alarm in ten free minutes") {
    cfg.video_frames["v"] = 11 * 60 * 30;
    const std::vector<GroundTruthInstance> g{ref(0, 1799)};
    const std::vector<ActionInstance> d{det(1800, 3599, 0.6)};
    const auto c = det_curve(d, g, FaAxis::kTime, cfg);
    REQUIRE(c.points.size() == 2);
    CHECK(c.points[1].fa == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(c.points[1].pmiss == 1.0);
    const auto r = det_curve(d, g, FaAxis::kRate, cfg);
    CHECK(r.points[1].fa == doctest::Approx(1.0 / 11.0).epsilon(1e-12));
  }
  SUBCASE("overlapping false alarms are counted once on the time axis") {
    cfg.video_frames["v"] = 1000;
    const std::vector<GroundTruthInstance> g{ref(0, 99)};
    const std::vector<ActionInstance> d{det(200, 299, 0.9), det(250, 349, 0.8)};
    const auto c = det_curve(d, g, FaAxis::kTime, cfg);
    CHECK(c.points.back().fa == doctest::Approx(150.0 / 900.0));
  }
  SUBCASE("equal confidences make one point") {
    const std::vector<GroundTruthInstance> g{ref(0, 99), ref(200, 299)};
    const std::vector<ActionInstance> d{det(0, 99, 0.5), det(200, 299, 0.5)};
    CHECK(det_curve(d, g, FaAxis::kRate, cfg).points.size() == 2);
  }
  SUBCASE("no references") {
    CHECK_THROWS_AS(det_curve(std::vector{det(0, 9, 0.5)}, {}, FaAxis::kRate, cfg),
                    std::invalid_argument);
  }
}

TEST_CASE("pmiss_at_fa") {
  CHECK(pmiss_at_fa(curve_of({{0, 0.4}, {0.5, 0.4}}), 0.15) == 0.4);
  CHECK(pmiss_at_fa(curve_of({{0, 1}, {0.1, 0.5}, {0.3, 0.2}}), 0.15) == 0.5);
  CHECK(pmiss_at_fa(curve_of({{0.2, 0.3}}), 0.1) == 1.0);
  CHECK(pmiss_at_fa(curve_of({{0, 1}, {0.1, 0.5}, {0.3, 0.2}}), 0.3) == 0.2);
}

TEST_CASE("audc") {
  CHECK(audc(curve_of({{0, 0.4}}), 0.2) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(audc(curve_of({{0, 1}, {0.1, 0}}), 0.2) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(audc(curve_of({{0, 1}, {0.1, 0.5}, {0.3, 0.2}}), 0.2) - 0.75) <= 1e-12);
  CHECK(audc(curve_of({{0, 1}}), 0.2) == 1.0);
  CHECK(audc(curve_of({{0, 1}, {0, 0}}), 0.2) == 0.0);
  CHECK_THROWS_AS(audc(curve_of({{0, 1}}), 0.0), std::invalid_argument);
}

TEST_CASE("per_class_report") {
  const ScoringConfig cfg;
  SUBCASE("perfect and empty") {
    const std::vector<GroundTruthInstance> g{ref(0, 99), ref(200, 299, 2)};
    const std::vector<ActionInstance> d{det(0, 99, 0.9), det(200, 299, 0.8, 2)};
    const auto perfect = per_class_report(d, g, cfg);
    CHECK(perfect.classes.size() == 2);
    CHECK(perfect.mean_n_audc_rate == 0.0);
    CHECK(perfect.mean_n_audc_time == 0.0);
    CHECK(perfect.mean_pmiss_at_rate_fa.at(0.15) == 0.0);
    const auto none = per_class_report({}, g, cfg);
    CHECK(none.mean_n_audc_rate == 1.0);
    CHECK(none.mean_n_audc_time == 1.0);
    CHECK(none.mean_pmiss_at_time_fa.at(0.04) == 1.0);
  }
  SUBCASE("single class equals the global metrics") {
    const std::vector<GroundTruthInstance> g{ref(0, 99), ref(300, 399)};
    const std::vector<ActionInstance> d{det(0, 99, 0.9), det(150, 200, 0.8)};
    const auto r = per_class_report(d, g, cfg);
    REQUIRE(r.classes.size() == 1);
    CHECK(r.mean_n_audc_rate == audc(det_curve(d, g, FaAxis::kRate, cfg), cfg.rate_fa_limit));
  }
  SUBCASE("classes without references are not averaged") {
    const std::vector<GroundTruthInstance> g{ref(0, 99)};
    const std::vector<ActionInstance> d{det(0, 99, 0.9), det(0, 99, 0.9, 3)};
    const auto r = per_class_report(d, g, cfg);
    REQUIRE(r.classes.size() == 1);
    CHECK(r.classes[0].class_id == 1);
  }
}

TEST_CASE("DET curves are monotone and invariant to monotone confidence maps") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<FrameIndex> start(0, 900), len(10, 100);
  std::uniform_real_distribution<double> conf(0.0, 1.0);
  ScoringConfig cfg;
  cfg.video_frames["v"] = 1000;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<GroundTruthInstance> g;
    std::vector<ActionInstance> d;
    for (int i = 0; i < 5; ++i) {
      const FrameIndex s = start(rng);
      g.push_back(ref(s, s + len(rng)));
    }
    for (int i = 0; i < 12; ++i) {
      const FrameIndex s = start(rng);
      d.push_back(det(s, s + len(rng), std::round(conf(rng) * 10) / 10));
    }
    auto squashed = d;
    for (auto& x : squashed) x.confidence = x.confidence * x.confidence / 2;
    for (auto axis : {FaAxis::kRate, FaAxis::kTime}) {
      const auto c = det_curve(d, g, axis, cfg);
      for (std::size_t k = 1; k < c.points.size(); ++k) {
        CHECK(c.points[k].fa >= c.points[k - 1].fa);
        CHECK(c.points[k].pmiss <= c.points[k - 1].pmiss);
      }
      const auto s = det_curve(squashed, g, axis, cfg);
      REQUIRE(s.points.size() == c.points.size());
      for (std::size_t k = 0; k < c.points.size(); ++k) {
        CHECK(s.points[k].fa == c.points[k].fa);
        CHECK(s.points[k].pmiss == c.points[k].pmiss);
      }
      const double a = audc(c, 0.2);
      CHECK((a >= 0.0 && a <= 1.0));
    }
  }
}
