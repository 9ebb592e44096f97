#pragma once

// Builders shared by the unit tests and the acceptance run.

#include <algorithm>
#include <deque>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "actdet/extract.hpp"
#include "actdet/geometry.hpp"
#include "actdet/loss.hpp"

namespace actdet::testing {

/// Tube on frames [start, start + n) with one fixed box and one fixed score vector.
inline Tube still_tube(const std::string& id, FrameIndex start, FrameIndex n, int x1, int y1,
                       int x2, int y2, std::vector<double> scores = {1.0, 0.0},
                       const std::string& video = "v") {
  std::vector<FrameBox> boxes;
  std::vector<ScoreVector> sv;
  for (FrameIndex f = start; f < start + n; ++f) {
    boxes.emplace_back(f, x1, y1, x2, y2);
    sv.emplace_back(scores);
  }
  return Tube(id, video, std::move(boxes), std::move(sv));
}

/// Single-class tube with a fixed box and the given per-frame class-1 scores.
inline Tube scored_tube(const std::vector<double>& class1, FrameIndex start = 0,
                        const std::string& video = "v") {
  std::vector<FrameBox> boxes;
  std::vector<ScoreVector> sv;
  for (std::size_t k = 0; k < class1.size(); ++k) {
    boxes.emplace_back(start + static_cast<FrameIndex>(k), 0, 0, 10, 10);
    sv.emplace_back(std::vector<double>{1.0 - class1[k], class1[k]});
  }
  return Tube("t", video, std::move(boxes), std::move(sv));
}

inline MaskVolume random_volume(Dims d, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(d.voxels());
  for (double& x : v) x = u(rng);
  return MaskVolume(d, std::move(v));
}

inline MaskVolume random_binary(Dims d, std::mt19937_64& rng, double density = 0.5) {
  std::bernoulli_distribution b(density);
  std::vector<double> v(d.voxels());
  for (double& x : v) x = b(rng) ? 1.0 : 0.0;
  return MaskVolume(d, std::move(v));
}

/// Breadth-first flood fill; labels 1..n, 0 for background.
inline std::vector<std::int32_t> flood_fill(const BinaryVolume& v, Connectivity conn) {
  const Dims& d = v.dims;
  std::vector<std::int32_t> label(d.voxels(), 0);
  std::int32_t next = 0;
  const bool full = conn == Connectivity::kFull;
  for (std::size_t seed = 0; seed < label.size(); ++seed) {
    if (!v.bits[seed] || label[seed] != 0) continue;
    label[seed] = ++next;
    std::deque<std::size_t> queue{seed};
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      const auto t = static_cast<long>(i / (d.height * d.width));
      const auto y = static_cast<long>(i / d.width % d.height);
      const auto x = static_cast<long>(i % d.width);
      for (long dt = -1; dt <= 1; ++dt)
        for (long dy = -1; dy <= 1; ++dy)
          for (long dx = -1; dx <= 1; ++dx) {
            const long steps = std::labs(dt) + std::labs(dy) + std::labs(dx);
            if (steps == 0 || (!full && steps != 1)) continue;
            const long nt = t + dt, ny = y + dy, nx = x + dx;
            if (nt < 0 || ny < 0 || nx < 0 || nt >= static_cast<long>(d.frames) ||
                ny >= static_cast<long>(d.height) || nx >= static_cast<long>(d.width)) {
              continue;
            }
            const std::size_t j = d.index(static_cast<std::size_t>(nt), static_cast<std::size_t>(ny),
                                          static_cast<std::size_t>(nx));
            if (v.bits[j] && label[j] == 0) {
              label[j] = next;
              queue.push_back(j);
            }
          }
    }
  }
  return label;
}

/// True when the two labelings induce the same partition of the voxels.
inline bool same_partition(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b) {
  if (a.size() != b.size()) return false;
  std::map<std::int32_t, std::int32_t> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] == 0) != (b[i] == 0)) return false;
    if (a[i] == 0) continue;
    const auto [it1, new1] = ab.emplace(a[i], b[i]);
    const auto [it2, new2] = ba.emplace(b[i], a[i]);
    if (it1->second != b[i] || it2->second != a[i]) return false;
  }
  return true;
}

inline BinaryVolume random_bits(Dims d, std::mt19937_64& rng, double density) {
  std::bernoulli_distribution b(density);
  BinaryVolume v{d, std::vector<std::uint8_t>(d.voxels())};
  for (auto& x : v.bits) x = b(rng) ? 1 : 0;
  return v;
}

/// Clip-aligned tubelets of up to `lanes` actors in separate horizontal
/// lanes. An actor that vanishes for a clip comes back out of linking range,
/// so every tubelet links at most its predecessor in the same lane.
inline std::vector<Tube> chain_stream(std::mt19937_64& rng, int clips, int lanes,
                                      FrameIndex clip_length = 16) {
  std::vector<Tube> out;
  std::vector<int> x(static_cast<std::size_t>(lanes), -1);
  std::bernoulli_distribution die(0.15), revive(0.4);
  std::uniform_int_distribution<int> start_x(0, 80), step(-1, 1);
  for (int k = 0; k < clips; ++k) {
    for (int l = 0; l < lanes; ++l) {
      int& pos = x[static_cast<std::size_t>(l)];
      if (pos >= 0 && die(rng)) {
        pos = -2;  // gone for at least one clip
        continue;
      }
      if (pos == -2) {
        pos = -1;
        continue;
      }
      if (pos == -1) {
        if (!revive(rng)) continue;
        pos = start_x(rng);
      }
      std::vector<FrameBox> boxes;
      std::vector<ScoreVector> scores;
      for (FrameIndex t = 0; t < clip_length; ++t) {
        pos = std::clamp(pos + step(rng), 0, 90);
        boxes.emplace_back(k * clip_length + t, pos, l * 20, pos + 10, l * 20 + 12);
        scores.emplace_back(std::vector<double>{0.5, 0.5});
      }
      out.emplace_back("v/" + std::to_string(k) + "/" + std::to_string(l), "v", std::move(boxes),
                       std::move(scores));
    }
  }
  return out;
}

/// Span and sorted boxes of a tube, for comparisons that ignore ids and scores.
struct TubeShape {
  FrameIndex start;
  FrameIndex end;
  std::vector<FrameBox> boxes;
  friend auto operator<=>(const TubeShape&, const TubeShape&) = default;
};

inline std::vector<TubeShape> shapes(const std::vector<Tube>& tubes) {
  std::vector<TubeShape> out;
  for (const Tube& t : tubes) {
    TubeShape s{t.start_frame(), t.end_frame(), t.boxes()};
    std::sort(s.boxes.begin(), s.boxes.end());
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Offline grouping: connect every pair of tubelets from different clips whose
/// link score passes, then take connected components.
inline std::vector<TubeShape> offline_groups(const std::vector<Tube>& tubelets, double threshold,
                                             FrameIndex gap_tolerance) {
  const std::size_t n = tubelets.size();
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (tubelets[i].start_frame() >= tubelets[j].start_frame()) continue;
      const double s = tube_link_score(tubelets[i], tubelets[j], gap_tolerance);
      if (s > 0.0 && s >= threshold) parent[find(j)] = find(i);
    }
  std::map<std::size_t, TubeShape> groups;
  for (std::size_t i = 0; i < n; ++i) {
    const Tube& t = tubelets[i];
    auto [it, fresh] = groups.try_emplace(find(i), TubeShape{t.start_frame(), t.end_frame(), {}});
    TubeShape& g = it->second;
    g.start = std::min(g.start, t.start_frame());
    g.end = std::max(g.end, t.end_frame());
    g.boxes.insert(g.boxes.end(), t.boxes().begin(), t.boxes().end());
  }
  std::vector<TubeShape> out;
  for (auto& [root, g] : groups) {
    std::sort(g.boxes.begin(), g.boxes.end());
    out.push_back(std::move(g));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace actdet::testing
