#pragma once

// Seeded synthetic scenes: constant-velocity rotated text boxes with detector
// noise, misses and false positives.
//
// Random stream: xoshiro256** (Blackman & Vigna) with its four state words
// drawn from SplitMix64(seed). uniform() = (next() >> 11) * 2^-53, normal()
// is Box-Muller on (1 - uniform(), uniform()), poisson() is Knuth's product
// method. The draw order is fixed and documented in README.md.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dstrack/error.hpp"
#include "dstrack/geometry.hpp"
#include "dstrack/metrics.hpp"
#include "dstrack/tracker.hpp"

namespace dstrack {

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : s_(seed) {}
  constexpr std::uint64_t next() {
    std::uint64_t z = (s_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t s_;
};

class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next(); }

  result_type next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal(double mean = 0.0, double sigma = 1.0) {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return mean + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  std::int64_t poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    const double limit = std::exp(-lambda);
    std::int64_t k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> s_{};
};

struct ScenarioConfig {
  explicit ScenarioConfig(std::uint64_t rng_seed) : seed(rng_seed) {}

  std::string video_id = "synth";
  int n_tracks = 10;
  int frames = 100;
  double image_width = 1920.0;
  double image_height = 1080.0;
  double min_width = 20.0, max_width = 60.0;
  double min_height = 10.0, max_height = 20.0;
  double max_speed = 2.0;     // per velocity component, px/frame
  double max_rotation = 0.3;  // |theta| bound, rad
  double noise_sigma = 0.0;   // center and side jitter, px
  double angle_sigma = 0.0;   // angle jitter, rad
  double drop_prob = 0.0;
  double fp_rate = 0.0;  // expected false positives per frame
  bool avoid_overlap = true;
  int placement_attempts = 100;
  std::uint64_t seed;

  void validate() const {
    const auto fail = [](const std::string& what) { throw Error("scenario." + what); };
    if (n_tracks < 0) fail("n_tracks must be >= 0");
    if (frames < 0) fail("frames must be >= 0");
    if (!(image_width > 0.0 && image_height > 0.0)) fail("image size must be positive");
    if (!(min_width > 0.0 && min_width <= max_width)) fail("width range must satisfy 0 < min_width <= max_width");
    if (!(min_height > 0.0 && min_height <= max_height)) fail("height range must satisfy 0 < min_height <= max_height");
    if (!(max_speed >= 0.0)) fail("max_speed must be >= 0");
    if (!(max_rotation >= 0.0 && max_rotation < kHalfPi)) fail("max_rotation must be in [0, pi/2)");
    if (!(noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
    if (!(angle_sigma >= 0.0)) fail("angle_sigma must be >= 0");
    if (!(drop_prob >= 0.0 && drop_prob <= 1.0)) fail("drop_prob must be in [0, 1]");
    if (!(fp_rate >= 0.0)) fail("fp_rate must be >= 0");
    if (placement_attempts < 1) fail("placement_attempts must be >= 1");
  }
};

struct Scenario {
  std::vector<Frame> detections;  // one entry per frame, 0..frames-1
  GroundTruth ground_truth;
  std::int64_t dropped = 0;
  std::int64_t false_positives = 0;
};

namespace detail {

struct LinearTrack {
  RotatedBox start;
  double vx = 0.0;
  double vy = 0.0;

  RotatedBox at(int t) const {
    RotatedBox b = start;
    b.cx += vx * t;
    b.cy += vy * t;
    return b;
  }
};

inline bool aabbs_overlap(const Aabb& a, const Aabb& b) {
  return a.x0 < b.x1 && b.x0 < a.x1 && a.y0 < b.y1 && b.y0 < a.y1;
}

inline bool tracks_collide(const LinearTrack& a, const LinearTrack& b, int frames) {
  for (int t = 0; t < frames; ++t)
    if (aabbs_overlap(bounding_aabb(a.at(t)), bounding_aabb(b.at(t)))) return true;
  return false;
}

// Uniform start coordinate keeping the whole path within [margin, extent - margin].
inline double place_axis(Xoshiro256& rng, double& v, double extent, double margin, int frames) {
  const double travel = v * std::max(frames - 1, 0);
  double lo = std::max(margin, margin - travel);
  double hi = std::min(extent - margin, extent - margin - travel);
  if (lo > hi) {
    v = 0.0;
    lo = margin;
    hi = std::max(margin, extent - margin);
  }
  return rng.uniform(lo, hi);
}

}  // namespace detail

// Draw order: per track (placement attempts: w, h, theta, vx, vy, cx, cy),
// then per frame: per track (drop draw; if kept: 5 normals for cx, cy, w, h,
// theta, then score), then the false-positive count and per false positive
// (w, h, cx, cy, theta, score).
inline Scenario generate_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Xoshiro256 rng(cfg.seed);
  std::vector<detail::LinearTrack> tracks;
  tracks.reserve(static_cast<std::size_t>(cfg.n_tracks));
  for (int k = 0; k < cfg.n_tracks; ++k) {
    detail::LinearTrack cand;
    for (int attempt = 0; attempt < cfg.placement_attempts; ++attempt) {
      const double w = rng.uniform(cfg.min_width, cfg.max_width);
      const double h = rng.uniform(cfg.min_height, cfg.max_height);
      const double theta = rng.uniform(-cfg.max_rotation, cfg.max_rotation);
      double vx = rng.uniform(-cfg.max_speed, cfg.max_speed);
      double vy = rng.uniform(-cfg.max_speed, cfg.max_speed);
      const double margin = 0.5 * std::hypot(w, h) + 1.0;
      const double cx = detail::place_axis(rng, vx, cfg.image_width, margin, cfg.frames);
      const double cy = detail::place_axis(rng, vy, cfg.image_height, margin, cfg.frames);
      cand = {canonicalize({cx, cy, w, h, theta}), vx, vy};
      if (!cfg.avoid_overlap) break;
      const bool clash = std::any_of(tracks.begin(), tracks.end(), [&](const detail::LinearTrack& o) {
        return detail::tracks_collide(cand, o, cfg.frames);
      });
      if (!clash) break;
    }
    tracks.push_back(cand);
  }

  Scenario out;
  out.ground_truth.video_id = cfg.video_id;
  out.detections.reserve(static_cast<std::size_t>(cfg.frames));
  for (int t = 0; t < cfg.frames; ++t) {
    Frame frame;
    frame.index = t;
    auto& gt_objs = out.ground_truth.frames[t];
    for (std::size_t k = 0; k < tracks.size(); ++k) {
      const RotatedBox truth = tracks[k].at(t);
      gt_objs.push_back({static_cast<TraceId>(k + 1), rotated_box_to_quad(truth), std::nullopt});
      if (rng.uniform() < cfg.drop_prob) {
        ++out.dropped;
        continue;
      }
      RotatedBox noisy = truth;
      noisy.cx += rng.normal(0.0, cfg.noise_sigma);
      noisy.cy += rng.normal(0.0, cfg.noise_sigma);
      noisy.w = std::max(1.0, noisy.w + rng.normal(0.0, cfg.noise_sigma));
      noisy.h = std::max(1.0, noisy.h + rng.normal(0.0, cfg.noise_sigma));
      noisy.theta += rng.normal(0.0, cfg.angle_sigma);
      const double score = rng.uniform(0.6, 1.0);
      frame.detections.push_back({t, canonicalize(noisy), score});
    }
    const std::int64_t n_fp = rng.poisson(cfg.fp_rate);
    for (std::int64_t i = 0; i < n_fp; ++i) {
      const double w = rng.uniform(cfg.min_width, cfg.max_width);
      const double h = rng.uniform(cfg.min_height, cfg.max_height);
      const double cx = rng.uniform(0.0, cfg.image_width);
      const double cy = rng.uniform(0.0, cfg.image_height);
      const double theta = rng.uniform(-cfg.max_rotation, cfg.max_rotation);
      const double score = rng.uniform(0.2, 0.6);
      frame.detections.push_back({t, canonicalize({cx, cy, w, h, theta}), score});
      ++out.false_positives;
    }
    out.detections.push_back(std::move(frame));
  }
  return out;
}

}  // namespace dstrack
