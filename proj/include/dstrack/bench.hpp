#pragma once

// Tracker throughput on synthetic dense frames.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "dstrack/io.hpp"
#include "dstrack/scenario.hpp"
#include "dstrack/tracker.hpp"

namespace dstrack {

struct LatencyStats {
  double mean = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;
  double p99 = 0.0;
  double max = 0.0;
};

// Nearest-rank percentiles.
inline LatencyStats summarize_latency(std::vector<double> v) {
  LatencyStats s;
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  const auto rank = [&](double p) {
    const auto idx = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
    return v[std::clamp<std::size_t>(idx, 1, v.size()) - 1];
  };
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  s.p50 = rank(50);
  s.p90 = rank(90);
  s.p99 = rank(99);
  s.max = v.back();
  return s;
}

struct BenchReport {
  int boxes_per_frame = 0;
  int frames = 0;
  std::uint64_t seed = 0;
  double total_seconds = 0.0;
  double fps = 0.0;
  LatencyStats step_ms;
  LatencyStats association_ms;
};

// Workload: generate_scenario with k tracks, f frames, 0.5 px jitter;
// overlap avoidance is best effort for large k.
inline ScenarioConfig bench_scenario(int boxes, int frames, std::uint64_t seed) {
  ScenarioConfig sc(seed);
  sc.video_id = "bench";
  sc.n_tracks = boxes;
  sc.frames = frames;
  sc.max_speed = 1.0;
  sc.noise_sigma = 0.5;
  sc.angle_sigma = 0.01;
  sc.placement_attempts = 20;
  return sc;
}

inline BenchReport run_bench(int boxes, int frames, std::uint64_t seed, const TrackerConfig& cfg = {}) {
  const Scenario sc = generate_scenario(bench_scenario(boxes, frames, seed));
  Tracker tracker(cfg);
  std::vector<double> step_ms, assoc_ms;
  step_ms.reserve(sc.detections.size());
  assoc_ms.reserve(sc.detections.size());
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  for (const Frame& f : sc.detections) {
    const auto t0 = Clock::now();
    tracker.step(f.index, f.detections);
    const auto t1 = Clock::now();
    step_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    assoc_ms.push_back(tracker.last_timings().associate * 1e3);
  }
  BenchReport r;
  r.boxes_per_frame = boxes;
  r.frames = frames;
  r.seed = seed;
  r.total_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  r.fps = r.total_seconds > 0.0 ? static_cast<double>(frames) / r.total_seconds : 0.0;
  r.step_ms = summarize_latency(std::move(step_ms));
  r.association_ms = summarize_latency(std::move(assoc_ms));
  return r;
}

inline std::string format_bench(const BenchReport& r) {
  const auto stats = [](const LatencyStats& s) {
    return "{\"max\": " + format_fixed(s.max, 4) + ", \"mean\": " + format_fixed(s.mean, 4) +
           ", \"p50\": " + format_fixed(s.p50, 4) + ", \"p90\": " + format_fixed(s.p90, 4) +
           ", \"p99\": " + format_fixed(s.p99, 4) + "}";
  };
  std::string out = "{\n";
  out += "  \"association_ms\": " + stats(r.association_ms) + ",\n";
  out += "  \"boxes_per_frame\": " + std::to_string(r.boxes_per_frame) + ",\n";
  out += "  \"fps\": " + format_fixed(r.fps, 2) + ",\n";
  out += "  \"frames\": " + std::to_string(r.frames) + ",\n";
  out += "  \"latency_ms\": " + stats(r.step_ms) + ",\n";
  out += "  \"seed\": " + std::to_string(r.seed) + ",\n";
  out += "  \"total_seconds\": " + format_fixed(r.total_seconds, 6) + "\n";
  out += "}\n";
  return out;
}

}  // namespace dstrack
