#pragma once

// SORT-style tracker over rotated boxes.
//
// Per frame: score filter + canonical sort + rotated NMS, predict every live
// track, associate on 1 - IoU, update matches, birth tracks for unmatched
// detections, age and cull unmatched tracks, emit confirmed matched tracks.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "dstrack/assignment.hpp"
#include "dstrack/error.hpp"
#include "dstrack/filter.hpp"
#include "dstrack/geometry.hpp"

namespace dstrack {

using FrameIndex = std::int64_t;
using TraceId = std::int64_t;

struct Detection {
  FrameIndex frame = 0;
  RotatedBox box;
  double score = 1.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// Detections for a single frame.
struct Frame {
  FrameIndex index = 0;
  std::vector<Detection> detections;
};

struct TrackerConfig {
  double iou_gate = 0.3;
  int max_age = 3;
  int min_hits = 2;
  double score_threshold = 0.1;
  double nms_iou = 0.5;
  bool emit_raw = false;
  bool premask_gate = false;
  IouMode iou_mode = IouMode::kRotated;
  FilterConfig filter;

  // Throws Error naming the offending field.
  void validate() const {
    const auto unit = [](const char* name, double v) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error(std::string("tracker.") + name + " must be in [0, 1]");
    };
    unit("iou_gate", iou_gate);
    unit("score_threshold", score_threshold);
    unit("nms_iou", nms_iou);
    if (max_age < 0) throw Error("tracker.max_age must be >= 0");
    if (min_hits < 0) throw Error("tracker.min_hits must be >= 0");
  }
};

struct HistoryEntry {
  FrameIndex frame = 0;
  RotatedBox box;
  double score = 0.0;
};

struct Track {
  TraceId trace_id = 0;
  KalmanState state;
  int hits = 0;  // consecutive matched frames, birth included
  int age = 0;   // frames since birth
  int time_since_update = 0;
  bool born_this_frame = false;
  std::vector<HistoryEntry> history;

  RotatedBox box() const { return state_to_box(state); }
};

struct Emission {
  TraceId trace_id = 0;
  RotatedBox box;
  double score = 0.0;
};

struct TrackedObject {
  TraceId trace_id = 0;
  Quad quad;
  double score = 0.0;

  friend bool operator==(const TrackedObject&, const TrackedObject&) = default;
};

// Confirmed tracks of one video, keyed by frame.
struct TrackSet {
  std::string video_id;
  std::map<FrameIndex, std::vector<TrackedObject>> frames;

  friend bool operator==(const TrackSet&, const TrackSet&) = default;
};

// Canonical detection order: score descending, then canonical quad order.
inline void canonical_sort(std::vector<Detection>& dets) {
  std::vector<std::pair<Quad, std::size_t>> keys;
  keys.reserve(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) keys.emplace_back(rotated_box_to_quad(dets[i].box), i);
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return keys[a].first < keys[b].first;
  });
  std::vector<Detection> sorted;
  sorted.reserve(dets.size());
  for (const std::size_t i : order) sorted.push_back(dets[i]);
  dets = std::move(sorted);
}

inline std::vector<std::size_t> rotated_nms(std::span<const Detection> dets, double iou_threshold,
                                            IouMode mode = IouMode::kRotated) {
  std::vector<RotatedBox> boxes;
  std::vector<double> scores;
  boxes.reserve(dets.size());
  scores.reserve(dets.size());
  for (const Detection& d : dets) {
    boxes.push_back(d.box);
    scores.push_back(d.score);
  }
  return rotated_nms(std::span<const RotatedBox>(boxes), std::span<const double>(scores), iou_threshold, mode);
}

// Wall-clock split of the last step, in seconds.
struct StepTimings {
  double prepare = 0.0;
  double predict = 0.0;
  double associate = 0.0;
  double update = 0.0;
};

class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg = {}) : cfg_(std::move(cfg)), filter_(cfg_.filter) { cfg_.validate(); }

  const TrackerConfig& config() const noexcept { return cfg_; }
  const std::vector<Track>& tracks() const noexcept { return tracks_; }
  std::optional<FrameIndex> last_frame() const noexcept { return last_frame_; }
  std::int64_t tracks_born() const noexcept { return next_id_ - 1; }
  std::size_t max_concurrent() const noexcept { return max_concurrent_; }
  const StepTimings& last_timings() const noexcept { return timings_; }

  // Frames skipped since the previous call are processed as empty frames.
  // Throws Error("out-of-order frame") unless frame > every previous frame.
  std::vector<Emission> step(FrameIndex frame, std::span<const Detection> detections) {
    if (frame < 0) throw Error("negative frame index");
    if (last_frame_ && frame <= *last_frame_) throw Error("out-of-order frame");
    if (last_frame_) {
      for (FrameIndex f = *last_frame_ + 1; f < frame; ++f) advance(f, {});
    }
    return advance(frame, detections);
  }

 private:
  using Clock = std::chrono::steady_clock;
  static double seconds(Clock::time_point a, Clock::time_point b) { return std::chrono::duration<double>(b - a).count(); }

  std::vector<Emission> advance(FrameIndex frame, std::span<const Detection> input) {
    const auto t0 = Clock::now();
    std::vector<Detection> dets;
    dets.reserve(input.size());
    for (const Detection& d : input) {
      if (d.frame != frame) throw Error("detection belongs to frame " + std::to_string(d.frame));
      if (d.score >= cfg_.score_threshold) dets.push_back(d);
    }
    canonical_sort(dets);
    {
      std::vector<Detection> kept;
      for (const std::size_t i : rotated_nms(std::span<const Detection>(dets), cfg_.nms_iou, cfg_.iou_mode))
        kept.push_back(dets[i]);
      dets = std::move(kept);
    }

    const auto t1 = Clock::now();
    std::vector<RotatedBox> predicted;
    predicted.reserve(tracks_.size());
    for (Track& t : tracks_) {
      t.state = filter_.predict(t.state);
      t.born_this_frame = false;
      ++t.age;
      predicted.push_back(t.box());
    }

    const auto t2 = Clock::now();
    std::vector<RotatedBox> det_boxes;
    det_boxes.reserve(dets.size());
    for (const Detection& d : dets) det_boxes.push_back(d.box);
    const Association assoc = associate(predicted, det_boxes, {cfg_.iou_gate, cfg_.iou_mode, cfg_.premask_gate});

    const auto t3 = Clock::now();
    std::vector<std::optional<std::size_t>> matched_det(tracks_.size());
    for (const auto& [ti, di] : assoc.matches) {
      Track& t = tracks_[ti];
      t.state = filter_.update(t.state, dets[di].box);
      ++t.hits;
      t.time_since_update = 0;
      matched_det[ti] = di;
    }
    for (const std::size_t ti : assoc.unmatched_tracks) {
      Track& t = tracks_[ti];
      t.hits = 0;
      ++t.time_since_update;
    }
    for (const std::size_t di : assoc.unmatched_detections) {
      Track t;
      t.trace_id = next_id_++;
      t.state = filter_.initiate(dets[di].box);
      t.hits = 1;
      t.born_this_frame = true;
      tracks_.push_back(std::move(t));
      matched_det.push_back(di);
    }

    std::vector<Emission> emitted;
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
      Track& t = tracks_[i];
      if (!matched_det[i]) continue;
      const Detection& d = dets[*matched_det[i]];
      t.history.push_back({frame, d.box, d.score});
      if (confirmed(t)) emitted.push_back({t.trace_id, cfg_.emit_raw ? d.box : t.box(), d.score});
    }
    std::erase_if(tracks_, [&](const Track& t) { return t.time_since_update > cfg_.max_age; });
    max_concurrent_ = std::max(max_concurrent_, tracks_.size());
    std::sort(emitted.begin(), emitted.end(), [](const Emission& a, const Emission& b) { return a.trace_id < b.trace_id; });

    ++frames_seen_;
    last_frame_ = frame;
    const auto t4 = Clock::now();
    timings_ = {seconds(t0, t1), seconds(t1, t2), seconds(t2, t3), seconds(t3, t4)};
    return emitted;
  }

  // A newborn track is confirmed only by meeting min_hits outright; an
  // older matched track is also confirmed during the first min_hits frames.
  bool confirmed(const Track& t) const {
    if (t.hits >= cfg_.min_hits) return true;
    return !t.born_this_frame && frames_seen_ < cfg_.min_hits && t.age < cfg_.min_hits;
  }

  TrackerConfig cfg_;
  KalmanBoxFilter filter_;
  std::vector<Track> tracks_;
  TraceId next_id_ = 1;
  std::optional<FrameIndex> last_frame_;
  std::int64_t frames_seen_ = 0;
  std::size_t max_concurrent_ = 0;
  StepTimings timings_;
};

struct RunSummary {
  std::string video_id;
  std::size_t frames = 0;
  std::int64_t tracks_born = 0;
  std::size_t max_concurrent = 0;
};

// Folds Tracker::step over the frames. Every input frame appears in the
// result, possibly with no objects.
inline TrackSet run_video(const TrackerConfig& cfg, std::span<const Frame> frames, std::string video_id = {},
                          RunSummary* summary = nullptr) {
  Tracker tracker(cfg);
  TrackSet out;
  out.video_id = std::move(video_id);
  for (const Frame& f : frames) {
    std::vector<Emission> emitted;
    try {
      emitted = tracker.step(f.index, f.detections);
    } catch (const Error& e) {
      throw Error("frame " + std::to_string(f.index) + ": " + e.what());
    }
    auto& objs = out.frames[f.index];
    for (const Emission& e : emitted) objs.push_back({e.trace_id, rotated_box_to_quad(e.box), e.score});
  }
  if (summary) *summary = {out.video_id, frames.size(), tracker.tracks_born(), tracker.max_concurrent()};
  return out;
}

}  // namespace dstrack
