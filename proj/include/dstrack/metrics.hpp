#pragma once

// CLEAR-MOT style tracking evaluation (MOTA, ID switches, fragmentations)
// plus IDF1 from the optimal identity bijection.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "dstrack/assignment.hpp"
#include "dstrack/error.hpp"
#include "dstrack/geometry.hpp"
#include "dstrack/tracker.hpp"

namespace dstrack {

struct GroundTruthObject {
  TraceId track_id = 0;
  Quad quad;
  std::optional<std::string> transcription;  // carried, unused

  friend bool operator==(const GroundTruthObject&, const GroundTruthObject&) = default;
};

struct GroundTruth {
  std::string video_id;
  std::map<FrameIndex, std::vector<GroundTruthObject>> frames;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct VideoMetrics {
  std::int64_t num_gt = 0;
  std::int64_t num_pred = 0;
  std::int64_t matches = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t id_switches = 0;
  std::int64_t fragmentations = 0;
  std::int64_t idtp = 0;
  double mota = 1.0;
  double idf1 = 1.0;

  // mota = 1 - (fn + fp + idsw) / num_gt, with num_gt floored at 1.
  // idf1 = 2 idtp / (num_gt + num_pred), 1 when both are 0.
  void finalize() {
    mota = 1.0 - static_cast<double>(fn + fp + id_switches) / static_cast<double>(std::max<std::int64_t>(num_gt, 1));
    const std::int64_t denom = num_gt + num_pred;
    idf1 = denom == 0 ? 1.0 : 2.0 * static_cast<double>(idtp) / static_cast<double>(denom);
  }

  VideoMetrics& operator+=(const VideoMetrics& o) {
    num_gt += o.num_gt;
    num_pred += o.num_pred;
    matches += o.matches;
    fp += o.fp;
    fn += o.fn;
    id_switches += o.id_switches;
    fragmentations += o.fragmentations;
    idtp += o.idtp;
    finalize();
    return *this;
  }
};

struct MetricsReport {
  VideoMetrics total;
  std::map<std::string, VideoMetrics> per_video;
};

namespace detail {

struct EvalObject {
  TraceId id;
  RotatedBox box;
};

// Large enough to dominate any sum of 1 - IoU terms in a frame.
inline double gate_penalty(std::size_t n) { return 2.0 + static_cast<double>(n); }

}  // namespace detail

// Evaluates one video. Per frame, a GT object keeps the prediction it was
// last matched to when their IoU still reaches match_iou; the rest are
// matched by Hungarian on 1 - IoU restricted to IoU >= match_iou.
inline VideoMetrics evaluate(const TrackSet& pred, const GroundTruth& gt, double match_iou = 0.5) {
  if (pred.video_id != gt.video_id)
    throw Error("video id mismatch: prediction '" + pred.video_id + "' vs ground truth '" + gt.video_id + "'");

  std::set<FrameIndex> frames;
  for (const auto& [f, _] : pred.frames) frames.insert(f);
  for (const auto& [f, _] : gt.frames) frames.insert(f);

  VideoMetrics m;
  std::unordered_map<TraceId, TraceId> last_match;  // gt id -> pred id
  std::unordered_map<TraceId, bool> missed_since_tracked;
  std::map<std::pair<TraceId, TraceId>, std::int64_t> co_matches;  // (gt, pred) -> frames with IoU >= match_iou
  std::map<TraceId, std::int64_t> gt_count, pred_count;

  for (const FrameIndex f : frames) {
    std::vector<detail::EvalObject> g, p;
    if (auto it = gt.frames.find(f); it != gt.frames.end())
      for (const auto& o : it->second) g.push_back({o.track_id, quad_to_rotated_box(o.quad)});
    if (auto it = pred.frames.find(f); it != pred.frames.end())
      for (const auto& o : it->second) p.push_back({o.trace_id, quad_to_rotated_box(o.quad)});
    m.num_gt += static_cast<std::int64_t>(g.size());
    m.num_pred += static_cast<std::int64_t>(p.size());
    for (const auto& o : g) ++gt_count[o.id];
    for (const auto& o : p) ++pred_count[o.id];

    CostMatrix iou(g.size(), p.size());
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < p.size(); ++j) {
        iou(i, j) = rotated_iou(g[i].box, p[j].box);
        if (iou(i, j) >= match_iou) ++co_matches[{g[i].id, p[j].id}];
      }

    std::vector<std::optional<std::size_t>> g_to_p(g.size());
    std::vector<char> p_used(p.size(), 0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto last = last_match.find(g[i].id);
      if (last == last_match.end()) continue;
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (!p_used[j] && p[j].id == last->second && iou(i, j) >= match_iou) {
          g_to_p[i] = j;
          p_used[j] = 1;
          break;
        }
      }
    }

    std::vector<std::size_t> rg, rp;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!g_to_p[i]) rg.push_back(i);
    for (std::size_t j = 0; j < p.size(); ++j)
      if (!p_used[j]) rp.push_back(j);
    CostMatrix cost(rg.size(), rp.size());
    const double penalty = detail::gate_penalty(std::max(rg.size(), rp.size()));
    for (std::size_t a = 0; a < rg.size(); ++a)
      for (std::size_t b = 0; b < rp.size(); ++b) {
        const double v = iou(rg[a], rp[b]);
        cost(a, b) = 1.0 - v + (v >= match_iou ? 0.0 : penalty);
      }
    for (const auto& [a, b] : hungarian(cost)) {
      if (iou(rg[a], rp[b]) < match_iou) continue;
      g_to_p[rg[a]] = rp[b];
      p_used[rp[b]] = 1;
    }

    std::int64_t matched = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const TraceId gid = g[i].id;
      if (!g_to_p[i]) {
        if (last_match.contains(gid)) missed_since_tracked[gid] = true;
        continue;
      }
      ++matched;
      const TraceId pid = p[*g_to_p[i]].id;
      if (auto last = last_match.find(gid); last != last_match.end() && last->second != pid) ++m.id_switches;
      if (auto miss = missed_since_tracked.find(gid); miss != missed_since_tracked.end() && miss->second) {
        ++m.fragmentations;
        miss->second = false;
      }
      last_match[gid] = pid;
    }
    m.matches += matched;
    m.fn += static_cast<std::int64_t>(g.size()) - matched;
    m.fp += static_cast<std::int64_t>(p.size()) - matched;
  }

  // IDF1: maximum-weight bijection between GT ids and predicted ids.
  std::vector<TraceId> gids, pids;
  for (const auto& [id, _] : gt_count) gids.push_back(id);
  for (const auto& [id, _] : pred_count) pids.push_back(id);
  std::int64_t best = 0;
  for (const auto& [_, c] : co_matches) best = std::max(best, c);
  CostMatrix idcost(gids.size(), pids.size(), static_cast<double>(best));
  std::map<TraceId, std::size_t> pindex;
  for (std::size_t j = 0; j < pids.size(); ++j) pindex[pids[j]] = j;
  std::map<TraceId, std::size_t> gindex;
  for (std::size_t i = 0; i < gids.size(); ++i) gindex[gids[i]] = i;
  for (const auto& [key, c] : co_matches)
    idcost(gindex[key.first], pindex[key.second]) = static_cast<double>(best - c);
  for (const auto& [i, j] : hungarian(idcost)) {
    const auto it = co_matches.find({gids[i], pids[j]});
    if (it != co_matches.end()) m.idtp += it->second;
  }

  m.finalize();
  return m;
}

// Evaluates a set of videos. The two sides must cover the same video ids.
inline MetricsReport evaluate_all(const std::map<std::string, TrackSet>& preds,
                                  const std::map<std::string, GroundTruth>& gts, double match_iou = 0.5) {
  std::vector<std::string> only_pred, only_gt;
  for (const auto& [id, _] : preds)
    if (!gts.contains(id)) only_pred.push_back(id);
  for (const auto& [id, _] : gts)
    if (!preds.contains(id)) only_gt.push_back(id);
  if (!only_pred.empty() || !only_gt.empty()) {
    std::string msg = "video sets differ;";
    const auto list = [&](const char* label, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      msg += std::string(" ") + label + ":";
      for (const auto& id : ids) msg += " " + id;
      msg += ";";
    };
    list("only in predictions", only_pred);
    list("only in ground truth", only_gt);
    msg.pop_back();
    throw Error(msg);
  }
  MetricsReport report;
  for (const auto& [id, ts] : preds) {
    const VideoMetrics vm = evaluate(ts, gts.at(id), match_iou);
    report.per_video[id] = vm;
    report.total += vm;
  }
  report.total.finalize();
  return report;
}

}  // namespace dstrack
