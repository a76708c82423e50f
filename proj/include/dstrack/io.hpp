#pragma once

// File formats.
//
//   detections   JSON Lines: {"frame", "points": [x1,y1,..,x4,y4], "score", "video_id"}
//   ground truth JSON Lines: {"frame", "points", "track_id", "transcription"?, "video_id"}
//   tracks       one JSON document per video (see format_tracks)
//   metrics      one JSON document (see format_metrics)
//   config       one JSON document (see parse_run_config)
//   overlays     one SVG per frame (see export_overlay)
//
// Writers are byte-deterministic: object keys are sorted, frame maps ascend
// numerically, coordinates and scores use exactly 2 decimals.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dstrack/error.hpp"
#include "dstrack/geometry.hpp"
#include "dstrack/metrics.hpp"
#include "dstrack/scenario.hpp"
#include "dstrack/tracker.hpp"

namespace dstrack {

namespace fs = std::filesystem;
using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Formatting primitives

inline std::string format_fixed(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  // "-0.00" and friends print as zero.
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

inline std::string json_string(std::string_view s) { return Json(std::string(s)).dump(); }

// The start vertex is re-chosen on the rounded values: rounding can tie two
// vertices' y, and the reader canonicalizes what it sees.
inline std::string format_points(const Quad& q) {
  std::array<std::string, 8> text;
  std::array<Point, 4> rounded;
  const auto c = q.coords();
  for (std::size_t i = 0; i < c.size(); ++i) text[i] = format_fixed(c[i]);
  for (std::size_t k = 0; k < 4; ++k) rounded[k] = {std::strtod(text[2 * k].c_str(), nullptr), std::strtod(text[2 * k + 1].c_str(), nullptr)};
  const std::size_t start = static_cast<std::size_t>(
      std::min_element(rounded.begin(), rounded.end(), detail::point_less_yx) - rounded.begin());
  std::string out = "[";
  for (std::size_t i = 0; i < 8; ++i) {
    if (i) out += ", ";
    out += text[(2 * start + i) % 8];
  }
  return out + "]";
}

inline std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// Line-record parsing

namespace detail {

class LineContext {
 public:
  LineContext(std::string source, std::size_t line, std::string_view text)
      : source_(std::move(source)), line_(line), text_(text) {}

  [[noreturn]] void fail(const std::string& reason, std::string_view key = {}) const {
    std::size_t col = 1;
    if (!key.empty()) {
      const auto pos = text_.find("\"" + std::string(key) + "\"");
      if (pos != std::string_view::npos) col = pos + 1;
    }
    throw ParseError(source_, line_, col, reason);
  }

  const Json& require(const Json& obj, const char* key) const {
    const auto it = obj.find(key);
    if (it == obj.end()) fail(std::string("missing field \"") + key + "\"");
    return *it;
  }

  std::string string_field(const Json& obj, const char* key) const {
    const Json& v = require(obj, key);
    if (!v.is_string()) fail(std::string("field \"") + key + "\" must be a string", key);
    return v.get<std::string>();
  }

  std::int64_t int_field(const Json& obj, const char* key, std::int64_t min_value) const {
    const Json& v = require(obj, key);
    if (!v.is_number_integer()) fail(std::string("field \"") + key + "\" must be an integer", key);
    const auto out = v.get<std::int64_t>();
    if (out < min_value)
      fail(std::string("field \"") + key + "\" must be >= " + std::to_string(min_value), key);
    return out;
  }

  double unit_field(const Json& obj, const char* key) const {
    const Json& v = require(obj, key);
    if (!v.is_number()) fail(std::string("field \"") + key + "\" must be a number", key);
    const double out = v.get<double>();
    if (!(out >= 0.0 && out <= 1.0)) fail(std::string("field \"") + key + "\" must be in [0, 1]", key);
    return out;
  }

  Quad quad_field(const Json& obj) const {
    const Json& v = require(obj, "points");
    if (!v.is_array()) fail("field \"points\" must be an array", "points");
    if (v.size() != 8) fail("field \"points\" must hold 8 coordinates, got " + std::to_string(v.size()), "points");
    std::array<double, 8> xy{};
    for (std::size_t i = 0; i < 8; ++i) {
      if (!v[i].is_number()) fail("field \"points\" must hold numbers", "points");
      xy[i] = v[i].get<double>();
    }
    try {
      return Quad::from_coords(xy);
    } catch (const GeometryError& e) {
      fail(std::string("invalid quad: ") + e.what(), "points");
    }
  }

  Json parse_object() const {
    Json j;
    try {
      j = Json::parse(text_);
    } catch (const Json::parse_error& e) {
      throw ParseError(source_, line_, e.byte == 0 ? 1 : e.byte, "malformed JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) fail("record must be a JSON object");
    return j;
  }

 private:
  std::string source_;
  std::size_t line_;
  std::string_view text_;
};

// Calls fn(LineContext, Json) for every non-blank line.
template <typename Fn>
void for_each_record(std::istream& in, const std::string& source, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const LineContext ctx(source, lineno, line);
    fn(ctx, ctx.parse_object());
  }
}

// Tracks the last frame seen per video to enforce non-decreasing order.
class FrameOrder {
 public:
  void check(const LineContext& ctx, const std::string& video, FrameIndex frame) {
    auto [it, inserted] = last_.try_emplace(video, frame);
    if (!inserted) {
      if (frame < it->second)
        ctx.fail("frame " + std::to_string(frame) + " follows frame " + std::to_string(it->second) + " in video '" +
                     video + "'",
                 "frame");
      it->second = frame;
    }
  }

 private:
  std::map<std::string, FrameIndex> last_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Detections

struct DetectionRecord {
  std::string video_id;
  FrameIndex frame = 0;
  Quad quad;
  double score = 0.0;
};

inline std::vector<DetectionRecord> parse_detection_records(std::istream& in, const std::string& source = {}) {
  std::vector<DetectionRecord> out;
  detail::FrameOrder order;
  detail::for_each_record(in, source, [&](const detail::LineContext& ctx, const Json& j) {
    DetectionRecord r;
    r.video_id = ctx.string_field(j, "video_id");
    if (r.video_id.empty()) ctx.fail("field \"video_id\" must not be empty", "video_id");
    r.frame = ctx.int_field(j, "frame", 0);
    r.quad = ctx.quad_field(j);
    r.score = ctx.unit_field(j, "score");
    order.check(ctx, r.video_id, r.frame);
    out.push_back(std::move(r));
  });
  return out;
}

// Per-video frame streams, ascending; frames without detections are absent.
using DetectionStreams = std::map<std::string, std::vector<Frame>>;

inline DetectionStreams group_detections(const std::vector<DetectionRecord>& records) {
  std::map<std::string, std::map<FrameIndex, Frame>> grouped;
  for (const DetectionRecord& r : records) {
    Frame& f = grouped[r.video_id][r.frame];
    f.index = r.frame;
    f.detections.push_back({r.frame, quad_to_rotated_box(r.quad), r.score});
  }
  DetectionStreams out;
  for (auto& [video, frames] : grouped) {
    auto& stream = out[video];
    for (auto& [_, f] : frames) stream.push_back(std::move(f));
  }
  return out;
}

inline DetectionStreams read_detections(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return group_detections(parse_detection_records(in, path.string()));
}

inline std::string format_detection_line(const std::string& video_id, FrameIndex frame, const Quad& q, double score) {
  return "{\"frame\": " + std::to_string(frame) + ", \"points\": " + format_points(q) +
         ", \"score\": " + format_fixed(score) + ", \"video_id\": " + json_string(video_id) + "}\n";
}

inline std::string format_detections(const DetectionStreams& streams) {
  std::string out;
  for (const auto& [video, frames] : streams)
    for (const Frame& f : frames)
      for (const Detection& d : f.detections) out += format_detection_line(video, f.index, rotated_box_to_quad(d.box), d.score);
  return out;
}

inline std::string format_detection_records(const std::vector<DetectionRecord>& records) {
  std::string out;
  for (const auto& r : records) out += format_detection_line(r.video_id, r.frame, r.quad, r.score);
  return out;
}

// ---------------------------------------------------------------------------
// Ground truth

inline std::map<std::string, GroundTruth> parse_ground_truth(std::istream& in, const std::string& source = {}) {
  std::map<std::string, GroundTruth> out;
  detail::FrameOrder order;
  detail::for_each_record(in, source, [&](const detail::LineContext& ctx, const Json& j) {
    const std::string video = ctx.string_field(j, "video_id");
    if (video.empty()) ctx.fail("field \"video_id\" must not be empty", "video_id");
    const FrameIndex frame = ctx.int_field(j, "frame", 0);
    GroundTruthObject obj;
    obj.track_id = ctx.int_field(j, "track_id", 0);
    obj.quad = ctx.quad_field(j);
    if (const auto it = j.find("transcription"); it != j.end() && !it->is_null()) {
      if (!it->is_string()) ctx.fail("field \"transcription\" must be a string", "transcription");
      obj.transcription = it->get<std::string>();
    }
    order.check(ctx, video, frame);
    GroundTruth& gt = out[video];
    gt.video_id = video;
    auto& objs = gt.frames[frame];
    if (std::any_of(objs.begin(), objs.end(), [&](const auto& o) { return o.track_id == obj.track_id; }))
      ctx.fail("duplicate track_id " + std::to_string(obj.track_id) + " in frame " + std::to_string(frame), "track_id");
    objs.push_back(std::move(obj));
  });
  return out;
}

inline std::map<std::string, GroundTruth> read_ground_truth(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return parse_ground_truth(in, path.string());
}

inline std::string format_ground_truth(const GroundTruth& gt) {
  std::string out;
  for (const auto& [frame, objs] : gt.frames)
    for (const auto& o : objs) {
      out += "{\"frame\": " + std::to_string(frame) + ", \"points\": " + format_points(o.quad) +
             ", \"track_id\": " + std::to_string(o.track_id);
      if (o.transcription) out += ", \"transcription\": " + json_string(*o.transcription);
      out += ", \"video_id\": " + json_string(gt.video_id) + "}\n";
    }
  return out;
}

// ---------------------------------------------------------------------------
// Track files
//
// {
//   "frames": {
//     "0": [
//       {"points": [...], "score": 0.90, "track_id": 1}
//     ]
//   },
//   "video_id": "v"
// }

inline std::string format_tracks(const TrackSet& ts) {
  std::string out = "{\n  \"frames\": {";
  bool first_frame = true;
  for (const auto& [frame, objs] : ts.frames) {
    out += first_frame ? "\n" : ",\n";
    first_frame = false;
    out += "    \"" + std::to_string(frame) + "\": [";
    std::vector<const TrackedObject*> sorted;
    for (const auto& o : objs) sorted.push_back(&o);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->trace_id < b->trace_id; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      out += i ? ",\n" : "\n";
      out += "      {\"points\": " + format_points(sorted[i]->quad) + ", \"score\": " + format_fixed(sorted[i]->score) +
             ", \"track_id\": " + std::to_string(sorted[i]->trace_id) + "}";
    }
    out += sorted.empty() ? "]" : "\n    ]";
  }
  out += first_frame ? "}" : "\n  }";
  out += ",\n  \"video_id\": " + json_string(ts.video_id) + "\n}\n";
  return out;
}

inline void write_tracks(const TrackSet& ts, const fs::path& path) { write_text_file(path, format_tracks(ts)); }

inline TrackSet parse_tracks(std::string_view text, const std::string& source = {}) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    // Map the byte offset to line/column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(source, line, col, "malformed JSON: " + std::string(e.what()));
  }
  const auto fail = [&](const std::string& where, const std::string& reason) -> void {
    throw ParseError(source, 0, 0, where + ": " + reason);
  };
  if (!j.is_object()) fail("document", "must be a JSON object");
  TrackSet ts;
  if (!j.contains("video_id") || !j["video_id"].is_string()) fail("video_id", "missing or not a string");
  ts.video_id = j["video_id"].get<std::string>();
  if (!j.contains("frames") || !j["frames"].is_object()) fail("frames", "missing or not an object");
  for (const auto& [key, list] : j["frames"].items()) {
    const std::string where = "frames." + key;
    FrameIndex frame = 0;
    try {
      std::size_t used = 0;
      frame = std::stoll(key, &used);
      if (used != key.size() || frame < 0) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      fail(where, "frame key must be a non-negative integer");
    }
    if (!list.is_array()) fail(where, "must be an array");
    auto& objs = ts.frames[frame];
    std::set<TraceId> ids;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string at = where + "[" + std::to_string(i) + "]";
      const Json& o = list[i];
      if (!o.is_object()) fail(at, "must be an object");
      if (!o.contains("track_id") || !o["track_id"].is_number_integer() || o["track_id"].get<std::int64_t>() <= 0)
        fail(at + ".track_id", "must be a positive integer");
      if (!o.contains("score") || !o["score"].is_number()) fail(at + ".score", "must be a number");
      if (!o.contains("points") || !o["points"].is_array() || o["points"].size() != 8)
        fail(at + ".points", "must hold 8 coordinates");
      std::array<double, 8> xy{};
      for (std::size_t k = 0; k < 8; ++k) {
        if (!o["points"][k].is_number()) fail(at + ".points", "must hold numbers");
        xy[k] = o["points"][k].get<double>();
      }
      TrackedObject obj;
      obj.trace_id = o["track_id"].get<std::int64_t>();
      obj.score = o["score"].get<double>();
      try {
        obj.quad = Quad::from_coords(xy);
      } catch (const GeometryError& e) {
        fail(at + ".points", e.what());
      }
      if (!ids.insert(obj.trace_id).second) fail(at + ".track_id", "duplicate track id in frame");
      objs.push_back(obj);
    }
  }
  return ts;
}

inline TrackSet read_tracks(const fs::path& path) { return parse_tracks(read_text_file(path), path.string()); }

// A single track file, or every *.tracks.json in a directory.
inline std::map<std::string, TrackSet> read_track_files(const fs::path& path) {
  std::map<std::string, TrackSet> out;
  const auto add = [&](const fs::path& p) {
    TrackSet ts = read_tracks(p);
    const std::string id = ts.video_id;
    if (!out.emplace(id, std::move(ts)).second) throw Error("duplicate video id '" + id + "' in " + path.string());
  };
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path)) {
      const std::string name = e.path().filename().string();
      if (e.is_regular_file() && name.size() > 12 && name.ends_with(".tracks.json")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& p : files) add(p);
  } else {
    add(path);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics report

namespace detail {

inline void append_metrics_fields(std::string& out, const VideoMetrics& m, const std::string& indent) {
  const auto field = [&](const char* key, const std::string& value, bool last = false) {
    out += indent + "\"" + key + "\": " + value + (last ? "\n" : ",\n");
  };
  field("fn", std::to_string(m.fn));
  field("fp", std::to_string(m.fp));
  field("fragmentations", std::to_string(m.fragmentations));
  field("id_switches", std::to_string(m.id_switches));
  field("idf1", format_fixed(m.idf1, 6));
  field("idtp", std::to_string(m.idtp));
  field("matches", std::to_string(m.matches));
  field("mota", format_fixed(m.mota, 6));
  field("num_gt", std::to_string(m.num_gt));
  field("num_pred", std::to_string(m.num_pred), indent == "  " ? false : true);
}

}  // namespace detail

// Key-sorted JSON; reals with 6 decimals.
inline std::string format_metrics(const MetricsReport& report) {
  std::string out = "{\n";
  detail::append_metrics_fields(out, report.total, "  ");
  out += "  \"per_video\": {";
  bool first = true;
  for (const auto& [id, m] : report.per_video) {
    out += first ? "\n" : ",\n";
    first = false;
    out += "    " + json_string(id) + ": {\n";
    detail::append_metrics_fields(out, m, "      ");
    out += "    }";
  }
  out += first ? "}\n" : "\n  }\n";
  out += "}\n";
  return out;
}

// ---------------------------------------------------------------------------
// Run configuration
//
// {
//   "tracker":  {"iou_gate", "max_age", "min_hits", "score_threshold", "nms_iou",
//                "track_angle", "emit_raw", "premask_gate", "iou_mode": "rotated"|"aabb"},
//   "filter":   {FilterConfig fields, "track_angle"},
//   "metrics":  {"match_iou"},
//   "io":       {"detections", "ground_truth", "out"},
//   "workers":  n,
//   "scenario": {ScenarioConfig fields, "seed" (required), "videos"}
// }
// Unknown keys are rejected.

struct IoPaths {
  std::string detections;
  std::string ground_truth;
  std::string out;
};

struct RunConfig {
  TrackerConfig tracker;
  double match_iou = 0.5;
  IoPaths io;
  int workers = 1;
  std::optional<ScenarioConfig> scenario;
  int scenario_videos = 1;
};

namespace detail {

class ConfigReader {
 public:
  ConfigReader(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& dotted, const std::string& reason) const {
    throw ParseError(source_, locate(dotted), 0, dotted + ": " + reason);
  }

  void check_keys(const Json& obj, const std::string& prefix, std::initializer_list<std::string_view> allowed) const {
    for (const auto& [key, _] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        fail(prefix.empty() ? key : prefix + "." + key, "unknown key");
    }
  }

  const Json& object(const Json& parent, const char* key, const std::string& dotted) const {
    const Json& v = parent.at(key);
    if (!v.is_object()) fail(dotted, "must be an object");
    return v;
  }

  void number(const Json& obj, const char* key, const std::string& prefix, double& dst, double lo, double hi) const {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    const std::string dotted = prefix + "." + key;
    if (!it->is_number()) fail(dotted, "expected a number");
    const double v = it->get<double>();
    if (!(v >= lo && v <= hi)) fail(dotted, "value " + Json(v).dump() + " out of range [" + bound(lo) + ", " + bound(hi) + "]");
    dst = v;
  }

  void integer(const Json& obj, const char* key, const std::string& prefix, int& dst, int lo, int hi) const {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    const std::string dotted = prefix.empty() ? std::string(key) : prefix + "." + key;
    if (!it->is_number_integer()) fail(dotted, "expected an integer");
    const auto v = it->get<std::int64_t>();
    if (v < lo || v > hi) fail(dotted, "value " + std::to_string(v) + " out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    dst = static_cast<int>(v);
  }

  void boolean(const Json& obj, const char* key, const std::string& prefix, bool& dst) const {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_boolean()) fail(prefix + "." + key, "expected true or false");
    dst = it->get<bool>();
  }

  void string(const Json& obj, const char* key, const std::string& prefix, std::string& dst) const {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_string()) fail(prefix + "." + key, "expected a string");
    dst = it->get<std::string>();
  }

 private:
  static std::string bound(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return Json(v).dump();
  }

  // Line of the last path component, searching after each parent key.
  std::size_t locate(const std::string& dotted) const {
    std::size_t pos = 0;
    std::size_t start = 0;
    while (start <= dotted.size()) {
      const std::size_t dot = dotted.find('.', start);
      const std::string part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
      const std::size_t found = text_.find("\"" + part + "\"", pos);
      if (found == std::string_view::npos) return 0;
      pos = found;
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    return static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(pos), '\n')) + 1;
  }

  std::string_view text_;
  std::string source_;
};

}  // namespace detail

inline RunConfig parse_run_config(std::string_view text, const std::string& source = {}) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(source, line, col, "malformed JSON: " + std::string(e.what()));
  }
  const detail::ConfigReader rd(text, source);
  if (!j.is_object()) throw ParseError(source, 1, 1, "config must be a JSON object");
  rd.check_keys(j, "", {"tracker", "filter", "metrics", "io", "workers", "scenario"});

  RunConfig cfg;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  TrackerConfig& tc = cfg.tracker;
  FilterConfig& fc = tc.filter;
  if (j.contains("tracker")) {
    const Json& t = rd.object(j, "tracker", "tracker");
    rd.check_keys(t, "tracker", {"iou_gate", "max_age", "min_hits", "score_threshold", "nms_iou", "track_angle",
                                 "emit_raw", "premask_gate", "iou_mode"});
    rd.number(t, "iou_gate", "tracker", tc.iou_gate, 0.0, 1.0);
    rd.integer(t, "max_age", "tracker", tc.max_age, 0, 1 << 30);
    rd.integer(t, "min_hits", "tracker", tc.min_hits, 0, 1 << 30);
    rd.number(t, "score_threshold", "tracker", tc.score_threshold, 0.0, 1.0);
    rd.number(t, "nms_iou", "tracker", tc.nms_iou, 0.0, 1.0);
    rd.boolean(t, "track_angle", "tracker", fc.track_angle);
    rd.boolean(t, "emit_raw", "tracker", tc.emit_raw);
    rd.boolean(t, "premask_gate", "tracker", tc.premask_gate);
    std::string mode = tc.iou_mode == IouMode::kRotated ? "rotated" : "aabb";
    rd.string(t, "iou_mode", "tracker", mode);
    if (mode == "rotated")
      tc.iou_mode = IouMode::kRotated;
    else if (mode == "aabb")
      tc.iou_mode = IouMode::kAabb;
    else
      rd.fail("tracker.iou_mode", "expected \"rotated\" or \"aabb\"");
  }
  if (j.contains("filter")) {
    const Json& f = rd.object(j, "filter", "filter");
    rd.check_keys(f, "filter", {"q_pos", "q_area_rel", "q_aspect", "q_angle", "q_vel", "q_varea_rel", "r_pos",
                                "r_area_rel", "r_aspect", "r_angle", "init_pos_factor", "init_vel_factor",
                                "init_area_rel", "init_aspect", "init_angle", "track_angle"});
    rd.number(f, "q_pos", "filter", fc.q_pos, 0.0, kInf);
    rd.number(f, "q_area_rel", "filter", fc.q_area_rel, 0.0, kInf);
    rd.number(f, "q_aspect", "filter", fc.q_aspect, 0.0, kInf);
    rd.number(f, "q_angle", "filter", fc.q_angle, 0.0, kInf);
    rd.number(f, "q_vel", "filter", fc.q_vel, 0.0, kInf);
    rd.number(f, "q_varea_rel", "filter", fc.q_varea_rel, 0.0, kInf);
    // Measurement noise must keep the innovation covariance invertible.
    constexpr double kTiny = 1e-12;
    rd.number(f, "r_pos", "filter", fc.r_pos, kTiny, kInf);
    rd.number(f, "r_area_rel", "filter", fc.r_area_rel, kTiny, kInf);
    rd.number(f, "r_aspect", "filter", fc.r_aspect, kTiny, kInf);
    rd.number(f, "r_angle", "filter", fc.r_angle, kTiny, kInf);
    rd.number(f, "init_pos_factor", "filter", fc.init_pos_factor, 0.0, kInf);
    rd.number(f, "init_vel_factor", "filter", fc.init_vel_factor, 0.0, kInf);
    rd.number(f, "init_area_rel", "filter", fc.init_area_rel, 0.0, kInf);
    rd.number(f, "init_aspect", "filter", fc.init_aspect, 0.0, kInf);
    rd.number(f, "init_angle", "filter", fc.init_angle, 0.0, kInf);
    rd.boolean(f, "track_angle", "filter", fc.track_angle);
  }
  if (j.contains("metrics")) {
    const Json& m = rd.object(j, "metrics", "metrics");
    rd.check_keys(m, "metrics", {"match_iou"});
    rd.number(m, "match_iou", "metrics", cfg.match_iou, 0.0, 1.0);
  }
  if (j.contains("io")) {
    const Json& io = rd.object(j, "io", "io");
    rd.check_keys(io, "io", {"detections", "ground_truth", "out"});
    rd.string(io, "detections", "io", cfg.io.detections);
    rd.string(io, "ground_truth", "io", cfg.io.ground_truth);
    rd.string(io, "out", "io", cfg.io.out);
  }
  rd.integer(j, "workers", "", cfg.workers, 1, 1024);
  if (j.contains("scenario")) {
    const Json& s = rd.object(j, "scenario", "scenario");
    rd.check_keys(s, "scenario", {"video_id", "videos", "n_tracks", "frames", "image_width", "image_height",
                                  "min_width", "max_width", "min_height", "max_height", "max_speed", "max_rotation",
                                  "noise_sigma", "angle_sigma", "drop_prob", "fp_rate", "avoid_overlap",
                                  "placement_attempts", "seed"});
    const auto seed_it = s.find("seed");
    if (seed_it == s.end()) rd.fail("scenario.seed", "required");
    if (!seed_it->is_number_unsigned() && !(seed_it->is_number_integer() && seed_it->get<std::int64_t>() >= 0))
      rd.fail("scenario.seed", "expected a non-negative integer");
    ScenarioConfig sc(seed_it->get<std::uint64_t>());
    rd.string(s, "video_id", "scenario", sc.video_id);
    rd.integer(s, "videos", "scenario", cfg.scenario_videos, 1, 100000);
    rd.integer(s, "n_tracks", "scenario", sc.n_tracks, 0, 1 << 20);
    rd.integer(s, "frames", "scenario", sc.frames, 0, 1 << 24);
    rd.number(s, "image_width", "scenario", sc.image_width, 1.0, kInf);
    rd.number(s, "image_height", "scenario", sc.image_height, 1.0, kInf);
    rd.number(s, "min_width", "scenario", sc.min_width, 1e-6, kInf);
    rd.number(s, "max_width", "scenario", sc.max_width, 1e-6, kInf);
    rd.number(s, "min_height", "scenario", sc.min_height, 1e-6, kInf);
    rd.number(s, "max_height", "scenario", sc.max_height, 1e-6, kInf);
    rd.number(s, "max_speed", "scenario", sc.max_speed, 0.0, kInf);
    rd.number(s, "max_rotation", "scenario", sc.max_rotation, 0.0, kHalfPi);
    rd.number(s, "noise_sigma", "scenario", sc.noise_sigma, 0.0, kInf);
    rd.number(s, "angle_sigma", "scenario", sc.angle_sigma, 0.0, kInf);
    rd.number(s, "drop_prob", "scenario", sc.drop_prob, 0.0, 1.0);
    rd.number(s, "fp_rate", "scenario", sc.fp_rate, 0.0, kInf);
    rd.boolean(s, "avoid_overlap", "scenario", sc.avoid_overlap);
    rd.integer(s, "placement_attempts", "scenario", sc.placement_attempts, 1, 1 << 20);
    try {
      sc.validate();
    } catch (const Error& e) {
      const std::string msg = e.what();
      rd.fail(msg.substr(0, msg.find(' ')), msg.substr(msg.find(' ') + 1));
    }
    cfg.scenario = sc;
  }
  try {
    tc.validate();
  } catch (const Error& e) {
    throw ParseError(source, 0, 0, e.what());
  }
  return cfg;
}

inline RunConfig read_run_config(const fs::path& path) { return parse_run_config(read_text_file(path), path.string()); }

// ---------------------------------------------------------------------------
// Overlays
//
// One SVG per frame named <frame, zero-padded to 6>.svg. Each object is a
// stroked polygon plus its trace id; stroke hue is Fibonacci hashing of the
// trace id, ((id * 2654435769) mod 2^32) / 2^32 * 360 degrees, at full
// saturation and value.

inline double trace_hue(TraceId id) {
  const std::uint32_t h = static_cast<std::uint32_t>(static_cast<std::uint64_t>(id) * 2654435769ULL);
  return static_cast<double>(h) / 4294967296.0 * 360.0;
}

inline std::string hsv_to_hex(double hue_deg, double sat = 1.0, double val = 1.0) {
  const double h = std::fmod(hue_deg, 360.0) / 60.0;
  const double c = val * sat;
  const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  const double m = val - c;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  const auto to8 = [&](double v) { return static_cast<int>(std::lround((v + m) * 255.0)); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", to8(r), to8(g), to8(b));
  return buf;
}

inline std::string trace_color(TraceId id) { return hsv_to_hex(trace_hue(id)); }

inline std::string overlay_filename(FrameIndex frame) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06lld.svg", static_cast<long long>(frame));
  return buf;
}

inline std::string format_overlay(const std::vector<TrackedObject>& objs, int width, int height) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) + "\">\n";
  out += "  <rect x=\"0\" y=\"0\" width=\"" + std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" fill=\"#ffffff\"/>\n";
  std::vector<const TrackedObject*> sorted;
  for (const auto& o : objs) sorted.push_back(&o);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->trace_id < b->trace_id; });
  for (const TrackedObject* o : sorted) {
    const std::string color = trace_color(o->trace_id);
    std::string pts;
    for (const Point& p : o->quad.vertices()) {
      if (!pts.empty()) pts += ' ';
      pts += format_fixed(p.x) + "," + format_fixed(p.y);
    }
    out += "  <polygon points=\"" + pts + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "  <text x=\"" + format_fixed(o->quad[0].x) + "\" y=\"" + format_fixed(o->quad[0].y - 2.0) +
           "\" font-size=\"10\" fill=\"" + color + "\">" + std::to_string(o->trace_id) + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

// Returns the written paths in frame order.
inline std::vector<fs::path> export_overlay(const TrackSet& ts, int width, int height, const fs::path& out_dir) {
  if (width <= 0 || height <= 0) throw Error("overlay size must be positive");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  for (const auto& [frame, objs] : ts.frames) {
    const fs::path p = out_dir / overlay_filename(frame);
    write_text_file(p, format_overlay(objs, width, height));
    written.push_back(p);
  }
  return written;
}

}  // namespace dstrack
