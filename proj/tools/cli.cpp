#include "cli.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "dstrack/dstrack.hpp"

namespace dstrack::cli {
namespace {

namespace fs = std::filesystem;

RunConfig load_config(const std::string& flag) {
  std::string path = flag;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnv); env && *env) path = env;
  }
  return path.empty() ? RunConfig{} : read_run_config(path);
}

std::string pick(const std::string& flag, const std::string& fallback, const char* name) {
  if (!flag.empty()) return flag;
  if (!fallback.empty()) return fallback;
  throw Error(std::string("missing required option ") + name);
}

// --------------------------------------------------------------------------
// track

struct TrackArgs {
  std::string detections, config, out;
  int workers = 0;
};

int cmd_track(const TrackArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(a.config);
  const fs::path det_path = pick(a.detections, cfg.io.detections, "--detections");
  const fs::path out_path = pick(a.out, cfg.io.out, "--out");
  const int workers = a.workers > 0 ? a.workers : cfg.workers;
  cfg.tracker.validate();

  const DetectionStreams streams = read_detections(det_path);
  std::vector<const std::pair<const std::string, std::vector<Frame>>*> jobs;
  for (const auto& kv : streams) jobs.push_back(&kv);

  std::vector<TrackSet> results(jobs.size());
  std::vector<RunSummary> summaries(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        results[i] = run_video(cfg.tracker, jobs[i]->second, jobs[i]->first, &summaries[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), jobs.size());
    for (std::size_t w = 1; w < n; ++w) pool.emplace_back(work);
    work();
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      throw Error("video '" + jobs[i]->first + "': " + e.what());
    }
  }

  if (results.size() == 1 && !fs::is_directory(out_path)) {
    write_tracks(results[0], out_path);
  } else if (!results.empty()) {
    for (const TrackSet& ts : results) write_tracks(ts, out_path / (ts.video_id + ".tracks.json"));
  }

  std::string summary = "{\"videos\": [";
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const RunSummary& s = summaries[i];
    summary += (i ? ", " : "") + std::string("{\"frames\": ") + std::to_string(s.frames) +
               ", \"max_concurrent\": " + std::to_string(s.max_concurrent) +
               ", \"tracks_born\": " + std::to_string(s.tracks_born) + ", \"video_id\": " + json_string(s.video_id) + "}";
  }
  out << summary << "]}\n";
  return kExitOk;
}

// --------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string pred, gt, config;
  std::optional<double> match_iou;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const RunConfig cfg = load_config(a.config);
  const double match_iou = a.match_iou.value_or(cfg.match_iou);
  if (!(match_iou >= 0.0 && match_iou <= 1.0)) throw Error("--match-iou must be in [0, 1]");
  const auto preds = read_track_files(pick(a.pred, cfg.io.out, "--pred"));
  const auto gts = read_ground_truth(pick(a.gt, cfg.io.ground_truth, "--gt"));
  out << format_metrics(evaluate_all(preds, gts, match_iou));
  return kExitOk;
}

// --------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string config, out_dets, out_gt;
  std::optional<std::uint64_t> seed;
  std::optional<int> videos, tracks, frames;
  std::optional<double> noise, drop, fp_rate;
};

int cmd_synth(const SynthArgs& a) {
  const RunConfig cfg = load_config(a.config);
  if (!cfg.scenario && !a.seed) throw Error("scenario.seed is required (config \"scenario\" section or --seed)");
  ScenarioConfig sc = cfg.scenario.value_or(ScenarioConfig(a.seed.value_or(0)));
  if (a.seed) sc.seed = *a.seed;
  if (a.tracks) sc.n_tracks = *a.tracks;
  if (a.frames) sc.frames = *a.frames;
  if (a.noise) sc.noise_sigma = *a.noise;
  if (a.drop) sc.drop_prob = *a.drop;
  if (a.fp_rate) sc.fp_rate = *a.fp_rate;
  const int videos = a.videos.value_or(cfg.scenario_videos);
  if (videos < 1) throw Error("--videos must be >= 1");
  sc.validate();

  std::string dets, gt;
  for (int v = 0; v < videos; ++v) {
    ScenarioConfig one = sc;
    if (videos > 1) {
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, "_%03d", v);
      one.video_id = sc.video_id + suffix;
      one.seed = sc.seed + static_cast<std::uint64_t>(v);
    }
    const Scenario s = generate_scenario(one);
    dets += format_detections({{one.video_id, s.detections}});
    gt += format_ground_truth(s.ground_truth);
  }
  write_text_file(pick(a.out_dets, cfg.io.detections, "--out-dets"), dets);
  write_text_file(pick(a.out_gt, cfg.io.ground_truth, "--out-gt"), gt);
  return kExitOk;
}

// --------------------------------------------------------------------------
// overlay

struct OverlayArgs {
  std::string tracks, size, out;
};

std::pair<int, int> parse_size(const std::string& s) {
  const auto x = s.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    std::size_t used_w = 0, used_h = 0;
    const int w = std::stoi(s.substr(0, x), &used_w);
    const int h = std::stoi(s.substr(x + 1), &used_h);
    if (used_w != x || used_h != s.size() - x - 1 || w <= 0 || h <= 0) throw std::invalid_argument(s);
    return {w, h};
  } catch (const std::exception&) {
    throw Error("--size must look like WIDTHxHEIGHT, got '" + s + "'");
  }
}

int cmd_overlay(const OverlayArgs& a, std::ostream& out) {
  const auto [w, h] = parse_size(a.size);
  const auto sets = read_track_files(a.tracks);
  std::size_t files = 0;
  for (const auto& [id, ts] : sets) {
    const fs::path dir = sets.size() == 1 ? fs::path(a.out) : fs::path(a.out) / id;
    files += export_overlay(ts, w, h, dir).size();
  }
  out << "{\"files\": " << files << ", \"videos\": " << sets.size() << "}\n";
  return kExitOk;
}

// --------------------------------------------------------------------------
// bench

struct BenchArgs {
  int boxes = 200;
  int frames = 100;
  std::uint64_t seed = 1;
  std::string config;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  if (a.boxes < 0 || a.frames < 0) throw Error("--n-boxes and --frames must be >= 0");
  const RunConfig cfg = load_config(a.config);
  out << format_bench(run_bench(a.boxes, a.frames, a.seed, cfg.tracker));
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rotated-box multi-object tracking for dense scene text", "dstrack"};
  app.require_subcommand(1);

  TrackArgs track;
  auto* track_cmd = app.add_subcommand("track", "Track detections and write track files");
  track_cmd->add_option("--detections", track.detections, "Detection JSON Lines file");
  track_cmd->add_option("--config", track.config, std::string("Config file (default: $") + kConfigEnv + ")");
  track_cmd->add_option("--out", track.out, "Output file (one video) or directory (several videos)");
  track_cmd->add_option("--workers", track.workers, "Videos tracked concurrently")->check(CLI::PositiveNumber);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score track files against ground truth");
  eval_cmd->add_option("--pred", eval.pred, "Track file or directory of *.tracks.json");
  eval_cmd->add_option("--gt", eval.gt, "Ground-truth JSON Lines file");
  eval_cmd->add_option("--match-iou", eval.match_iou, "IoU threshold for a match (default 0.5)");
  eval_cmd->add_option("--config", eval.config, "Config file");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic scenario");
  synth_cmd->add_option("--config", synth.config, "Config file with a \"scenario\" section");
  synth_cmd->add_option("--out-dets", synth.out_dets, "Detections output (JSON Lines)");
  synth_cmd->add_option("--out-gt", synth.out_gt, "Ground-truth output (JSON Lines)");
  synth_cmd->add_option("--seed", synth.seed, "RNG seed (overrides config)");
  synth_cmd->add_option("--videos", synth.videos, "Number of videos");
  synth_cmd->add_option("--tracks", synth.tracks, "Tracks per video");
  synth_cmd->add_option("--frames", synth.frames, "Frames per video");
  synth_cmd->add_option("--noise", synth.noise, "Detection jitter sigma, px");
  synth_cmd->add_option("--drop", synth.drop, "Per-instance drop probability");
  synth_cmd->add_option("--fp-rate", synth.fp_rate, "Expected false positives per frame");

  OverlayArgs overlay;
  auto* overlay_cmd = app.add_subcommand("overlay", "Write one SVG per frame with id-colored quads");
  overlay_cmd->add_option("--tracks", overlay.tracks, "Track file or directory")->required();
  overlay_cmd->add_option("--size", overlay.size, "Canvas size WIDTHxHEIGHT")->required();
  overlay_cmd->add_option("--out", overlay.out, "Output directory")->required();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Measure tracker latency on synthetic dense frames");
  bench_cmd->add_option("--n-boxes", bench.boxes, "Boxes per frame");
  bench_cmd->add_option("--frames", bench.frames, "Frames");
  bench_cmd->add_option("--seed", bench.seed, "Workload seed");
  bench_cmd->add_option("--config", bench.config, "Config file (tracker section)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);  // --help
    const auto parsed = app.get_subcommands();
    err << "error: " << e.what() << "\n\n" << (parsed.empty() ? app.help() : parsed.front()->help());
    return kExitInput;
  }

  try {
    if (*track_cmd) return cmd_track(track, out);
    if (*eval_cmd) return cmd_eval(eval, out);
    if (*synth_cmd) return cmd_synth(synth);
    if (*overlay_cmd) return cmd_overlay(overlay, out);
    if (*bench_cmd) return cmd_bench(bench, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  err << app.help();
  return kExitInput;
}

}  // namespace dstrack::cli
