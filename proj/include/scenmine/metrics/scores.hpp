#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "scenmine/dsl/mask.hpp"
#include "scenmine/metrics/box.hpp"
#include "scenmine/traj/track.hpp"

namespace scenmine::metrics {

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

// P/R/F1 from counts. A 0/0 ratio is 0, except that all-zero counts (nothing
// predicted, nothing expected) score 1 across the board.
Prf prf_from_counts(const Counts& c);

Counts timestamp_counts(const std::set<std::int64_t>& pred, const std::set<std::int64_t>& gt);
Prf timestamp_f1(const std::set<std::int64_t>& pred, const std::set<std::int64_t>& gt);

struct LogDecision {
  bool pred = false;
  bool gt = false;
};

// F1 over per-log presence decisions, counts pooled across logs. Throws
// InvalidInput on an empty list.
double log_f1(std::span<const LogDecision> decisions);

struct Detection {
  std::string track_id;
  Box3D box;
};

// Timestamp (ns) -> detections in that frame. Track ids are unique per frame.
using Frames = std::map<std::int64_t, std::vector<Detection>>;

// 0.05, 0.10, ..., 0.95 (k/20 for k = 1..19).
std::vector<double> default_alphas();

// A similarity counts as a hit at threshold alpha when sim >= alpha - this.
inline constexpr double kAlphaSlack = 1e-10;

struct HotaBreakdown {
  double hota = 0.0;
  double det_a = 0.0;
  double ass_a = 0.0;
  std::vector<double> alphas;
  std::vector<double> hota_alpha;
  std::vector<double> det_a_alpha;
  std::vector<double> ass_a_alpha;
};

// HOTA over every frame of both sides, using 3D IoU as the similarity.
// Both sides empty scores 1, exactly one side empty scores 0. Throws
// InvalidInput on an empty or out-of-range alpha grid or a track id repeated
// within one frame.
HotaBreakdown hota(const Frames& gt, const Frames& pred, std::span<const double> alphas);

// Frames whose timestamp falls in any interval.
Frames restrict_frames(const Frames& frames, const std::vector<traj::TimeInterval>& intervals);

// [first, last] ground-truth frame as a single interval, or nullopt when the
// ground truth is empty.
std::optional<traj::TimeInterval> scenario_timeframe(const Frames& gt);

// Boxes for every mask entry. A track or state missing from the log throws
// InvalidInput naming the entry.
Frames frames_from_mask(const dsl::ScenarioMask& mask, const traj::LogManifest& log);

// One log's worth of evaluation input.
struct LogEval {
  std::string log_id;
  Frames gt;
  Frames pred;
  // Scenario time ranges. Absent means the span of the ground-truth frames.
  std::optional<std::vector<traj::TimeInterval>> scenario;
};

// HOTA restricted to the scenario time ranges. An empty ground truth with no
// explicit ranges leaves the prediction unrestricted, so stray predictions
// still score 0.
HotaBreakdown hota_temporal(const LogEval& input, std::span<const double> alphas);

struct LogScores {
  std::string log_id;
  double hota_temporal = 0.0;
  double hota = 0.0;
  Counts timestamp;
  Prf timestamp_prf;
  bool pred_positive = false;
  bool gt_positive = false;
  std::size_t pred_entries = 0;
  std::size_t gt_entries = 0;
};

struct Summary {
  std::size_t logs = 0;
  double hota_temporal = 0.0;  // mean over logs
  double hota = 0.0;           // mean over logs
  double timestamp_f1 = 0.0;   // frame counts pooled across logs
  double log_f1 = 0.0;         // presence decisions pooled across logs
};

LogScores evaluate_log(const LogEval& input, std::span<const double> alphas);

// Logs are scored independently on up to `threads` workers; output order
// follows input order.
std::vector<LogScores> evaluate_logs(std::span<const LogEval> inputs,
                                     std::span<const double> alphas, unsigned threads = 1);

Summary summarize(std::span<const LogScores> scores);

}  // namespace scenmine::metrics
