#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "scenmine/coarse/embedding_store.hpp"
#include "scenmine/errors.hpp"
#include "scenmine/traj/track.hpp"

namespace scenmine::coarse {

using traj::TimeInterval;

struct CoarseParams {
  double window_s = 3.0;      // W
  double stride_s = 1.0;      // S
  std::size_t frames_per_view = 5;  // n
  std::size_t top_k = 5;      // k
  double merge_slack_s = 0.0;
};

// Windows [iS, iS+W] for i = 0..floor((duration-W)/S), plus a terminal
// window [duration-W, duration] when the tail is not already covered.
// Throws InvalidInput when W > duration, W <= 0 or S <= 0.
std::vector<TimeInterval> partition_windows(double duration, double window_s, double stride_s);

// Arithmetic mean of the frames. Throws InvalidInput on an empty list or
// mixed dimensions.
template <typename T>
std::vector<double> pool_window(const std::vector<std::span<const T>>& frames) {
  if (frames.empty()) throw InvalidInput("pool_window: no frames");
  const std::size_t d = frames.front().size();
  std::vector<double> sum(d, 0.0);
  for (const auto& f : frames) {
    if (f.size() != d) throw InvalidInput("pool_window: frames have different dimensions");
    for (std::size_t k = 0; k < d; ++k) sum[k] += static_cast<double>(f[k]);
  }
  for (double& v : sum) v /= static_cast<double>(frames.size());
  return sum;
}

// Cosine similarity. Throws UndefinedSimilarity when either vector is zero.
double score_window(std::span<const double> text, std::span<const double> window);

// Evenly spaced picks of `n` out of `count` ordered items (all when count <= n).
std::vector<std::size_t> uniform_sample(std::size_t count, std::size_t n);

struct WindowScore {
  std::string log_id;
  double start = 0.0;
  double end = 0.0;
  double score = 0.0;  // similarity summed over camera views
};

// Scores every window of a log against the text embedding; each camera view
// contributes the cosine of its pooled window embedding, views with no frames
// in a window contribute 0.
std::vector<WindowScore> score_log_windows(const EmbeddingStore& store, const std::string& log_id,
                                           double duration,
                                           const std::vector<std::string>& camera_ids,
                                           std::span<const double> text,
                                           const CoarseParams& params);

// Merged candidate intervals per log; disjoint, sorted and non-adjacent.
struct TimeRegion {
  std::map<std::string, std::vector<TimeInterval>> intervals;

  bool empty() const { return intervals.empty(); }
  std::vector<TimeInterval> for_log(const std::string& log_id) const;
};

// Keeps the k best windows (score descending, then earlier start, then log id)
// and merges, per log, windows whose gap is <= slack_s.
TimeRegion rank_and_merge(std::vector<WindowScore> scores, std::size_t k, double slack_s = 0.0);

// Tracks with at least one state inside `intervals`; all their states are
// kept and the log is tagged with the region.
traj::LogManifest restrict_tracks(const traj::LogManifest& log,
                                  const std::vector<TimeInterval>& intervals);

}  // namespace scenmine::coarse
