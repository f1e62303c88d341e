#include "scenmine/coarse/windows.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace scenmine::coarse {

namespace {
constexpr double kTimeEps = 1e-9;
}

std::vector<TimeInterval> partition_windows(double duration, double window_s, double stride_s) {
  if (!(window_s > 0) || !(stride_s > 0)) {
    throw InvalidInput("partition_windows: window and stride must be positive");
  }
  if (window_s > duration + kTimeEps) {
    throw InvalidInput("partition_windows: window longer than the log");
  }
  const auto last = static_cast<std::size_t>(std::floor((duration - window_s) / stride_s + kTimeEps));
  std::vector<TimeInterval> out;
  out.reserve(last + 2);
  for (std::size_t i = 0; i <= last; ++i) {
    const double start = static_cast<double>(i) * stride_s;
    out.push_back({start, start + window_s});
  }
  if (out.back().end < duration - kTimeEps) out.push_back({duration - window_s, duration});
  return out;
}

double score_window(std::span<const double> text, std::span<const double> window) {
  if (text.size() != window.size()) throw InvalidInput("score_window: dimension mismatch");
  double dot = 0.0, nt = 0.0, nw = 0.0;
  for (std::size_t k = 0; k < text.size(); ++k) {
    dot += text[k] * window[k];
    nt += text[k] * text[k];
    nw += window[k] * window[k];
  }
  if (nt == 0.0 || nw == 0.0) throw UndefinedSimilarity("cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(nt) * std::sqrt(nw)), -1.0, 1.0);
}

std::vector<std::size_t> uniform_sample(std::size_t count, std::size_t n) {
  std::vector<std::size_t> out;
  if (count == 0 || n == 0) return out;
  if (count <= n) {
    for (std::size_t i = 0; i < count; ++i) out.push_back(i);
    return out;
  }
  if (n == 1) return {(count - 1) / 2};
  for (std::size_t j = 0; j < n; ++j) {
    out.push_back(static_cast<std::size_t>(
        std::llround(static_cast<double>(j) * static_cast<double>(count - 1) /
                     static_cast<double>(n - 1))));
  }
  return out;
}

std::vector<WindowScore> score_log_windows(const EmbeddingStore& store, const std::string& log_id,
                                           double duration,
                                           const std::vector<std::string>& camera_ids,
                                           std::span<const double> text,
                                           const CoarseParams& params) {
  std::vector<WindowScore> out;
  for (const TimeInterval& w : partition_windows(duration, params.window_s, params.stride_s)) {
    WindowScore ws{log_id, w.start, w.end, 0.0};
    for (const auto& cam : camera_ids) {
      const auto frames = store.frames_in(log_id, cam, traj::seconds_to_ns(w.start),
                                          traj::seconds_to_ns(w.end));
      if (frames.empty()) continue;
      std::vector<std::span<const float>> picked;
      for (std::size_t idx : uniform_sample(frames.size(), params.frames_per_view)) {
        picked.push_back(store.row(frames[idx].second));
      }
      ws.score += score_window(text, pool_window(picked));
    }
    out.push_back(std::move(ws));
  }
  return out;
}

std::vector<TimeInterval> TimeRegion::for_log(const std::string& log_id) const {
  auto it = intervals.find(log_id);
  return it == intervals.end() ? std::vector<TimeInterval>{} : it->second;
}

TimeRegion rank_and_merge(std::vector<WindowScore> scores, std::size_t k, double slack_s) {
  if (k == 0) throw InvalidInput("rank_and_merge: k must be >= 1");
  std::sort(scores.begin(), scores.end(), [](const WindowScore& a, const WindowScore& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.start != b.start) return a.start < b.start;
    return a.log_id < b.log_id;
  });
  if (scores.size() > k) scores.resize(k);
  std::map<std::string, std::vector<TimeInterval>> by_log;
  for (const auto& s : scores) by_log[s.log_id].push_back({s.start, s.end});
  TimeRegion region;
  for (auto& [log_id, ivs] : by_log) {
    std::sort(ivs.begin(), ivs.end(), [](const TimeInterval& a, const TimeInterval& b) {
      return std::tie(a.start, a.end) < std::tie(b.start, b.end);
    });
    std::vector<TimeInterval> merged;
    for (const auto& iv : ivs) {
      if (!merged.empty() && iv.start - merged.back().end <= slack_s + kTimeEps) {
        merged.back().end = std::max(merged.back().end, iv.end);
      } else {
        merged.push_back(iv);
      }
    }
    region.intervals[log_id] = std::move(merged);
  }
  return region;
}

traj::LogManifest restrict_tracks(const traj::LogManifest& log,
                                  const std::vector<TimeInterval>& intervals) {
  traj::LogManifest out = log;
  out.tracks.clear();
  out.region = intervals;
  for (const auto& t : log.tracks) {
    const bool overlaps = std::any_of(t.states.begin(), t.states.end(), [&](const auto& s) {
      return std::any_of(intervals.begin(), intervals.end(),
                         [&](const TimeInterval& iv) { return iv.contains_ns(s.timestamp_ns); });
    });
    if (overlaps) out.tracks.push_back(t);
  }
  return out;
}

}  // namespace scenmine::coarse
