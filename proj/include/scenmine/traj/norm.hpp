#pragma once

#include <span>

#include "scenmine/traj/track.hpp"

namespace scenmine::traj {

inline constexpr double kMinStd = 1e-8;

// Per-dimension z-score statistics over the 10-dim state vector.
struct NormStats {
  Feature mean{};
  Feature std{};

  bool operator==(const NormStats&) const = default;
};

// Population mean/std over every state of every track; std clamped below by
// kMinStd. Throws InvalidInput when there are no states at all.
NormStats fit_norm_stats(std::span<const Track> tracks);

Feature apply_norm(const NormStats& stats, const TrackState& state);

}  // namespace scenmine::traj
