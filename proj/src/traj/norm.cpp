#include "scenmine/traj/norm.hpp"

#include <algorithm>
#include <cmath>

#include "scenmine/errors.hpp"

namespace scenmine::traj {

NormStats fit_norm_stats(std::span<const Track> tracks) {
  // Welford accumulation, population variance.
  Feature mean{};
  Feature m2{};
  std::size_t count = 0;
  for (const auto& track : tracks) {
    for (const auto& state : track.states) {
      ++count;
      const Feature u = state.features();
      for (int d = 0; d < kStateDim; ++d) {
        const double delta = u[d] - mean[d];
        mean[d] += delta / static_cast<double>(count);
        m2[d] += delta * (u[d] - mean[d]);
      }
    }
  }
  if (count == 0) throw InvalidInput("fit_norm_stats: no states to fit");
  NormStats stats;
  stats.mean = mean;
  for (int d = 0; d < kStateDim; ++d) {
    stats.std[d] = std::max(std::sqrt(m2[d] / static_cast<double>(count)), kMinStd);
  }
  return stats;
}

Feature apply_norm(const NormStats& stats, const TrackState& state) {
  Feature u = state.features();
  for (int d = 0; d < kStateDim; ++d) u[d] = (u[d] - stats.mean[d]) / stats.std[d];
  return u;
}

}  // namespace scenmine::traj
