#pragma once

#include <compare>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "scenmine/traj/track.hpp"

namespace scenmine::dsl {

struct MaskEntry {
  std::string track_id;
  std::int64_t timestamp_ns = 0;

  auto operator<=>(const MaskEntry&) const = default;
  bool operator==(const MaskEntry&) const = default;
};

// The (track, timestamp) cells a query denotes within one log.
struct ScenarioMask {
  std::string log_id;
  std::set<MaskEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
  std::set<std::string> track_ids() const;
  std::set<std::int64_t> timestamps() const;

  bool operator==(const ScenarioMask&) const = default;
};

// |a \ b| + |b \ a| over entries (log ids are not compared).
std::size_t symmetric_difference_size(const ScenarioMask& a, const ScenarioMask& b);

// Entries whose timestamps fall inside any interval.
ScenarioMask restrict_to(const ScenarioMask& mask,
                         const std::vector<traj::TimeInterval>& intervals);

// Entries referencing unknown tracks or timestamps absent from the track.
std::vector<MaskEntry> dangling_entries(const ScenarioMask& mask,
                                        const traj::LogManifest& log);

}  // namespace scenmine::dsl
