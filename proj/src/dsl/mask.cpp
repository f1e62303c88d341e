#include "scenmine/dsl/mask.hpp"

#include <algorithm>
#include <iterator>

namespace scenmine::dsl {

std::set<std::string> ScenarioMask::track_ids() const {
  std::set<std::string> ids;
  for (const auto& e : entries) ids.insert(e.track_id);
  return ids;
}

std::set<std::int64_t> ScenarioMask::timestamps() const {
  std::set<std::int64_t> ts;
  for (const auto& e : entries) ts.insert(e.timestamp_ns);
  return ts;
}

std::size_t symmetric_difference_size(const ScenarioMask& a, const ScenarioMask& b) {
  std::vector<MaskEntry> diff;
  std::set_symmetric_difference(a.entries.begin(), a.entries.end(), b.entries.begin(),
                                b.entries.end(), std::back_inserter(diff));
  return diff.size();
}

ScenarioMask restrict_to(const ScenarioMask& mask,
                         const std::vector<traj::TimeInterval>& intervals) {
  ScenarioMask out;
  out.log_id = mask.log_id;
  for (const auto& e : mask.entries) {
    for (const auto& iv : intervals) {
      if (iv.contains_ns(e.timestamp_ns)) {
        out.entries.insert(e);
        break;
      }
    }
  }
  return out;
}

std::vector<MaskEntry> dangling_entries(const ScenarioMask& mask,
                                        const traj::LogManifest& log) {
  std::vector<MaskEntry> bad;
  for (const auto& e : mask.entries) {
    const traj::Track* t = log.find_track(e.track_id);
    if (t == nullptr || !t->index_at(e.timestamp_ns)) bad.push_back(e);
  }
  return bad;
}

}  // namespace scenmine::dsl
