#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "scenmine/coarse/embedding_store.hpp"
#include "scenmine/dsl/mask.hpp"
#include "scenmine/pipeline/pipeline.hpp"
#include "scenmine/traj/track.hpp"

namespace scenmine::demo {

struct PlantedOptions {
  std::uint64_t seed = 7;
  int logs = 10;
  int positive_logs = 7;   // the first ones carry the event
  double duration_s = 30.0;
  double frame_rate = 10.0;
  int cameras = 7;
  int clip_dim = 32;
  int sentence_dim = 16;
  int token_dim = 16;
  int tokens_per_query = 4;
  double event_s = 2.5;
};

// Synthetic logs in which a pedestrian steps in front of one vehicle for
// `event_s` seconds. Frame embeddings carry the query direction only during
// the event, so the event's windows score highest.
struct PlantedDataset {
  std::string query;
  std::string program;
  std::vector<traj::LogManifest> logs;
  // Event interval per positive log.
  std::map<std::string, traj::TimeInterval> events;
  // Cells of the event vehicle during the event; empty for negative logs.
  std::map<std::string, dsl::ScenarioMask> planted;
  coarse::EmbeddingStore clip;
  coarse::EmbeddingStore sentence;
  coarse::EmbeddingStore tokens;
  // Knowledge-base candidates for other queries; the last one carries a
  // deliberately wrong mask.
  std::vector<pipeline::CandidateRecord> candidates;
};

PlantedDataset make_planted_dataset(const PlantedOptions& options = {});

// Writes logs/, embeddings/, kb_candidates.jsonl, ground_truth.jsonl,
// responses.jsonl (one scripted reply per log) and scenmine.conf.
void write_planted_dataset(const PlantedDataset& data, const std::filesystem::path& dir);

}  // namespace scenmine::demo
