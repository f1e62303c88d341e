#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scenmine/coarse/embedding_store.hpp"
#include "scenmine/coarse/terms.hpp"
#include "scenmine/coarse/windows.hpp"
#include "scenmine/dsl/evaluator.hpp"
#include "scenmine/dsl/mask.hpp"
#include "scenmine/kb/knowledge_base.hpp"
#include "scenmine/matcher/checkpoint.hpp"
#include "scenmine/matcher/rank.hpp"
#include "scenmine/pipeline/config.hpp"
#include "scenmine/synth/client.hpp"
#include "scenmine/synth/repair.hpp"
#include "scenmine/traj/track.hpp"

namespace scenmine::pipeline {

// File stems inside paths.embeddings.
inline constexpr const char* kClipStore = "clip";
inline constexpr const char* kSentenceStore = "sentence";
inline constexpr const char* kTokenStore = "tokens";

std::filesystem::path store_smeb(const std::filesystem::path& dir, const std::string& stem);
std::filesystem::path store_index(const std::filesystem::path& dir, const std::string& stem);

// Client selected by synth.client; nullptr for "none".
std::unique_ptr<synth::TextClient> make_client(const SynthConfig& cfg);

// Reads a JSONL file of {"text": ...} records.
std::vector<std::string> read_script(const std::filesystem::path& path);

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

struct CoarseResult {
  std::string log_id;
  std::vector<std::string> query_terms;
  std::string embedding_text;
  std::vector<traj::TimeInterval> region;
  // (track, timestamp) cells in the whole log and inside the region.
  std::size_t cells_total = 0;
  std::size_t cells_in_region = 0;
};

struct MineRequest {
  std::string query;
  // Key of the query's rows in the embedding stores; defaults to the query.
  std::string query_id;
  std::string log_id;
  std::optional<bool> coarse;  // overrides coarse.enabled
};

struct MineResult {
  std::string query;
  std::string log_id;
  std::optional<CoarseResult> coarse;
  std::vector<kb::Retrieved> exemplars;
  synth::SynthesisOutcome synthesis;
  // Mask produced by the program, before fine filtering.
  dsl::ScenarioMask program_mask;
  // Final mask after matcher filtering (equal to program_mask without it).
  dsl::ScenarioMask mask;
  std::vector<matcher::RankedTrack> ranking;
  dsl::EvalStats eval_stats;
  std::vector<StageTiming> timings;
  std::vector<std::string> notes;

  bool flagged() const { return synthesis.status == synth::SynthesisStatus::FlaggedForReview; }
};

// Deterministic rendering; timings are only included when asked for.
nlohmann::json to_json(const MineResult& r, bool include_timings = true);

// Mask file records: {"query":..,"log_id":..,"mask":[[track_id, ts_ns],..]}.
struct MaskRecord {
  std::string query;
  dsl::ScenarioMask mask;
};
std::vector<MaskRecord> read_mask_file(const std::filesystem::path& path);
void write_mask_file(const std::filesystem::path& path, const std::vector<MaskRecord>& records);

// Knowledge-base candidate records, one JSON object per line:
// {"triple_id","query_text","log_id","program_source","mask":[[track_id, ts_ns],..],
//  "provenance"}. The query embedding comes from the sentence store, keyed by
// query_text.
struct CandidateRecord {
  std::string triple_id;
  std::string query_text;
  std::string program_source;
  dsl::ScenarioMask mask;  // mask.log_id names the log
  std::string provenance;
};
std::vector<CandidateRecord> read_candidates(const std::filesystem::path& path);
void write_candidates(const std::filesystem::path& path,
                      const std::vector<CandidateRecord>& records);

// Owns the loaded stores. Stores are loaded on first use; every accessor
// throws DataError with an actionable message when its data is absent.
class Pipeline {
 public:
  // `client` overrides synth.client (used by tests and the scripted demo).
  explicit Pipeline(PipelineConfig cfg, std::unique_ptr<synth::TextClient> client = nullptr);

  const PipelineConfig& config() const { return cfg_; }

  std::vector<std::string> log_ids();
  const traj::LogManifest& log(const std::string& log_id);
  const coarse::Lexicons& lexicons();
  const coarse::EmbeddingStore& clip_store();
  const coarse::EmbeddingStore& sentence_store();
  const coarse::EmbeddingStore& token_store();
  // Empty knowledge base when paths.kb does not exist yet.
  const kb::KnowledgeBase& knowledge_base();
  // nullptr when matcher.enabled is false or no checkpoint is configured.
  const matcher::Checkpoint* checkpoint();

  CoarseResult coarse_filter(const std::string& query, const std::string& query_id,
                             const std::string& log_id);
  synth::PromptBundle prompt_for(const std::string& query, const std::string& query_id,
                                 std::vector<kb::Retrieved>* retrieved = nullptr);
  MineResult mine(const MineRequest& request, synth::AuditLog* audit = nullptr);

  // Program evaluated directly, optionally inside the coarse region.
  MineResult run_program(const std::string& query, const std::string& query_id,
                         const std::string& log_id, const std::string& program_source,
                         bool use_coarse);

 private:
  std::vector<float> text_row(const coarse::EmbeddingStore& store, const std::string& stem,
                              const std::string& query_id);
  void rerank(MineResult& result, const std::string& query_id);

  PipelineConfig cfg_;
  std::unique_ptr<synth::TextClient> client_;
  std::mutex mu_;         // lazy store loading
  std::mutex client_mu_;  // held around generate() for non-thread-safe clients
  std::mutex model_mu_;   // matcher forward passes share scratch state
  std::optional<std::map<std::string, traj::LogManifest>> logs_;
  std::optional<coarse::Lexicons> lexicons_;
  std::optional<coarse::EmbeddingStore> clip_, sentence_, tokens_;
  std::optional<kb::KnowledgeBase> kb_;
  std::optional<std::optional<matcher::Checkpoint>> checkpoint_;
};

}  // namespace scenmine::pipeline
