#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "scenmine/dsl/catalog.hpp"
#include "scenmine/dsl/mask.hpp"
#include "scenmine/traj/track.hpp"

namespace scenmine::kb {

inline constexpr int kKbVersion = 1;

// A query paired with the program that reproduces its ground-truth mask.
// mask.log_id is the reference to the log the program was validated on.
struct KnowledgeTriple {
  std::string triple_id;
  std::string query_text;
  std::vector<float> query_embedding;
  dsl::ScenarioMask mask;
  std::string program_source;
  bool validated = false;
  std::string provenance;

  bool operator==(const KnowledgeTriple&) const = default;
};

enum class RejectReason { None, ParseFailure, EvaluationError, EvaluationMismatch, DuplicateId };

const char* to_string(RejectReason r);

struct InsertResult {
  bool accepted = false;
  RejectReason reason = RejectReason::None;
  // Symmetric-difference size between the evaluated and ground-truth masks.
  std::size_t diff = 0;
  std::string message;
};

struct Retrieved {
  KnowledgeTriple triple;
  double similarity = 0.0;
};

struct Candidate {
  KnowledgeTriple triple;
  const traj::LogManifest* log = nullptr;
};

// Checks a candidate against its log without touching any store. Throws
// InvalidInput when the mask belongs to another log or references tracks or
// timestamps the log does not have.
InsertResult validate_candidate(const KnowledgeTriple& candidate, const traj::LogManifest& log,
                                const dsl::Catalog& catalog = dsl::default_catalog());

// Thread-safe: any number of concurrent readers, one writer at a time.
class KnowledgeBase {
 public:
  explicit KnowledgeBase(std::uint32_t dim = 0) : dim_(dim) {}
  KnowledgeBase(const KnowledgeBase& other);
  KnowledgeBase& operator=(const KnowledgeBase& other);

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const;
  bool empty() const { return size() == 0; }

  InsertResult insert_validated(const KnowledgeTriple& candidate, const traj::LogManifest& log,
                                const dsl::Catalog& catalog = dsl::default_catalog());

  // Validates every candidate, then publishes the accepted ones together.
  // If any candidate throws, nothing from the batch becomes visible.
  std::vector<InsertResult> insert_batch(const std::vector<Candidate>& batch,
                                         const dsl::Catalog& catalog = dsl::default_catalog());

  // Exact cosine top-k, descending, ties by triple_id. k is clipped to size().
  std::vector<Retrieved> knn_retrieve(std::span<const float> query, std::size_t k) const;

  std::vector<KnowledgeTriple> triples() const;
  std::optional<KnowledgeTriple> find(const std::string& triple_id) const;

  // Directory with triples.jsonl, embeddings.smeb and meta.json.
  void save(const std::filesystem::path& dir) const;
  static KnowledgeBase load(const std::filesystem::path& dir);

  bool operator==(const KnowledgeBase& other) const;

 private:
  void check_embedding(const KnowledgeTriple& t) const;
  bool contains_locked(const std::string& id) const;

  std::uint32_t dim_ = 0;
  mutable std::shared_mutex mutex_;
  std::vector<KnowledgeTriple> triples_;
  std::vector<double> norms_;
};

}  // namespace scenmine::kb
