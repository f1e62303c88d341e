#include "scenmine/kb/knowledge_base.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "scenmine/coarse/embedding_store.hpp"
#include "scenmine/dsl/evaluator.hpp"
#include "scenmine/dsl/parser.hpp"
#include "scenmine/errors.hpp"

namespace scenmine::kb {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(RejectReason r) {
  switch (r) {
    case RejectReason::None: return "none";
    case RejectReason::ParseFailure: return "parse_failure";
    case RejectReason::EvaluationError: return "evaluation_error";
    case RejectReason::EvaluationMismatch: return "evaluation_mismatch";
    case RejectReason::DuplicateId: return "duplicate_id";
  }
  return "unknown";
}

namespace {

double norm_of(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

InsertResult reject(RejectReason r, std::string message, std::size_t diff = 0) {
  return {false, r, diff, std::move(message)};
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw FormatError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint32_t crc_of(const std::string& bytes) {
  uLong c = crc32(0L, Z_NULL, 0);
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
    c = crc32(c, reinterpret_cast<const Bytef*>(bytes.data() + off), n);
    off += n;
  }
  return static_cast<std::uint32_t>(c);
}

json triple_to_json(const KnowledgeTriple& t, std::size_t row) {
  json entries = json::array();
  for (const auto& e : t.mask.entries) entries.push_back(json::array({e.track_id, e.timestamp_ns}));
  return {{"triple_id", t.triple_id},       {"query_text", t.query_text},
          {"program_source", t.program_source}, {"log_id", t.mask.log_id},
          {"mask", entries},                {"validated", t.validated},
          {"provenance", t.provenance},     {"row", row}};
}

}  // namespace

InsertResult validate_candidate(const KnowledgeTriple& candidate, const traj::LogManifest& log,
                                const dsl::Catalog& catalog) {
  if (candidate.mask.log_id != log.log_id) {
    throw InvalidInput("mask of " + candidate.triple_id + " belongs to log '" +
                       candidate.mask.log_id + "', not '" + log.log_id + "'");
  }
  if (const auto d = dsl::dangling_entries(candidate.mask, log); !d.empty()) {
    throw InvalidInput("mask of " + candidate.triple_id + " references (" + d.front().track_id +
                       ", " + std::to_string(d.front().timestamp_ns) + ") absent from the log");
  }
  dsl::ScenarioProgram program;
  try {
    program = dsl::parse(candidate.program_source, catalog);
  } catch (const dsl::ParseError& e) {
    return reject(RejectReason::ParseFailure, e.what());
  }
  dsl::ScenarioMask got;
  try {
    traj::LogManifest whole = log;
    whole.region.reset();
    got = dsl::evaluate(program, whole, catalog);
  } catch (const std::exception& e) {
    return reject(RejectReason::EvaluationError, e.what());
  }
  const std::size_t diff = dsl::symmetric_difference_size(got, candidate.mask);
  if (diff != 0) {
    return reject(RejectReason::EvaluationMismatch,
                  "evaluated mask differs from ground truth in " + std::to_string(diff) +
                      " entries",
                  diff);
  }
  return {true, RejectReason::None, 0, {}};
}

KnowledgeBase::KnowledgeBase(const KnowledgeBase& other) {
  std::shared_lock lock(other.mutex_);
  dim_ = other.dim_;
  triples_ = other.triples_;
  norms_ = other.norms_;
}

KnowledgeBase& KnowledgeBase::operator=(const KnowledgeBase& other) {
  if (this == &other) return *this;
  KnowledgeBase copy(other);
  std::unique_lock lock(mutex_);
  dim_ = copy.dim_;
  triples_ = std::move(copy.triples_);
  norms_ = std::move(copy.norms_);
  return *this;
}

std::size_t KnowledgeBase::size() const {
  std::shared_lock lock(mutex_);
  return triples_.size();
}

void KnowledgeBase::check_embedding(const KnowledgeTriple& t) const {
  if (t.query_embedding.size() != dim_) {
    throw InvalidInput("embedding of " + t.triple_id + " has dimension " +
                       std::to_string(t.query_embedding.size()) + ", store expects " +
                       std::to_string(dim_));
  }
  if (norm_of(t.query_embedding) == 0.0) {
    throw UndefinedSimilarity("embedding of " + t.triple_id + " is the zero vector");
  }
}

bool KnowledgeBase::contains_locked(const std::string& id) const {
  return std::any_of(triples_.begin(), triples_.end(),
                     [&](const KnowledgeTriple& t) { return t.triple_id == id; });
}

InsertResult KnowledgeBase::insert_validated(const KnowledgeTriple& candidate,
                                             const traj::LogManifest& log,
                                             const dsl::Catalog& catalog) {
  return insert_batch({{candidate, &log}}, catalog).front();
}

std::vector<InsertResult> KnowledgeBase::insert_batch(const std::vector<Candidate>& batch,
                                                      const dsl::Catalog& catalog) {
  std::vector<InsertResult> results;
  results.reserve(batch.size());
  for (const auto& c : batch) {
    if (c.log == nullptr) throw InvalidInput("candidate " + c.triple.triple_id + " has no log");
    check_embedding(c.triple);
    results.push_back(validate_candidate(c.triple, *c.log, catalog));
  }

  std::unique_lock lock(mutex_);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& id = batch[i].triple.triple_id;
    if (contains_locked(id) || seen.count(id)) {
      results[i] = reject(RejectReason::DuplicateId, "triple id '" + id + "' already present");
    } else if (results[i].accepted) {
      seen.insert(id);
    }
  }
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!results[i].accepted) continue;
    KnowledgeTriple t = batch[i].triple;
    t.validated = true;
    norms_.push_back(norm_of(t.query_embedding));
    triples_.push_back(std::move(t));
  }
  return results;
}

std::vector<Retrieved> KnowledgeBase::knn_retrieve(std::span<const float> query,
                                                   std::size_t k) const {
  if (k == 0) throw InvalidInput("k must be at least 1");
  if (query.size() != dim_) throw InvalidInput("query dimension does not match the store");
  const double qn = norm_of(query);
  if (qn == 0.0) throw UndefinedSimilarity("query embedding is the zero vector");

  std::shared_lock lock(mutex_);
  if (triples_.empty()) throw InvalidInput("knowledge base is empty");
  std::vector<double> sims(triples_.size());
  for (std::size_t i = 0; i < triples_.size(); ++i) {
    double dot = 0.0;
    const auto& e = triples_[i].query_embedding;
    for (std::size_t d = 0; d < dim_; ++d) dot += static_cast<double>(query[d]) * e[d];
    sims[i] = dot / (qn * norms_[i]);
  }
  std::vector<std::size_t> order(triples_.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t n = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (sims[a] != sims[b]) return sims[a] > sims[b];
                      return triples_[a].triple_id < triples_[b].triple_id;
                    });
  std::vector<Retrieved> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back({triples_[order[i]], sims[order[i]]});
  return out;
}

std::vector<KnowledgeTriple> KnowledgeBase::triples() const {
  std::shared_lock lock(mutex_);
  return triples_;
}

std::optional<KnowledgeTriple> KnowledgeBase::find(const std::string& triple_id) const {
  std::shared_lock lock(mutex_);
  for (const auto& t : triples_)
    if (t.triple_id == triple_id) return t;
  return std::nullopt;
}

bool KnowledgeBase::operator==(const KnowledgeBase& other) const {
  if (this == &other) return true;
  std::shared_lock a(mutex_);
  std::shared_lock b(other.mutex_);
  return dim_ == other.dim_ && triples_ == other.triples_;
}

void KnowledgeBase::save(const fs::path& dir) const {
  std::shared_lock lock(mutex_);
  fs::create_directories(dir);

  std::string lines;
  coarse::SmebMatrix m;
  m.dim = dim_;
  m.rows = triples_.size();
  m.data.reserve(triples_.size() * dim_);
  for (std::size_t i = 0; i < triples_.size(); ++i) {
    lines += triple_to_json(triples_[i], i).dump();
    lines += '\n';
    m.data.insert(m.data.end(), triples_[i].query_embedding.begin(),
                  triples_[i].query_embedding.end());
  }
  {
    std::ofstream out(dir / "triples.jsonl", std::ios::binary | std::ios::trunc);
    out << lines;
    if (!out) throw Error("failed to write " + (dir / "triples.jsonl").string());
  }
  coarse::write_smeb(dir / "embeddings.smeb", m);

  json meta = {{"version", kKbVersion},
               {"dim", dim_},
               {"count", triples_.size()},
               {"checksums",
                {{"triples.jsonl", crc_of(lines)},
                 {"embeddings.smeb", crc_of(read_bytes(dir / "embeddings.smeb"))}}}};
  std::ofstream out(dir / "meta.json", std::ios::trunc);
  out << meta.dump(2) << '\n';
  if (!out) throw Error("failed to write " + (dir / "meta.json").string());
}

KnowledgeBase KnowledgeBase::load(const fs::path& dir) {
  json meta;
  try {
    meta = json::parse(read_bytes(dir / "meta.json"));
  } catch (const json::exception& e) {
    throw FormatError("meta.json: " + std::string(e.what()));
  }
  if (!meta.is_object() || meta.value("version", -1) != kKbVersion) {
    throw FormatError("knowledge base version mismatch (expected " + std::to_string(kKbVersion) +
                      ")");
  }
  const std::string lines = read_bytes(dir / "triples.jsonl");
  const std::string smeb = read_bytes(dir / "embeddings.smeb");
  try {
    if (crc_of(lines) != meta.at("checksums").at("triples.jsonl").get<std::uint32_t>()) {
      throw FormatError("checksum failure in triples.jsonl");
    }
    if (crc_of(smeb) != meta.at("checksums").at("embeddings.smeb").get<std::uint32_t>()) {
      throw FormatError("checksum failure in embeddings.smeb");
    }
  } catch (const json::exception& e) {
    throw FormatError("meta.json: " + std::string(e.what()));
  }
  const auto m = coarse::read_smeb(dir / "embeddings.smeb");
  const auto dim = meta.value("dim", 0u);
  const auto count = meta.value("count", std::size_t{0});
  if (m.dim != dim || m.rows != count) {
    throw FormatError("embeddings.smeb shape disagrees with meta.json");
  }

  KnowledgeBase kb(dim);
  std::istringstream in(lines);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      KnowledgeTriple t;
      t.triple_id = j.at("triple_id").get<std::string>();
      t.query_text = j.at("query_text").get<std::string>();
      t.program_source = j.at("program_source").get<std::string>();
      t.mask.log_id = j.at("log_id").get<std::string>();
      for (const auto& e : j.at("mask")) {
        t.mask.entries.insert({e.at(0).get<std::string>(), e.at(1).get<std::int64_t>()});
      }
      t.validated = j.at("validated").get<bool>();
      t.provenance = j.at("provenance").get<std::string>();
      const auto row = j.at("row").get<std::size_t>();
      if (row >= m.rows) throw FormatError("row out of range");
      const auto r = m.row(row);
      t.query_embedding.assign(r.begin(), r.end());
      if (kb.contains_locked(t.triple_id)) throw FormatError("duplicate triple id");
      kb.norms_.push_back(norm_of(t.query_embedding));
      kb.triples_.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw FormatError("triples.jsonl line " + std::to_string(lineno) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("triples.jsonl line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (kb.triples_.size() != count) throw FormatError("triple count disagrees with meta.json");
  return kb;
}

}  // namespace scenmine::kb
