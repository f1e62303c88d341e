#include "scenmine/pipeline/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "scenmine/dsl/catalog.hpp"
#include "scenmine/dsl/parser.hpp"
#include "scenmine/synth/prompt.hpp"
#include "scenmine/traj/log_io.hpp"

namespace scenmine::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

fs::path store_smeb(const fs::path& dir, const std::string& stem) { return dir / (stem + ".smeb"); }
fs::path store_index(const fs::path& dir, const std::string& stem) {
  return dir / (stem + ".index.jsonl");
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string exporter_hint(const fs::path& dir, const std::string& stem, const char* input_flag) {
  return "; produce it with the embed-export tool (" + std::string(input_flag) + " ... --out " +
         store_smeb(dir, stem).string() + ")";
}

// Serializes generate() when the wrapped client is not thread-safe.
class SerializedClient : public synth::TextClient {
 public:
  SerializedClient(synth::TextClient& inner, std::mutex& mu) : inner_(inner), mu_(mu) {}
  synth::GenerationResponse generate(const synth::GenerationRequest& r) override {
    if (inner_.thread_safe()) return inner_.generate(r);
    std::lock_guard lock(mu_);
    return inner_.generate(r);
  }

 private:
  synth::TextClient& inner_;
  std::mutex& mu_;
};

json intervals_json(const std::vector<traj::TimeInterval>& v) {
  json out = json::array();
  for (const auto& iv : v) out.push_back({iv.start, iv.end});
  return out;
}

json mask_json(const dsl::ScenarioMask& m) {
  json out = json::array();
  for (const auto& e : m.entries) out.push_back({e.track_id, e.timestamp_ns});
  return out;
}

}  // namespace

std::vector<std::string> read_script(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read client script " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line).at("text").get<std::string>());
    } catch (const json::exception& e) {
      throw DataError("client script " + path.string() + ": " + e.what());
    }
  }
  return out;
}

std::unique_ptr<synth::TextClient> make_client(const SynthConfig& cfg) {
  if (cfg.client == "http") {
    return std::make_unique<synth::HttpClient>(
        cfg.endpoint, cfg.model,
        std::chrono::milliseconds(static_cast<long>(cfg.timeout_s * 1000)));
  }
  if (cfg.client == "process") return std::make_unique<synth::ProcessClient>(cfg.command);
  if (cfg.client == "scripted") return std::make_unique<synth::ScriptedClient>(read_script(cfg.script));
  return nullptr;
}

json to_json(const MineResult& r, bool include_timings) {
  json j;
  j["query"] = r.query;
  j["log_id"] = r.log_id;
  if (r.coarse) {
    j["coarse"] = {{"query_terms", r.coarse->query_terms},
                   {"embedding_text", r.coarse->embedding_text},
                   {"region", intervals_json(r.coarse->region)},
                   {"cells_total", r.coarse->cells_total},
                   {"cells_in_region", r.coarse->cells_in_region}};
  }
  json ex = json::array();
  for (const auto& e : r.exemplars) ex.push_back({{"triple_id", e.triple.triple_id}, {"similarity", e.similarity}});
  j["exemplars"] = ex;
  json attempts = json::array();
  for (const auto& a : r.synthesis.attempts) attempts.push_back({{"program", a.program_source}, {"error", a.error}});
  j["synthesis"] = {{"status", synth::to_string(r.synthesis.status)},
                    {"calls_made", r.synthesis.calls_made},
                    {"attempts", attempts}};
  j["program_mask"] = mask_json(r.program_mask);
  j["mask"] = mask_json(r.mask);
  json ranking = json::array();
  for (const auto& t : r.ranking) {
    ranking.push_back({{"track_id", t.track_id},
                       {"score", std::isfinite(t.score) ? json(t.score) : json(nullptr)},
                       {"cosine", t.cosine},
                       {"evidence", t.evidence}});
  }
  j["ranking"] = ranking;
  j["eval_stats"] = {{"cells_evaluated", r.eval_stats.cells_evaluated},
                     {"relation_checks", r.eval_stats.relation_checks}};
  j["notes"] = r.notes;
  if (include_timings) {
    json t = json::object();
    for (const auto& s : r.timings) t[s.stage] = s.ms;
    j["timings_ms"] = t;
  }
  return j;
}

std::vector<MaskRecord> read_mask_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read mask file " + path.string());
  std::vector<MaskRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      MaskRecord r;
      r.query = j.at("query").get<std::string>();
      r.mask.log_id = j.at("log_id").get<std::string>();
      for (const auto& e : j.at("mask")) {
        r.mask.entries.insert({e.at(0).get<std::string>(), e.at(1).get<std::int64_t>()});
      }
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw DataError(path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_mask_file(const fs::path& path, const std::vector<MaskRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write mask file " + path.string());
  for (const auto& r : records) {
    out << json{{"query", r.query}, {"log_id", r.mask.log_id}, {"mask", mask_json(r.mask)}}.dump()
        << '\n';
  }
}

std::vector<CandidateRecord> read_candidates(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read candidates file " + path.string());
  std::vector<CandidateRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      CandidateRecord r;
      r.triple_id = j.at("triple_id").get<std::string>();
      r.query_text = j.at("query_text").get<std::string>();
      r.program_source = j.at("program_source").get<std::string>();
      r.provenance = j.value("provenance", "");
      r.mask.log_id = j.at("log_id").get<std::string>();
      for (const auto& e : j.at("mask")) {
        r.mask.entries.insert({e.at(0).get<std::string>(), e.at(1).get<std::int64_t>()});
      }
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw DataError(path.string() + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_candidates(const fs::path& path, const std::vector<CandidateRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write candidates file " + path.string());
  for (const auto& r : records) {
    out << json{{"triple_id", r.triple_id},
                {"query_text", r.query_text},
                {"log_id", r.mask.log_id},
                {"program_source", r.program_source},
                {"mask", mask_json(r.mask)},
                {"provenance", r.provenance}}
               .dump()
        << '\n';
  }
}

Pipeline::Pipeline(PipelineConfig cfg, std::unique_ptr<synth::TextClient> client)
    : cfg_(std::move(cfg)), client_(std::move(client)) {
  validate(cfg_);
  if (!client_) client_ = make_client(cfg_.synth);
}

std::vector<std::string> Pipeline::log_ids() {
  std::lock_guard lock(mu_);
  if (!logs_) {
    if (!fs::is_directory(cfg_.paths.logs)) {
      throw DataError("log directory " + cfg_.paths.logs.string() + " does not exist");
    }
    try {
      logs_ = traj::load_log_dir(cfg_.paths.logs);
    } catch (const Error& e) {
      throw DataError(std::string("loading logs: ") + e.what());
    }
  }
  std::vector<std::string> ids;
  for (const auto& [id, l] : *logs_) ids.push_back(id);
  return ids;
}

const traj::LogManifest& Pipeline::log(const std::string& log_id) {
  const auto ids = log_ids();
  std::lock_guard lock(mu_);
  const auto it = logs_->find(log_id);
  if (it == logs_->end()) {
    std::string list;
    for (const auto& id : ids) list += (list.empty() ? "" : ", ") + id;
    throw DataError("unknown log id '" + log_id + "'; available: " + (list.empty() ? "(none)" : list));
  }
  return it->second;
}

const coarse::Lexicons& Pipeline::lexicons() {
  std::lock_guard lock(mu_);
  if (!lexicons_) {
    lexicons_ = cfg_.paths.lexicons.empty() ? coarse::Lexicons::defaults()
                                            : coarse::Lexicons::load(cfg_.paths.lexicons);
  }
  return *lexicons_;
}

namespace {

const coarse::EmbeddingStore& load_store(std::optional<coarse::EmbeddingStore>& slot,
                                         const fs::path& dir, const std::string& stem,
                                         const char* input_flag) {
  if (!slot) {
    const auto smeb = store_smeb(dir, stem);
    const auto index = store_index(dir, stem);
    if (!fs::exists(smeb) || !fs::exists(index)) {
      throw DataError("embedding store " + smeb.string() + " not found" +
                      exporter_hint(dir, stem, input_flag));
    }
    try {
      slot = coarse::EmbeddingStore::load(smeb, index);
    } catch (const Error& e) {
      throw DataError("embedding store " + smeb.string() + ": " + e.what());
    }
  }
  return *slot;
}

}  // namespace

const coarse::EmbeddingStore& Pipeline::clip_store() {
  std::lock_guard lock(mu_);
  return load_store(clip_, cfg_.paths.embeddings, kClipStore, "--frames-dir/--texts-file");
}

const coarse::EmbeddingStore& Pipeline::sentence_store() {
  std::lock_guard lock(mu_);
  return load_store(sentence_, cfg_.paths.embeddings, kSentenceStore, "--texts-file");
}

const coarse::EmbeddingStore& Pipeline::token_store() {
  std::lock_guard lock(mu_);
  return load_store(tokens_, cfg_.paths.embeddings, kTokenStore, "--texts-file");
}

const kb::KnowledgeBase& Pipeline::knowledge_base() {
  std::lock_guard lock(mu_);
  if (!kb_) {
    if (fs::exists(cfg_.paths.kb / "meta.json")) {
      try {
        kb_ = kb::KnowledgeBase::load(cfg_.paths.kb);
      } catch (const Error& e) {
        throw DataError("knowledge base " + cfg_.paths.kb.string() + ": " + e.what());
      }
    } else {
      kb_ = kb::KnowledgeBase();
    }
  }
  return *kb_;
}

const matcher::Checkpoint* Pipeline::checkpoint() {
  std::lock_guard lock(mu_);
  if (!checkpoint_) {
    checkpoint_.emplace();
    if (cfg_.matcher.enabled && !cfg_.paths.checkpoint.empty()) {
      if (!fs::exists(cfg_.paths.checkpoint)) {
        throw DataError("matcher checkpoint " + cfg_.paths.checkpoint.string() +
                        " not found; create it with `scenmine train-matcher`");
      }
      try {
        *checkpoint_ = matcher::load_checkpoint(cfg_.paths.checkpoint);
      } catch (const Error& e) {
        throw DataError("matcher checkpoint: " + std::string(e.what()));
      }
    }
  }
  return checkpoint_->has_value() ? &**checkpoint_ : nullptr;
}

std::vector<float> Pipeline::text_row(const coarse::EmbeddingStore& store, const std::string& stem,
                                      const std::string& query_id) {
  const auto row = store.text_row(query_id);
  if (!row) {
    throw DataError("no '" + stem + "' text embedding for query id '" + query_id + "'" +
                    exporter_hint(cfg_.paths.embeddings, stem, "--texts-file"));
  }
  const auto v = store.row(*row);
  return {v.begin(), v.end()};
}

CoarseResult Pipeline::coarse_filter(const std::string& query, const std::string& query_id,
                                     const std::string& log_id) {
  const auto& lg = log(log_id);
  const auto& store = clip_store();
  if (!store.has_log(log_id)) {
    throw DataError("no frame embeddings for log '" + log_id + "'" +
                    exporter_hint(cfg_.paths.embeddings, kClipStore, "--frames-dir"));
  }
  CoarseResult r;
  r.log_id = log_id;
  r.query_terms = coarse::extract_query_terms(query, lexicons());
  r.embedding_text = coarse::embedding_text(query, lexicons(), cfg_.coarse.query_embedding);
  const auto text_f = text_row(store, kClipStore, query_id);
  const std::vector<double> text(text_f.begin(), text_f.end());
  const auto cameras = lg.camera_ids.empty() ? store.cameras(log_id) : lg.camera_ids;
  auto scores =
      coarse::score_log_windows(store, log_id, lg.duration, cameras, text, cfg_.coarse.params);
  r.region = coarse::rank_and_merge(std::move(scores), cfg_.coarse.params.top_k,
                                    cfg_.coarse.params.merge_slack_s)
                 .for_log(log_id);
  for (const auto& t : lg.tracks) {
    for (const auto& s : t.states) {
      ++r.cells_total;
      for (const auto& iv : r.region) {
        if (iv.contains_ns(s.timestamp_ns)) {
          ++r.cells_in_region;
          break;
        }
      }
    }
  }
  return r;
}

synth::PromptBundle Pipeline::prompt_for(const std::string& query, const std::string& query_id,
                                         std::vector<kb::Retrieved>* retrieved) {
  const auto& base = knowledge_base();
  std::vector<synth::Exemplar> exemplars;
  if (!base.empty()) {
    const auto v = text_row(sentence_store(), kSentenceStore, query_id);
    auto hits = base.knn_retrieve(v, cfg_.synth.exemplars);
    for (const auto& h : hits) {
      exemplars.push_back({h.triple.query_text, h.triple.program_source, h.similarity});
    }
    if (retrieved) *retrieved = std::move(hits);
  }
  const auto& catalog = dsl::default_catalog();
  return synth::assemble_prompt(query, std::move(exemplars), catalog.render_doc(),
                                catalog.categories(), cfg_.synth.exemplars);
}

void Pipeline::rerank(MineResult& result, const std::string& query_id) {
  auto t0 = Clock::now();
  const matcher::Checkpoint* ck = checkpoint();
  if (!ck) {
    result.notes.push_back("re-ranking skipped: no matcher checkpoint configured");
    return;
  }
  if (result.program_mask.empty()) return;

  const auto& store = token_store();
  const auto rows = store.token_rows(query_id);
  if (rows.empty()) {
    throw DataError("no token embeddings for query id '" + query_id + "'" +
                    exporter_hint(cfg_.paths.embeddings, kTokenStore, "--texts-file"));
  }
  const int text_dim = ck->model.config().text_dim;
  if (store.dim() != static_cast<std::uint32_t>(text_dim)) {
    throw DataError("token store width " + std::to_string(store.dim()) +
                    " does not match the checkpoint's text_dim " + std::to_string(text_dim));
  }
  matcher::Mat tokens(static_cast<Eigen::Index>(rows.size()), text_dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto v = store.row(rows[i]);
    for (int k = 0; k < text_dim; ++k) tokens(static_cast<Eigen::Index>(i), k) = v[k];
  }

  // Each candidate is the segment of its track that the program selected.
  const auto& lg = log(result.log_id);
  std::map<std::string, std::vector<std::int64_t>> selected;
  for (const auto& e : result.program_mask.entries) selected[e.track_id].push_back(e.timestamp_ns);
  std::vector<traj::Track> candidates;
  for (const auto& [id, stamps] : selected) {
    const traj::Track* full = lg.find_track(id);
    traj::Track seg{full->track_id, full->category, {}};
    for (auto ts : stamps) seg.states.push_back(full->states[*full->index_at(ts)]);
    candidates.push_back(std::move(seg));
  }
  {
    std::lock_guard lock(model_mu_);
    matcher::Model& model = (*checkpoint_)->model;
    result.ranking = matcher::rank_candidates(tokens, candidates, model, ck->norm,
                                              cfg_.matcher.model.alpha, cfg_.threads);
  }
  if (cfg_.matcher.min_score) {
    std::set<std::string> dropped;
    for (const auto& t : result.ranking) {
      if (!(t.score >= *cfg_.matcher.min_score)) dropped.insert(t.track_id);
    }
    for (auto it = result.mask.entries.begin(); it != result.mask.entries.end();) {
      it = dropped.count(it->track_id) ? result.mask.entries.erase(it) : std::next(it);
    }
    if (!dropped.empty()) {
      result.notes.push_back("matcher dropped " + std::to_string(dropped.size()) +
                             " track(s) below min_score");
    }
  }
  result.timings.push_back({"rerank", ms_since(t0)});
}

MineResult Pipeline::mine(const MineRequest& req, synth::AuditLog* audit) {
  const auto t_total = Clock::now();
  synth::AuditLog local;
  if (!audit) audit = &local;
  const std::string query_id = req.query_id.empty() ? req.query : req.query_id;

  MineResult r;
  r.query = req.query;
  r.log_id = req.log_id;
  const traj::LogManifest& full = log(req.log_id);
  if (!client_) {
    throw ConfigError("synth.client is 'none': configure a text-generation client to mine");
  }

  auto t0 = Clock::now();
  traj::LogManifest target = full;
  if (req.coarse.value_or(cfg_.coarse.enabled)) {
    r.coarse = coarse_filter(req.query, query_id, req.log_id);
    target = coarse::restrict_tracks(full, r.coarse->region);
    r.timings.push_back({"coarse", ms_since(t0)});
    audit->record(json{{"record", "stage"},
                       {"stage", "coarse"},
                       {"query", req.query},
                       {"log_id", req.log_id},
                       {"region", intervals_json(r.coarse->region)},
                       {"cells_in_region", r.coarse->cells_in_region},
                       {"cells_total", r.coarse->cells_total}}
                      .dump());
  }

  t0 = Clock::now();
  const auto bundle = prompt_for(req.query, query_id, &r.exemplars);
  r.timings.push_back({"retrieve", ms_since(t0)});
  json ex = json::array();
  for (const auto& e : r.exemplars) ex.push_back({e.triple.triple_id, e.similarity});
  audit->record(json{{"record", "stage"}, {"stage", "retrieve"}, {"exemplars", ex}}.dump());
  if (r.exemplars.empty()) r.notes.push_back("no knowledge-base exemplars: zero-shot prompt");

  t0 = Clock::now();
  synth::RepairOptions opts;
  opts.max_attempts = cfg_.synth.max_attempts;
  opts.temperature = cfg_.synth.temperature;
  opts.max_tokens = cfg_.synth.max_tokens;
  opts.stats = &r.eval_stats;
  SerializedClient client(*client_, client_mu_);
  r.synthesis = synth::repair_loop(client, bundle, target, opts, dsl::default_catalog(), audit);
  r.timings.push_back({"synthesize", ms_since(t0)});

  if (!r.flagged()) {
    r.program_mask = *r.synthesis.mask;
    r.program_mask.log_id = req.log_id;
    r.mask = r.program_mask;
    rerank(r, query_id);
  } else {
    r.program_mask.log_id = req.log_id;
    r.mask.log_id = req.log_id;
    r.notes.push_back("flagged for review after " + std::to_string(r.synthesis.calls_made) +
                      " attempt(s)");
  }
  r.timings.push_back({"total", ms_since(t_total)});
  audit->record(json{{"record", "stage"},
                     {"stage", "result"},
                     {"log_id", req.log_id},
                     {"status", synth::to_string(r.synthesis.status)},
                     {"mask_size", r.mask.size()},
                     {"cells_evaluated", r.eval_stats.cells_evaluated}}
                    .dump());
  return r;
}

MineResult Pipeline::run_program(const std::string& query, const std::string& query_id,
                                 const std::string& log_id, const std::string& program_source,
                                 bool use_coarse) {
  const auto t_total = Clock::now();
  MineResult r;
  r.query = query;
  r.log_id = log_id;
  const traj::LogManifest& full = log(log_id);
  traj::LogManifest target = full;
  auto t0 = Clock::now();
  if (use_coarse) {
    r.coarse = coarse_filter(query, query_id.empty() ? query : query_id, log_id);
    target = coarse::restrict_tracks(full, r.coarse->region);
    r.timings.push_back({"coarse", ms_since(t0)});
  }
  t0 = Clock::now();
  const auto program = dsl::parse(program_source);
  r.program_mask = dsl::evaluate(program, target, dsl::default_catalog(), {}, &r.eval_stats);
  r.program_mask.log_id = log_id;
  r.mask = r.program_mask;
  r.synthesis.status = synth::SynthesisStatus::Success;
  r.synthesis.attempts.push_back({program_source, ""});
  r.timings.push_back({"evaluate", ms_since(t0)});
  r.timings.push_back({"total", ms_since(t_total)});
  return r;
}

}  // namespace scenmine::pipeline
