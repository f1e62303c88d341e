// scenmine: command-line front end for the scenario-mining pipeline.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage
// error, 3 data error, 4 synthesis flagged for review.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "scenmine/dsl/catalog.hpp"
#include "scenmine/kb/knowledge_base.hpp"
#include "scenmine/matcher/checkpoint.hpp"
#include "scenmine/matcher/train.hpp"
#include "scenmine/metrics/results.hpp"
#include "scenmine/metrics/scores.hpp"
#include "scenmine/pipeline/config.hpp"
#include "scenmine/pipeline/pipeline.hpp"
#include "scenmine/synth/prompt.hpp"

namespace fs = std::filesystem;
using namespace scenmine;
using pipeline::ConfigError;
using pipeline::DataError;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitFlagged = 4;

struct Globals {
  std::string config_path;
  unsigned threads = 0;
};

pipeline::PipelineConfig load(const Globals& g) {
  fs::path path = g.config_path;
  pipeline::PipelineConfig cfg;
  fs::path base = fs::current_path();
  if (path.empty() && fs::exists("scenmine.conf")) path = "scenmine.conf";
  if (!path.empty()) {
    cfg = pipeline::load_config(path);
    base = fs::absolute(path).parent_path();
  }
  if (g.threads > 0) cfg.threads = g.threads;
  return cfg.resolved(base);
}

std::string fmt_interval(const traj::TimeInterval& iv) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "[%.2f, %.2f]", iv.start, iv.end);
  return buf;
}

void print_mine(const pipeline::MineResult& r, std::ostream& out) {
  out << "log " << r.log_id << "  status " << synth::to_string(r.synthesis.status) << "  calls "
      << r.synthesis.calls_made << "\n";
  if (r.coarse) {
    out << "coarse region:";
    for (const auto& iv : r.coarse->region) out << " " << fmt_interval(iv);
    out << "  cells " << r.coarse->cells_in_region << "/" << r.coarse->cells_total << "\n";
  }
  if (!r.exemplars.empty()) {
    out << "exemplars:";
    for (const auto& e : r.exemplars) {
      char buf[32];
      std::snprintf(buf, sizeof buf, " (%.3f)", e.similarity);
      out << " " << e.triple.triple_id << buf;
    }
    out << "\n";
  }
  for (const auto& a : r.synthesis.attempts) {
    if (!a.error.empty()) out << "attempt error: " << a.error << "\n";
  }
  if (!r.flagged()) out << "program: " << r.synthesis.attempts.back().program_source << "\n";
  out << "mask: " << r.mask.size() << " cells over " << r.mask.track_ids().size()
      << " track(s); evaluated " << r.eval_stats.cells_evaluated << " cells\n";
  for (const auto& t : r.ranking) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "  %-20s score %8.4f  cos %7.4f  evidence %7.4f\n",
                  t.track_id.c_str(), t.score, t.cosine, t.evidence);
    out << buf;
  }
  out << "timings (ms):";
  for (const auto& t : r.timings) {
    char buf[48];
    std::snprintf(buf, sizeof buf, " %s %.2f", t.stage.c_str(), t.ms);
    out << buf;
  }
  out << "\n";
  for (const auto& n : r.notes) out << "note: " << n << "\n";
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_mine(const Globals& g, const std::string& query, const std::string& query_id,
             const std::string& log_id, bool no_coarse, bool as_json, const std::string& out_path) {
  pipeline::Pipeline p(load(g));
  std::optional<synth::AuditLog> file_audit;
  if (!p.config().paths.audit_log.empty()) file_audit.emplace(p.config().paths.audit_log);
  pipeline::MineRequest req{query, query_id, log_id, std::nullopt};
  if (no_coarse) req.coarse = false;
  const auto r = p.mine(req, file_audit ? &*file_audit : nullptr);
  if (as_json) {
    std::cout << pipeline::to_json(r).dump(2) << "\n";
  } else {
    print_mine(r, std::cout);
  }
  if (!out_path.empty()) pipeline::write_mask_file(out_path, {{query, r.mask}});
  return r.flagged() ? kExitFlagged : kExitOk;
}

int cmd_filter(const Globals& g, const std::string& query, const std::string& query_id,
               const std::string& log_id, bool coarse_only, const std::string& program_file,
               const std::string& program_text, bool no_coarse) {
  pipeline::Pipeline p(load(g));
  const std::string qid = query_id.empty() ? query : query_id;
  if (coarse_only) {
    const auto c = p.coarse_filter(query, qid, log_id);
    std::cout << "query terms:";
    for (const auto& t : c.query_terms) std::cout << " \"" << t << "\"";
    std::cout << "\nembedding text: " << c.embedding_text << "\nregion:";
    for (const auto& iv : c.region) std::cout << " " << fmt_interval(iv);
    const double kept = c.cells_total ? static_cast<double>(c.cells_in_region) / c.cells_total : 0;
    std::printf("\ncells in region: %zu of %zu (%.1f%%)\n", c.cells_in_region, c.cells_total,
                100.0 * kept);
    return kExitOk;
  }
  std::string program = program_text;
  if (!program_file.empty()) program = read_text(program_file);
  if (program.empty()) {
    throw ConfigError("filter needs --coarse-only, --program or --program-text");
  }
  const auto r = p.run_program(query, qid, log_id, program, !no_coarse);
  print_mine(r, std::cout);
  return kExitOk;
}

int cmd_kb_build(const Globals& g, const std::string& candidates_path, const std::string& out) {
  pipeline::Pipeline p(load(g));
  const fs::path dir = out.empty() ? p.config().paths.kb : fs::path(out);
  const auto records = pipeline::read_candidates(candidates_path);
  const auto& sentences = p.sentence_store();
  kb::KnowledgeBase base = p.knowledge_base().empty() ? kb::KnowledgeBase(sentences.dim())
                                                      : p.knowledge_base();
  std::vector<kb::Candidate> batch;
  for (const auto& r : records) {
    const auto row = sentences.text_row(r.query_text);
    if (!row) {
      throw DataError("no sentence embedding for '" + r.query_text +
                      "'; export it with the embed-export tool (--texts-file ... --out " +
                      pipeline::store_smeb(p.config().paths.embeddings, pipeline::kSentenceStore)
                          .string() +
                      ")");
    }
    const auto v = sentences.row(*row);
    kb::KnowledgeTriple t;
    t.triple_id = r.triple_id;
    t.query_text = r.query_text;
    t.query_embedding.assign(v.begin(), v.end());
    t.mask = r.mask;
    t.program_source = r.program_source;
    t.provenance = r.provenance;
    batch.push_back({std::move(t), &p.log(r.mask.log_id)});
  }
  const auto results = base.insert_batch(batch);
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& res = results[i];
    accepted += res.accepted;
    std::cout << (res.accepted ? "accepted " : "rejected ") << records[i].triple_id;
    if (!res.accepted) {
      std::cout << " (" << kb::to_string(res.reason) << ", diff " << res.diff << ")";
      if (!res.message.empty()) std::cout << ": " << res.message;
    }
    std::cout << "\n";
  }
  base.save(dir);
  std::cout << accepted << " of " << results.size() << " accepted; knowledge base at " << dir.string()
            << " holds " << base.size() << " triple(s)\n";
  return kExitOk;
}

int cmd_kb_validate(const Globals& g) {
  pipeline::Pipeline p(load(g));
  const auto triples = p.knowledge_base().triples();
  std::size_t bad = 0;
  for (const auto& t : triples) {
    const auto res = kb::validate_candidate(t, p.log(t.mask.log_id));
    if (!res.accepted) {
      ++bad;
      std::cout << "FAIL " << t.triple_id << " (" << kb::to_string(res.reason) << ", diff "
                << res.diff << ")\n";
    }
  }
  std::cout << triples.size() - bad << " of " << triples.size() << " triple(s) reproduce their mask\n";
  return bad == 0 ? kExitOk : kExitData;
}

int cmd_train(const Globals& g, const std::string& out, int steps) {
  auto cfg = load(g);
  if (steps > 0) cfg.matcher.train.max_steps = steps;
  pipeline::Pipeline p(cfg);
  const fs::path dest = out.empty() ? cfg.paths.checkpoint : fs::path(out);
  if (dest.empty()) throw ConfigError("no output path: pass --out or set paths.checkpoint");

  const auto& tokens = p.token_store();
  const int text_dim = cfg.matcher.model.text_dim;
  if (tokens.dim() != static_cast<std::uint32_t>(text_dim)) {
    throw ConfigError("matcher.text_dim is " + std::to_string(text_dim) +
                      " but the token store is " + std::to_string(tokens.dim()) + " wide");
  }
  std::vector<matcher::TrainPair> pairs;
  for (const auto& t : p.knowledge_base().triples()) {
    const auto rows = tokens.token_rows(t.query_text);
    if (rows.empty()) {
      throw DataError("no token embeddings for '" + t.query_text +
                      "'; export them with the embed-export tool (--texts-file)");
    }
    matcher::Mat m(static_cast<Eigen::Index>(rows.size()), text_dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto v = tokens.row(rows[i]);
      for (int k = 0; k < text_dim; ++k) m(static_cast<Eigen::Index>(i), k) = v[k];
    }
    const auto& lg = p.log(t.mask.log_id);
    std::map<std::string, traj::Track> segments;
    for (const auto& e : t.mask.entries) {
      const traj::Track* full = lg.find_track(e.track_id);
      auto& seg = segments.try_emplace(e.track_id, traj::Track{full->track_id, full->category, {}})
                      .first->second;
      seg.states.push_back(full->states[*full->index_at(e.timestamp_ns)]);
    }
    for (auto& [id, seg] : segments) pairs.push_back({std::move(seg), t.query_text, m});
  }
  std::cout << "training on " << pairs.size() << " pair(s) from "
            << p.knowledge_base().size() << " triple(s)\n";
  const auto result = matcher::train(pairs, cfg.matcher.model, cfg.matcher.train);
  for (const auto& w : result.warnings) std::cout << "warning: " << w << "\n";
  if (!result.curve.empty()) {
    std::printf("loss %.6f -> %.6f over %zu step(s)\n", result.curve.front().loss.total,
                result.curve.back().loss.total, result.curve.size());
  }
  matcher::save_checkpoint(dest, result.model, result.norm);
  std::cout << "checkpoint written to " << dest.string() << "\n";
  return kExitOk;
}

int cmd_evaluate(const Globals& g, const std::string& gt_path, const std::string& pred_path,
                 const std::string& results_path, const std::string& pred_out, bool no_coarse) {
  pipeline::Pipeline p(load(g));
  const auto gt = pipeline::read_mask_file(gt_path);
  std::map<std::pair<std::string, std::string>, dsl::ScenarioMask> predicted;
  int flagged = 0;
  if (!pred_path.empty()) {
    for (auto& r : pipeline::read_mask_file(pred_path)) {
      predicted[{r.query, r.mask.log_id}] = r.mask;
    }
  } else {
    std::vector<pipeline::MaskRecord> mined;
    for (const auto& r : gt) {
      pipeline::MineRequest req{r.query, "", r.mask.log_id, std::nullopt};
      if (no_coarse) req.coarse = false;
      const auto res = p.mine(req);
      flagged += res.flagged();
      predicted[{r.query, r.mask.log_id}] = res.mask;
      mined.push_back({r.query, res.mask});
    }
    if (!pred_out.empty()) pipeline::write_mask_file(pred_out, mined);
  }

  std::vector<metrics::LogEval> inputs;
  for (const auto& r : gt) {
    const auto& lg = p.log(r.mask.log_id);
    metrics::LogEval e;
    e.log_id = r.mask.log_id;
    e.gt = metrics::frames_from_mask(r.mask, lg);
    const auto it = predicted.find({r.query, r.mask.log_id});
    if (it != predicted.end()) e.pred = metrics::frames_from_mask(it->second, lg);
    inputs.push_back(std::move(e));
  }
  if (inputs.empty()) throw DataError("ground-truth file " + gt_path + " has no records");
  const auto scores = metrics::evaluate_logs(inputs, p.config().alphas, p.config().threads);
  const auto summary = metrics::summarize(scores);
  if (!results_path.empty()) metrics::write_results(fs::path(results_path), scores, summary);
  std::cout << metrics::format_table(summary);
  if (flagged > 0) std::cout << flagged << " run(s) flagged for review (scored as empty)\n";
  return kExitOk;
}

int cmd_inspect_prompt(const Globals& g, const std::string& query, const std::string& query_id) {
  pipeline::Pipeline p(load(g));
  std::cout << synth::render(p.prompt_for(query, query_id.empty() ? query : query_id));
  return kExitOk;
}

int cmd_inspect_catalog(const std::string& out) {
  const std::string text = dsl::default_catalog().to_json().dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out);
    if (!f) throw DataError("cannot write " + out);
    f << text;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scenmine: coarse-to-fine scenario mining over trajectory logs"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("-c,--config", g.config_path,
                 "Config file (default: ./scenmine.conf when present, else built-in defaults)");
  app.add_option("-j,--threads", g.threads, "Worker threads (overrides run.threads)");

  std::string query, query_id, log_id, out, program_file, program_text, gt, pred, results,
      pred_out, candidates;
  bool no_coarse = false, as_json = false, coarse_only = false;
  int steps = 0;

  auto* mine = app.add_subcommand("mine", "Mine one log for a natural-language query");
  mine->add_option("-q,--query", query, "Scenario description")->required();
  mine->add_option("-l,--log", log_id, "Log id")->required();
  mine->add_option("--query-id", query_id, "Key of the query in the embedding stores");
  mine->add_flag("--no-coarse", no_coarse, "Skip coarse temporal filtering");
  mine->add_flag("--json", as_json, "Print the full result as JSON");
  mine->add_option("-o,--out", out, "Write the final mask to this mask file");

  auto* filter = app.add_subcommand("filter", "Coarse filtering, or a fixed program over the filtered log");
  filter->add_option("-q,--query", query, "Scenario description")->required();
  filter->add_option("-l,--log", log_id, "Log id")->required();
  filter->add_option("--query-id", query_id, "Key of the query in the embedding stores");
  filter->add_flag("--coarse-only", coarse_only, "Stop after the temporal region is chosen");
  filter->add_option("--program", program_file, "File holding a scenario program");
  filter->add_option("--program-text", program_text, "Scenario program source");
  filter->add_flag("--no-coarse", no_coarse, "Evaluate the program over the whole log");

  auto* kbc = app.add_subcommand("kb", "Knowledge-base maintenance");
  kbc->require_subcommand(1);
  auto* kb_build = kbc->add_subcommand("build", "Validate candidates and add the accepted ones");
  kb_build->add_option("--candidates", candidates, "Candidates JSONL file")->required();
  kb_build->add_option("-o,--out", out, "Knowledge-base directory (default: paths.kb)");
  auto* kb_validate = kbc->add_subcommand("validate", "Re-check every stored triple against its log");

  auto* train = app.add_subcommand("train-matcher", "Train the text-trajectory matcher on the knowledge base");
  train->add_option("-o,--out", out, "Checkpoint path (default: paths.checkpoint)");
  train->add_option("--steps", steps, "Stop after this many optimizer steps");

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against ground truth");
  evaluate->add_option("--gt", gt, "Ground-truth mask file")->required();
  evaluate->add_option("--pred", pred, "Predicted mask file (default: mine every ground-truth query)");
  evaluate->add_option("--results", results, "Write per-log and summary records here");
  evaluate->add_option("--pred-out", pred_out, "Write mined masks here");
  evaluate->add_flag("--no-coarse", no_coarse, "Mine without coarse filtering");

  auto* inspect = app.add_subcommand("inspect", "Show derived artifacts");
  inspect->require_subcommand(1);
  auto* prompt = inspect->add_subcommand("prompt", "Render the synthesis prompt for a query");
  prompt->add_option("-q,--query", query, "Scenario description")->required();
  prompt->add_option("--query-id", query_id, "Key of the query in the embedding stores");
  auto* catalog = inspect->add_subcommand("catalog", "Print the predicate catalog as JSON");
  catalog->add_option("-o,--out", out, "Write to this file instead of stdout");
  auto* config = inspect->add_subcommand("config", "Print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*mine) return cmd_mine(g, query, query_id, log_id, no_coarse, as_json, out);
    if (*filter) {
      return cmd_filter(g, query, query_id, log_id, coarse_only, program_file, program_text,
                        no_coarse);
    }
    if (*kb_build) return cmd_kb_build(g, candidates, out);
    if (*kb_validate) return cmd_kb_validate(g);
    if (*train) return cmd_train(g, out, steps);
    if (*evaluate) return cmd_evaluate(g, gt, pred, results, pred_out, no_coarse);
    if (*prompt) return cmd_inspect_prompt(g, query, query_id);
    if (*catalog) return cmd_inspect_catalog(out);
    if (*config) {
      std::cout << pipeline::config_to_text(load(g));
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const FormatError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const InvalidInput& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
