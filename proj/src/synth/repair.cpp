#include "scenmine/synth/repair.hpp"

#include <json.hpp>

#include "scenmine/dsl/evaluator.hpp"
#include "scenmine/dsl/parser.hpp"

namespace scenmine::synth {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string extract_program(const std::string& raw) {
  std::string body = raw;
  if (const auto open = raw.find("```"); open != std::string::npos) {
    // Skip the info string (e.g. a language tag) on the fence line.
    const auto line_end = raw.find('\n', open);
    const auto start = line_end == std::string::npos ? raw.size() : line_end + 1;
    const auto close = raw.find("```", start);
    body = raw.substr(start, close == std::string::npos ? std::string::npos : close - start);
  }
  std::string out = trim(body);
  if (out.empty()) throw ExtractionError("response contains no program text");
  return out;
}

const char* to_string(SynthesisStatus s) {
  return s == SynthesisStatus::Success ? "success" : "flagged_for_review";
}

AuditLog::AuditLog(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.emplace(path, std::ios::app);
  if (!*out_) throw Error("cannot open audit log " + path.string());
}

void AuditLog::record(const std::string& json_line) {
  std::lock_guard lock(mutex_);
  lines_.push_back(json_line);
  if (out_) {
    *out_ << json_line << '\n';
    out_->flush();
  }
}

std::vector<std::string> AuditLog::lines() const {
  std::lock_guard lock(mutex_);
  return lines_;
}

SynthesisOutcome repair_loop(TextClient& client, const PromptBundle& bundle,
                             const traj::LogManifest& log, const RepairOptions& options,
                             const dsl::Catalog& catalog, AuditLog* audit) {
  if (options.max_attempts < 1) throw InvalidInput("repair budget must be at least 1");
  SynthesisOutcome outcome;
  for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
    GenerationRequest req{render_with_attempts(bundle, outcome.attempts), options.temperature,
                          options.max_tokens};
    ++outcome.calls_made;
    std::string response;
    std::string program_text;
    std::string error;
    try {
      response = client.generate(req).text;
      program_text = extract_program(response);
      auto program = dsl::parse(program_text, catalog);
      dsl::EvalStats attempt_stats;
      auto mask = dsl::evaluate(program, log, catalog, options.eval, &attempt_stats);
      if (options.stats) {
        options.stats->cells_evaluated += attempt_stats.cells_evaluated;
        options.stats->relation_checks += attempt_stats.relation_checks;
      }
      outcome.program = std::move(program);
      outcome.mask = std::move(mask);
    } catch (const TransportError& e) {
      error = std::string("client error: ") + e.what();
    } catch (const ExtractionError& e) {
      error = std::string("extraction error: ") + e.what();
    } catch (const dsl::ParseError& e) {
      error = std::string("parse error: ") + e.what();
    } catch (const std::exception& e) {
      error = std::string("runtime error: ") + e.what();
    }
    outcome.attempts.push_back({program_text, error});
    if (audit != nullptr) {
      audit->record(json{{"kind", "attempt"},
                         {"log_id", log.log_id},
                         {"query", bundle.query},
                         {"attempt", attempt},
                         {"prompt", req.prompt},
                         {"response", response},
                         {"program", program_text},
                         {"error", error}}
                        .dump());
    }
    if (error.empty()) {
      outcome.status = SynthesisStatus::Success;
      break;
    }
  }
  if (audit != nullptr) {
    audit->record(json{{"kind", "outcome"},
                       {"log_id", log.log_id},
                       {"query", bundle.query},
                       {"status", to_string(outcome.status)},
                       {"calls_made", outcome.calls_made},
                       {"program", outcome.program ? dsl::to_source(*outcome.program) : ""},
                       {"mask_size", outcome.mask ? outcome.mask->size() : 0}}
                      .dump());
  }
  return outcome;
}

}  // namespace scenmine::synth
