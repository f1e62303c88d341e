#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "scenmine/dsl/ast.hpp"
#include "scenmine/dsl/catalog.hpp"
#include "scenmine/dsl/evaluator.hpp"
#include "scenmine/dsl/mask.hpp"
#include "scenmine/synth/client.hpp"
#include "scenmine/synth/prompt.hpp"
#include "scenmine/traj/track.hpp"

namespace scenmine::synth {

inline constexpr int kDefaultRepairBudget = 5;

// The response held no program text.
class ExtractionError : public Error {
 public:
  using Error::Error;
};

// First fenced code block if any (an unterminated fence runs to the end),
// otherwise the whole response; trimmed either way.
std::string extract_program(const std::string& raw_response);

enum class SynthesisStatus { Success, FlaggedForReview };

const char* to_string(SynthesisStatus s);

struct SynthesisOutcome {
  SynthesisStatus status = SynthesisStatus::FlaggedForReview;
  std::optional<dsl::ScenarioProgram> program;
  // Mask of the successful program on the target log.
  std::optional<dsl::ScenarioMask> mask;
  // Every attempt in order; the error is empty only for the successful one.
  std::vector<Attempt> attempts;
  int calls_made = 0;
};

struct RepairOptions {
  int max_attempts = kDefaultRepairBudget;
  double temperature = kDefaultTemperature;
  int max_tokens = 1024;
  dsl::EvalOptions eval;
  // When set, evaluation work of every attempt is added here.
  dsl::EvalStats* stats = nullptr;
};

// Line-delimited JSON record of every prompt, response and outcome.
class AuditLog {
 public:
  AuditLog() = default;
  explicit AuditLog(const std::filesystem::path& path);

  void record(const std::string& json_line);
  std::vector<std::string> lines() const;

 private:
  mutable std::mutex mutex_;
  std::optional<std::ofstream> out_;
  std::vector<std::string> lines_;
};

// Generate, extract, parse and evaluate until a program runs or the budget is
// spent. Client failures and unextractable responses consume an attempt.
SynthesisOutcome repair_loop(TextClient& client, const PromptBundle& bundle,
                             const traj::LogManifest& log, const RepairOptions& options = {},
                             const dsl::Catalog& catalog = dsl::default_catalog(),
                             AuditLog* audit = nullptr);

}  // namespace scenmine::synth
