#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scenmine/coarse/terms.hpp"
#include "scenmine/coarse/windows.hpp"
#include "scenmine/errors.hpp"
#include "scenmine/matcher/config.hpp"

namespace scenmine::pipeline {

// The configuration file is unreadable, malformed or out of range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Required on-disk data is missing or inconsistent with the request.
class DataError : public Error {
 public:
  using Error::Error;
};

struct PathsConfig {
  std::filesystem::path logs = "logs";
  // Holds clip.smeb/.index.jsonl (frames and query texts), sentence.* (KB
  // query embeddings) and tokens.* (matcher text tokens).
  std::filesystem::path embeddings = "embeddings";
  std::filesystem::path kb = "kb";
  std::filesystem::path checkpoint;  // empty: no re-ranking
  std::filesystem::path lexicons;    // empty: built-in lexicons
  std::filesystem::path audit_log;   // empty: audit kept in memory only

  bool operator==(const PathsConfig&) const = default;
};

struct CoarseConfig {
  bool enabled = true;
  coarse::CoarseParams params;
  coarse::QueryEmbeddingMode query_embedding = coarse::QueryEmbeddingMode::Terms;

  bool operator==(const CoarseConfig& o) const {
    return enabled == o.enabled && params.window_s == o.params.window_s &&
           params.stride_s == o.params.stride_s &&
           params.frames_per_view == o.params.frames_per_view &&
           params.top_k == o.params.top_k && params.merge_slack_s == o.params.merge_slack_s &&
           query_embedding == o.query_embedding;
  }
};

struct SynthConfig {
  int max_attempts = 5;
  std::size_t exemplars = 10;
  double temperature = 0.2;
  int max_tokens = 1024;
  // none | http | process | scripted
  std::string client = "none";
  std::string endpoint;        // http
  std::string model;           // http
  std::string command;         // process
  std::filesystem::path script;  // scripted: JSONL of {"text": ...}
  double timeout_s = 60.0;

  bool operator==(const SynthConfig&) const = default;
};

struct MatcherSection {
  bool enabled = true;
  matcher::MatcherConfig model;
  matcher::TrainConfig train;
  // Tracks scoring below this are dropped from the mask; unset keeps all and
  // only reorders.
  std::optional<double> min_score;

  bool operator==(const MatcherSection&) const = default;
};

struct PipelineConfig {
  PathsConfig paths;
  CoarseConfig coarse;
  SynthConfig synth;
  MatcherSection matcher;
  std::vector<double> alphas;  // metric threshold grid
  unsigned threads = 1;

  PipelineConfig();
  bool operator==(const PipelineConfig&) const = default;

  // Copy with relative paths anchored at `base`.
  PipelineConfig resolved(const std::filesystem::path& base) const;
};

// Throws ConfigError naming the offending key.
void validate(const PipelineConfig& cfg);

// INI-style "[section]" / "key = value" text; '#' and ';' start comments.
// Unknown sections or keys are errors. Missing keys keep their defaults.
PipelineConfig config_from_text(const std::string& text);
std::string config_to_text(const PipelineConfig& cfg);

PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const PipelineConfig& cfg);

}  // namespace scenmine::pipeline
