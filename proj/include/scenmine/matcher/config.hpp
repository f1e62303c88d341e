#pragma once

#include <cstdint>
#include <string>

namespace scenmine::matcher {

struct PatchConfig {
  int patch_len = 16;     // P, frames per patch
  int patch_stride = 8;   // stride between patch starts, frames
  int token_dim = 256;    // d0
  int layers = 3;
  int heads = 8;
  int d_model = 256;

  bool operator==(const PatchConfig&) const = default;
};

enum class EvidencePooling { Max, LogSumExp };

struct MatcherConfig {
  PatchConfig patch;
  int text_dim = 768;     // width of provider token embeddings
  int d_k = 64;           // shared query/key width of the alignment matrix
  int embed_dim = 512;    // e, pooled embedding width
  int ff_dim = 1024;      // transformer feed-forward width
  EvidencePooling evidence = EvidencePooling::Max;
  double evidence_temperature = 0.1;
  double gamma = 0.1;     // MIL temperature
  double tau = 0.07;      // InfoNCE temperature
  double lambda_mil = 1.0;
  double lambda_global = 1.0;
  double alpha = 0.5;     // ranking blend of pooled cosine and evidence

  bool operator==(const MatcherConfig&) const = default;
};

struct TrainConfig {
  int epochs = 50;
  int batch_size = 128;
  double learning_rate = 1e-4;
  double weight_decay = 0.01;
  int warmup_epochs = 5;
  // When > 0, stop after this many optimizer steps (the schedule spans them).
  int max_steps = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  bool operator==(const TrainConfig&) const = default;
};

// Throws InvalidInput when a field violates its documented range.
void validate(const PatchConfig& c);
void validate(const MatcherConfig& c);
void validate(const TrainConfig& c);

std::string to_string(EvidencePooling p);
EvidencePooling evidence_pooling_from_string(const std::string& s);

}  // namespace scenmine::matcher
