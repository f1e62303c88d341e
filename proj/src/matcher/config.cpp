#include "scenmine/matcher/config.hpp"

#include "scenmine/errors.hpp"

namespace scenmine::matcher {

namespace {
void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput("invalid matcher config: " + what);
}
}  // namespace

void validate(const PatchConfig& c) {
  require(c.patch_len >= 1, "patch_len must be >= 1");
  require(c.patch_stride >= 1 && c.patch_stride <= c.patch_len,
          "patch_stride must lie in [1, patch_len]");
  require(c.token_dim > 0 && c.d_model > 0, "token_dim and d_model must be positive");
  require(c.layers >= 0, "layers must be >= 0");
  require(c.heads >= 1 && c.d_model % c.heads == 0, "d_model must be divisible by heads");
}

void validate(const MatcherConfig& c) {
  validate(c.patch);
  require(c.text_dim > 0 && c.d_k > 0 && c.embed_dim > 0 && c.ff_dim > 0,
          "text_dim, d_k, embed_dim and ff_dim must be positive");
  require(c.evidence_temperature > 0.0, "evidence_temperature must be positive");
  require(c.gamma > 0.0 && c.tau > 0.0, "gamma and tau must be positive");
  require(c.lambda_mil >= 0.0 && c.lambda_global >= 0.0, "loss weights must be >= 0");
  require(c.alpha >= 0.0 && c.alpha <= 1.0, "alpha must lie in [0, 1]");
}

void validate(const TrainConfig& c) {
  require(c.epochs >= 1 && c.batch_size >= 1, "epochs and batch_size must be >= 1");
  require(c.learning_rate > 0.0 && c.weight_decay >= 0.0, "bad learning rate or weight decay");
  require(c.warmup_epochs >= 0 && c.max_steps >= 0, "warmup_epochs and max_steps must be >= 0");
}

std::string to_string(EvidencePooling p) { return p == EvidencePooling::Max ? "max" : "logsumexp"; }

EvidencePooling evidence_pooling_from_string(const std::string& s) {
  if (s == "max") return EvidencePooling::Max;
  if (s == "logsumexp") return EvidencePooling::LogSumExp;
  throw InvalidInput("unknown evidence pooling '" + s + "' (expected max or logsumexp)");
}

}  // namespace scenmine::matcher
