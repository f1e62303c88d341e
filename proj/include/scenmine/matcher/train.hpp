#pragma once

#include <string>
#include <vector>

#include "scenmine/matcher/config.hpp"
#include "scenmine/matcher/losses.hpp"
#include "scenmine/matcher/model.hpp"
#include "scenmine/traj/norm.hpp"
#include "scenmine/traj/track.hpp"

namespace scenmine::matcher {

// One (track, description) pair. Pairs sharing a text_id describe the same
// query and are never used as each other's negatives.
struct TrainPair {
  traj::Track track;
  std::string text_id;
  Mat text_tokens;  // M x text_dim provider token embeddings
};

struct StepRecord {
  int step = 0;
  double learning_rate = 0.0;
  LossBundle loss;
  int batch_size = 0;
};

struct TrainResult {
  Model model;
  traj::NormStats norm;
  std::vector<StepRecord> curve;
  std::vector<std::string> warnings;
  std::size_t skipped_short = 0;
};

// Linear warmup then cosine decay to zero over `total_steps`.
double scheduled_lr(const TrainConfig& cfg, int step, int total_steps, int warmup_steps);

// Decoupled weight decay Adam. Decay applies only to weight matrices (tensors
// with more than one row), not to biases or normalization gains.
class AdamW {
 public:
  explicit AdamW(const TrainConfig& cfg) : cfg_(cfg) {}
  void step(std::vector<ad::Parameter>& params, double lr);
  int steps_taken() const { return t_; }

 private:
  TrainConfig cfg_;
  int t_ = 0;
  std::vector<Mat> m_, v_;
};

// Consecutive chunks of `order` of at most `batch_size` indices.
std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order,
                                                   int batch_size);

// Deterministic for fixed inputs and seed. Tracks shorter than one patch are
// skipped. Throws InvalidInput with fewer than 2 usable pairs.
TrainResult train(const std::vector<TrainPair>& pairs, const MatcherConfig& model_cfg,
                  const TrainConfig& train_cfg);

}  // namespace scenmine::matcher
