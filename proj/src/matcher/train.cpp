#include "scenmine/matcher/train.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <algorithm>
#include <map>

#include "scenmine/errors.hpp"

namespace scenmine::matcher {

double scheduled_lr(const TrainConfig& cfg, int step, int total_steps, int warmup_steps) {
  if (step < warmup_steps) {
    return cfg.learning_rate * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
  }
  const int span = total_steps - warmup_steps;
  if (span <= 0) return cfg.learning_rate;
  const double progress = static_cast<double>(step - warmup_steps) / static_cast<double>(span);
  return cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void AdamW::step(std::vector<ad::Parameter>& params, double lr) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(Mat::Zero(p.value.rows(), p.value.cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.adam_beta1, t_);
  const double c2 = 1.0 - std::pow(cfg_.adam_beta2, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (p.grad.size() == 0) p.zero_grad();
    m_[i] = cfg_.adam_beta1 * m_[i] + (1.0 - cfg_.adam_beta1) * p.grad;
    v_[i] = cfg_.adam_beta2 * v_[i] + (1.0 - cfg_.adam_beta2) * p.grad.cwiseProduct(p.grad);
    if (p.value.rows() > 1) p.value *= 1.0 - lr * cfg_.weight_decay;
    p.value.array() -=
        lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + cfg_.adam_eps);
  }
}

std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& order,
                                                   int batch_size) {
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(order.size(), i + static_cast<std::size_t>(batch_size));
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

TrainResult train(const std::vector<TrainPair>& all_pairs, const MatcherConfig& model_cfg,
                  const TrainConfig& cfg) {
  validate(model_cfg);
  validate(cfg);
  TrainResult result;

  std::vector<TrainPair> pairs;
  for (const auto& p : all_pairs) {
    if (static_cast<int>(p.track.states.size()) < model_cfg.patch.patch_len) {
      ++result.skipped_short;
    } else {
      pairs.push_back(p);
    }
  }
  if (pairs.size() < 2) throw InvalidInput("training needs at least 2 usable pairs");
  if (result.skipped_short > 0) {
    result.warnings.push_back("skipped " + std::to_string(result.skipped_short) +
                              " tracks shorter than one patch");
  }

  std::vector<traj::Track> tracks;
  tracks.reserve(pairs.size());
  for (const auto& p : pairs) tracks.push_back(p.track);
  result.norm = traj::fit_norm_stats(tracks);
  std::vector<Mat> features;
  features.reserve(pairs.size());
  for (const auto& p : pairs) features.push_back(track_features(p.track, result.norm));
  std::map<std::string, int> group_of;
  std::vector<int> groups;
  for (const auto& p : pairs) {
    groups.push_back(group_of.emplace(p.text_id, static_cast<int>(group_of.size())).first->second);
  }

  result.model = Model(model_cfg, cfg.seed);
  std::mt19937_64 rng(cfg.seed ^ 0x5ce9a11e5ULL);
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const auto shuffled_batches = [&] {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    return make_batches(order, cfg.batch_size);
  };

  auto batches = shuffled_batches();
  const int per_epoch = static_cast<int>(batches.size());
  const int total = cfg.max_steps > 0 ? cfg.max_steps : cfg.epochs * per_epoch;
  const int warmup = static_cast<int>(
      std::lround(static_cast<double>(total) * cfg.warmup_epochs / cfg.epochs));

  const bool inert = model_cfg.lambda_mil == 0.0 && model_cfg.lambda_global == 0.0;
  if (inert) result.warnings.push_back("both loss weights are zero; parameters are left unchanged");
  bool warned_small = false;

  AdamW opt(cfg);
  std::size_t next = 0;
  for (int step = 0; step < total; ++step) {
    if (next == batches.size()) {
      batches = shuffled_batches();
      next = 0;
    }
    const auto& batch = batches[next++];
    if (batch.size() < 2 && model_cfg.lambda_global > 0.0 && !warned_small) {
      result.warnings.push_back("batch of size " + std::to_string(batch.size()) +
                                " makes the InfoNCE term degenerate");
      warned_small = true;
    }
    std::vector<const Mat*> f, t;
    std::vector<int> g;
    for (std::size_t idx : batch) {
      f.push_back(&features[idx]);
      t.push_back(&pairs[idx].text_tokens);
      g.push_back(groups[idx]);
    }
    result.model.zero_grad();
    const double lr = scheduled_lr(cfg, step, total, warmup);
    const auto loss = batch_loss(result.model, f, t, !inert, g);
    if (!inert) opt.step(result.model.parameters(), lr);
    result.curve.push_back({step, lr, loss, static_cast<int>(batch.size())});
  }
  result.model.zero_grad();
  return result;
}

}  // namespace scenmine::matcher
