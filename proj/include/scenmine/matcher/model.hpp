#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "scenmine/errors.hpp"
#include "scenmine/matcher/autodiff.hpp"
#include "scenmine/matcher/config.hpp"
#include "scenmine/traj/norm.hpp"
#include "scenmine/traj/track.hpp"

namespace scenmine::matcher {

using ad::Mat;
using ad::Var;

// A track shorter than one patch.
class TrackTooShort : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// floor((L - P) / S) + 1; throws TrackTooShort when L < P.
int patch_count(int length, int patch_len, int patch_stride);

// L x 10 matrix of z-score normalized state features.
Mat track_features(const traj::Track& track, const traj::NormStats& stats);

// Sinusoidal encoding of position t over `dim` channels.
Mat positional_encoding(int count, int dim);

class Model {
 public:
  Model() = default;
  // Seeded random initialization.
  Model(const MatcherConfig& config, std::uint64_t seed);

  const MatcherConfig& config() const { return config_; }
  std::vector<ad::Parameter>& parameters() { return params_; }
  const std::vector<ad::Parameter>& parameters() const { return params_; }
  ad::Parameter& param(const std::string& name);
  const ad::Parameter& param(const std::string& name) const;
  std::size_t parameter_count() const;
  void zero_grad();

  // T x d0 patch tokens: linear map of each flattened P x 10 slice plus the
  // positional encoding.
  Var patchify(ad::Tape& tape, const Mat& features);
  // Self-attention stack over patch tokens; returns T x d_model.
  Var encode_track_sequence(ad::Tape& tape, Var tokens);
  // M x d_model text sequence from M x text_dim provider tokens:
  // Conv1d(MLP(x) + x) with kernel 3 and zero padding.
  Var encode_text_sequence(ad::Tape& tape, const Mat& text_tokens);
  // 1 x e unit vector from a sequence (mean, project, normalize).
  Var pool_track(ad::Tape& tape, Var sequence);
  Var pool_text(ad::Tape& tape, Var sequence);
  // T x d_k and M x d_k halves of the alignment matrix.
  Var track_queries(ad::Tape& tape, Var sequence);
  Var text_keys(ad::Tape& tape, Var sequence);
  // (Q K^T) / sqrt(d_k).
  Var alignment(Var queries, Var keys) const;
  Var evidence(Var alignment) const;

  bool operator==(const Model& other) const;

 private:
  void add_param(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                 double init_std, std::uint64_t& state);
  void add_const(const std::string& name, Eigen::Index rows, Eigen::Index cols, double value);
  std::size_t index_of(const std::string& name) const;
  Var p(ad::Tape& tape, const std::string& name) { return tape.param(param(name)); }

  MatcherConfig config_;
  std::vector<ad::Parameter> params_;
};

struct TrackEncoding {
  Mat sequence;  // T x d_model
  Mat pooled;    // 1 x e
};

struct TextEncoding {
  Mat sequence;  // M x d_model
  Mat pooled;    // 1 x e
};

// Inference helpers (no gradient recording).
TrackEncoding encode_track(Model& model, const Mat& features);
TextEncoding encode_text(Model& model, const Mat& text_tokens);

// Plain-matrix forms of the alignment and evidence.
Mat cross_sim(const Mat& B, const Mat& A, const Mat& Wq, const Mat& Wk);
double evidence_score(const Mat& S, EvidencePooling pooling = EvidencePooling::Max,
                      double temperature = 0.1);

}  // namespace scenmine::matcher
