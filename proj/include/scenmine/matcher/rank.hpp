#pragma once

#include <string>
#include <vector>

#include "scenmine/matcher/model.hpp"
#include "scenmine/traj/norm.hpp"
#include "scenmine/traj/track.hpp"

namespace scenmine::matcher {

struct RankedTrack {
  std::string track_id;
  // alpha * cosine + (1 - alpha) * evidence; -inf for tracks shorter than one patch.
  double score = 0.0;
  double cosine = 0.0;
  double evidence = 0.0;
};

// Descending score, ties by track id. Scoring is parallel across candidates
// when threads > 1; results do not depend on the thread count.
std::vector<RankedTrack> rank_candidates(const Mat& query_tokens,
                                         const std::vector<traj::Track>& candidates, Model& model,
                                         const traj::NormStats& norm, double alpha,
                                         unsigned threads = 1);

// Pair score of one encoded track and text.
RankedTrack score_pair(const Model& model, const TrackEncoding& track, const TextEncoding& text,
                       double alpha);

}  // namespace scenmine::matcher
