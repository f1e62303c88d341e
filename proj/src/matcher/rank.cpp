#include "scenmine/matcher/rank.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <thread>

#include "scenmine/errors.hpp"

namespace scenmine::matcher {

RankedTrack score_pair(const Model& model, const TrackEncoding& track, const TextEncoding& text,
                       double alpha) {
  RankedTrack r;
  r.cosine = (track.pooled * text.pooled.transpose())(0, 0);
  const Mat S = cross_sim(track.sequence, text.sequence, model.param("align.Wq").value,
                          model.param("align.Wk").value);
  r.evidence = evidence_score(S, model.config().evidence, model.config().evidence_temperature);
  r.score = alpha * r.cosine + (1.0 - alpha) * r.evidence;
  return r;
}

std::vector<RankedTrack> rank_candidates(const Mat& query_tokens,
                                         const std::vector<traj::Track>& candidates, Model& model,
                                         const traj::NormStats& norm, double alpha,
                                         unsigned threads) {
  if (candidates.empty()) throw InvalidInput("rank_candidates needs at least one candidate");
  if (alpha < 0.0 || alpha > 1.0) throw InvalidInput("alpha must lie in [0, 1]");
  const TextEncoding text = encode_text(model, query_tokens);
  std::vector<RankedTrack> out(candidates.size());
  const auto work = [&](std::size_t i) {
    const auto& t = candidates[i];
    if (static_cast<int>(t.states.size()) < model.config().patch.patch_len) {
      out[i] = {t.track_id, -std::numeric_limits<double>::infinity(), 0.0, 0.0};
      return;
    }
    auto r = score_pair(model, encode_track(model, track_features(t, norm)), text, alpha);
    r.track_id = t.track_id;
    out[i] = r;
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(candidates.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < candidates.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < candidates.size();) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  std::sort(out.begin(), out.end(), [](const RankedTrack& a, const RankedTrack& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.track_id < b.track_id;
  });
  return out;
}

}  // namespace scenmine::matcher
