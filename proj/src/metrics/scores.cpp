#include "scenmine/metrics/scores.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "scenmine/errors.hpp"
#include "scenmine/metrics/assignment.hpp"

namespace scenmine::metrics {

Prf prf_from_counts(const Counts& c) {
  if (c.tp == 0 && c.fp == 0 && c.fn == 0) return {1.0, 1.0, 1.0};
  const auto tp = static_cast<double>(c.tp);
  Prf out;
  out.precision = c.tp + c.fp > 0 ? tp / static_cast<double>(c.tp + c.fp) : 0.0;
  out.recall = c.tp + c.fn > 0 ? tp / static_cast<double>(c.tp + c.fn) : 0.0;
  out.f1 = 2.0 * tp / static_cast<double>(2 * c.tp + c.fp + c.fn);
  return out;
}

Counts timestamp_counts(const std::set<std::int64_t>& pred, const std::set<std::int64_t>& gt) {
  Counts c;
  for (auto t : pred) {
    if (gt.count(t)) {
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  c.fn = gt.size() - c.tp;
  return c;
}

Prf timestamp_f1(const std::set<std::int64_t>& pred, const std::set<std::int64_t>& gt) {
  return prf_from_counts(timestamp_counts(pred, gt));
}

double log_f1(std::span<const LogDecision> decisions) {
  if (decisions.empty()) throw InvalidInput("log_f1: no logs");
  Counts c;
  for (const auto& d : decisions) {
    if (d.pred && d.gt) ++c.tp;
    if (d.pred && !d.gt) ++c.fp;
    if (!d.pred && d.gt) ++c.fn;
  }
  return prf_from_counts(c).f1;
}

std::vector<double> default_alphas() {
  std::vector<double> out;
  for (int k = 1; k <= 19; ++k) out.push_back(static_cast<double>(k) / 20.0);
  return out;
}

namespace {

struct IdIndex {
  std::unordered_map<std::string, std::size_t> ids;
  std::size_t get(const std::string& id) { return ids.emplace(id, ids.size()).first->second; }
};

struct FrameView {
  std::vector<std::size_t> gt;
  std::vector<std::size_t> pred;
  std::vector<std::vector<double>> sim;  // [gt][pred]
};

std::size_t detection_count(const Frames& frames) {
  std::size_t n = 0;
  for (const auto& [ts, dets] : frames) n += dets.size();
  return n;
}

void index_frame(const std::vector<Detection>& dets, IdIndex& index,
                 std::vector<std::size_t>& out, std::int64_t ts, const char* side) {
  for (const auto& d : dets) {
    const std::size_t id = index.get(d.track_id);
    if (std::find(out.begin(), out.end(), id) != out.end()) {
      throw InvalidInput(std::string("hota: ") + side + " track '" + d.track_id +
                         "' appears twice at timestamp " + std::to_string(ts));
    }
    out.push_back(id);
  }
}

HotaBreakdown constant_breakdown(double value, std::span<const double> alphas) {
  HotaBreakdown b;
  b.hota = b.det_a = b.ass_a = value;
  b.alphas.assign(alphas.begin(), alphas.end());
  b.hota_alpha.assign(alphas.size(), value);
  b.det_a_alpha.assign(alphas.size(), value);
  b.ass_a_alpha.assign(alphas.size(), value);
  return b;
}

}  // namespace

HotaBreakdown hota(const Frames& gt, const Frames& pred, std::span<const double> alphas) {
  if (alphas.empty()) throw InvalidInput("hota: empty alpha grid");
  for (double a : alphas) {
    if (!(a > 0.0 && a <= 1.0)) throw InvalidInput("hota: alpha outside (0, 1]");
  }

  // Gather frames and check id uniqueness before any early exit.
  IdIndex gt_ids, pred_ids;
  std::vector<FrameView> frames;
  {
    std::set<std::int64_t> stamps;
    for (const auto& [ts, d] : gt) stamps.insert(ts);
    for (const auto& [ts, d] : pred) stamps.insert(ts);
    static const std::vector<Detection> kNone;
    for (auto ts : stamps) {
      const auto g = gt.find(ts);
      const auto p = pred.find(ts);
      const auto& gd = g == gt.end() ? kNone : g->second;
      const auto& pd = p == pred.end() ? kNone : p->second;
      FrameView f;
      index_frame(gd, gt_ids, f.gt, ts, "ground-truth");
      index_frame(pd, pred_ids, f.pred, ts, "predicted");
      f.sim.assign(gd.size(), std::vector<double>(pd.size(), 0.0));
      for (std::size_t i = 0; i < gd.size(); ++i) {
        for (std::size_t j = 0; j < pd.size(); ++j) f.sim[i][j] = iou_3d(gd[i].box, pd[j].box);
      }
      frames.push_back(std::move(f));
    }
  }

  const std::size_t n_gt = detection_count(gt);
  const std::size_t n_pred = detection_count(pred);
  if (n_gt == 0 && n_pred == 0) return constant_breakdown(1.0, alphas);
  if (n_gt == 0 || n_pred == 0) return constant_breakdown(0.0, alphas);

  const std::size_t G = gt_ids.ids.size();
  const std::size_t P = pred_ids.ids.size();

  // Global alignment between identities, from per-frame soft overlaps.
  std::vector<double> potential(G * P, 0.0);
  std::vector<double> gt_count(G, 0.0), pred_count(P, 0.0);
  for (const auto& f : frames) {
    for (auto g : f.gt) gt_count[g] += 1.0;
    for (auto p : f.pred) pred_count[p] += 1.0;
    if (f.gt.empty() || f.pred.empty()) continue;
    std::vector<double> row_sum(f.gt.size(), 0.0), col_sum(f.pred.size(), 0.0);
    for (std::size_t i = 0; i < f.gt.size(); ++i) {
      for (std::size_t j = 0; j < f.pred.size(); ++j) {
        row_sum[i] += f.sim[i][j];
        col_sum[j] += f.sim[i][j];
      }
    }
    for (std::size_t i = 0; i < f.gt.size(); ++i) {
      for (std::size_t j = 0; j < f.pred.size(); ++j) {
        const double denom = row_sum[i] + col_sum[j] - f.sim[i][j];
        if (denom > std::numeric_limits<double>::epsilon()) {
          potential[f.gt[i] * P + f.pred[j]] += f.sim[i][j] / denom;
        }
      }
    }
  }
  std::vector<double> align(G * P, 0.0);
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t p = 0; p < P; ++p) {
      const double pot = potential[g * P + p];
      align[g * P + p] = pot / (gt_count[g] + pred_count[p] - pot);
    }
  }

  const std::size_t A = alphas.size();
  std::vector<double> tp(A, 0.0), fn(A, 0.0), fp(A, 0.0);
  std::vector<std::vector<double>> matches(A, std::vector<double>(G * P, 0.0));
  for (const auto& f : frames) {
    const auto ng = static_cast<double>(f.gt.size());
    const auto np = static_cast<double>(f.pred.size());
    if (f.gt.empty() || f.pred.empty()) {
      for (std::size_t a = 0; a < A; ++a) {
        fn[a] += ng;
        fp[a] += np;
      }
      continue;
    }
    CostMatrix score(f.gt.size(), std::vector<double>(f.pred.size()));
    for (std::size_t i = 0; i < f.gt.size(); ++i) {
      for (std::size_t j = 0; j < f.pred.size(); ++j) {
        score[i][j] = align[f.gt[i] * P + f.pred[j]] * f.sim[i][j];
      }
    }
    const auto assignment = max_score_assignment(score);
    for (std::size_t a = 0; a < A; ++a) {
      double hits = 0.0;
      for (std::size_t i = 0; i < assignment.size(); ++i) {
        const int j = assignment[i];
        if (j < 0 || f.sim[i][j] < alphas[a] - kAlphaSlack) continue;
        hits += 1.0;
        matches[a][f.gt[i] * P + f.pred[j]] += 1.0;
      }
      tp[a] += hits;
      fn[a] += ng - hits;
      fp[a] += np - hits;
    }
  }

  HotaBreakdown out;
  out.alphas.assign(alphas.begin(), alphas.end());
  for (std::size_t a = 0; a < A; ++a) {
    double ass_sum = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
      for (std::size_t p = 0; p < P; ++p) {
        const double m = matches[a][g * P + p];
        if (m == 0.0) continue;
        ass_sum += m * (m / std::max(1.0, gt_count[g] + pred_count[p] - m));
      }
    }
    const double ass_a = ass_sum / std::max(1.0, tp[a]);
    const double det_a = tp[a] / std::max(1.0, tp[a] + fn[a] + fp[a]);
    out.det_a_alpha.push_back(det_a);
    out.ass_a_alpha.push_back(ass_a);
    out.hota_alpha.push_back(std::sqrt(det_a * ass_a));
  }
  const auto mean = [&](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  out.hota = mean(out.hota_alpha);
  out.det_a = mean(out.det_a_alpha);
  out.ass_a = mean(out.ass_a_alpha);
  return out;
}

Frames restrict_frames(const Frames& frames, const std::vector<traj::TimeInterval>& intervals) {
  Frames out;
  for (const auto& [ts, dets] : frames) {
    const bool keep = std::any_of(intervals.begin(), intervals.end(),
                                  [ts](const traj::TimeInterval& iv) { return iv.contains_ns(ts); });
    if (keep) out.emplace(ts, dets);
  }
  return out;
}

std::optional<traj::TimeInterval> scenario_timeframe(const Frames& gt) {
  std::optional<std::int64_t> lo, hi;
  for (const auto& [ts, dets] : gt) {
    if (dets.empty()) continue;
    if (!lo) lo = ts;
    hi = ts;
  }
  if (!lo) return std::nullopt;
  return traj::TimeInterval{traj::ns_to_seconds(*lo), traj::ns_to_seconds(*hi)};
}

Frames frames_from_mask(const dsl::ScenarioMask& mask, const traj::LogManifest& log) {
  Frames out;
  for (const auto& e : mask.entries) {
    const traj::Track* track = log.find_track(e.track_id);
    const auto idx = track ? track->index_at(e.timestamp_ns) : std::nullopt;
    if (!idx) {
      throw InvalidInput("no box for track '" + e.track_id + "' at timestamp " +
                         std::to_string(e.timestamp_ns) + " in log '" + log.log_id + "'");
    }
    out[e.timestamp_ns].push_back({e.track_id, box_from_state(track->states[*idx])});
  }
  return out;
}

HotaBreakdown hota_temporal(const LogEval& input, std::span<const double> alphas) {
  std::vector<traj::TimeInterval> ranges;
  if (input.scenario) {
    ranges = *input.scenario;
  } else if (auto tf = scenario_timeframe(input.gt)) {
    ranges.push_back(*tf);
  } else {
    return hota(input.gt, input.pred, alphas);
  }
  return hota(restrict_frames(input.gt, ranges), restrict_frames(input.pred, ranges), alphas);
}

namespace {

std::set<std::int64_t> occupied(const Frames& frames) {
  std::set<std::int64_t> out;
  for (const auto& [ts, dets] : frames) {
    if (!dets.empty()) out.insert(ts);
  }
  return out;
}

}  // namespace

LogScores evaluate_log(const LogEval& input, std::span<const double> alphas) {
  LogScores s;
  s.log_id = input.log_id;
  s.hota_temporal = hota_temporal(input, alphas).hota;
  s.hota = hota(input.gt, input.pred, alphas).hota;
  s.timestamp = timestamp_counts(occupied(input.pred), occupied(input.gt));
  s.timestamp_prf = prf_from_counts(s.timestamp);
  s.pred_entries = detection_count(input.pred);
  s.gt_entries = detection_count(input.gt);
  s.pred_positive = s.pred_entries > 0;
  s.gt_positive = s.gt_entries > 0;
  return s;
}

std::vector<LogScores> evaluate_logs(std::span<const LogEval> inputs,
                                     std::span<const double> alphas, unsigned threads) {
  std::vector<LogScores> out(inputs.size());
  const unsigned workers =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(inputs.size())));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (std::size_t i = next++; i < inputs.size(); i = next++) {
      try {
        out[i] = evaluate_log(inputs[i], alphas);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

Summary summarize(std::span<const LogScores> scores) {
  if (scores.empty()) throw InvalidInput("summarize: no logs");
  Summary s;
  s.logs = scores.size();
  Counts frames;
  std::vector<LogDecision> decisions;
  for (const auto& l : scores) {
    s.hota_temporal += l.hota_temporal;
    s.hota += l.hota;
    frames += l.timestamp;
    decisions.push_back({l.pred_positive, l.gt_positive});
  }
  s.hota_temporal /= static_cast<double>(scores.size());
  s.hota /= static_cast<double>(scores.size());
  s.timestamp_f1 = prf_from_counts(frames).f1;
  s.log_f1 = log_f1(decisions);
  return s;
}

}  // namespace scenmine::metrics
