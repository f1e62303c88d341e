#pragma once

// Reference HOTA: identity alignment written out over string-keyed maps, and
// per-frame matching by enumerating every partial one-to-one pairing instead
// of solving an assignment problem. Only viable for a handful of tracks.

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "scenmine/metrics/scores.hpp"

namespace scenmine::testing {

inline double oracle_hota(const metrics::Frames& gt, const metrics::Frames& pred,
                          const std::vector<double>& alphas) {
  using Key = std::pair<std::string, std::string>;
  std::size_t n_gt = 0, n_pred = 0;
  for (const auto& [t, d] : gt) n_gt += d.size();
  for (const auto& [t, d] : pred) n_pred += d.size();
  if (n_gt == 0 && n_pred == 0) return 1.0;
  if (n_gt == 0 || n_pred == 0) return 0.0;

  struct Frame {
    std::vector<metrics::Detection> g, p;
    std::vector<std::vector<double>> sim;
  };
  std::set<std::int64_t> stamps;
  for (const auto& [t, d] : gt) stamps.insert(t);
  for (const auto& [t, d] : pred) stamps.insert(t);
  std::vector<Frame> frames;
  std::map<std::string, double> gcount, pcount;
  std::map<Key, double> potential;
  for (auto t : stamps) {
    Frame f;
    if (gt.count(t)) f.g = gt.at(t);
    if (pred.count(t)) f.p = pred.at(t);
    f.sim.assign(f.g.size(), std::vector<double>(f.p.size()));
    for (std::size_t i = 0; i < f.g.size(); ++i)
      for (std::size_t j = 0; j < f.p.size(); ++j) f.sim[i][j] = metrics::iou_3d(f.g[i].box, f.p[j].box);
    for (const auto& d : f.g) gcount[d.track_id] += 1;
    for (const auto& d : f.p) pcount[d.track_id] += 1;
    for (std::size_t i = 0; i < f.g.size(); ++i) {
      for (std::size_t j = 0; j < f.p.size(); ++j) {
        double row = 0, col = 0;
        for (std::size_t jj = 0; jj < f.p.size(); ++jj) row += f.sim[i][jj];
        for (std::size_t ii = 0; ii < f.g.size(); ++ii) col += f.sim[ii][j];
        const double denom = row + col - f.sim[i][j];
        if (denom > std::numeric_limits<double>::epsilon())
          potential[{f.g[i].track_id, f.p[j].track_id}] += f.sim[i][j] / denom;
      }
    }
    frames.push_back(std::move(f));
  }
  auto align = [&](const std::string& g, const std::string& p) {
    const auto it = potential.find({g, p});
    const double pot = it == potential.end() ? 0.0 : it->second;
    return pot / (gcount[g] + pcount[p] - pot);
  };

  // Best partial matching per frame by exhaustive search.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> best(frames.size());
  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    const Frame& f = frames[fi];
    double best_total = -1.0;
    std::vector<std::pair<std::size_t, std::size_t>> cur;
    std::vector<bool> used(f.p.size(), false);
    auto rec = [&](auto&& self, std::size_t i, double total) -> void {
      if (i == f.g.size()) {
        if (total > best_total) {
          best_total = total;
          best[fi] = cur;
        }
        return;
      }
      self(self, i + 1, total);
      for (std::size_t j = 0; j < f.p.size(); ++j) {
        if (used[j]) continue;
        used[j] = true;
        cur.push_back({i, j});
        self(self, i + 1, total + align(f.g[i].track_id, f.p[j].track_id) * f.sim[i][j]);
        cur.pop_back();
        used[j] = false;
      }
    };
    rec(rec, 0, 0.0);
  }

  double sum = 0.0;
  for (double alpha : alphas) {
    double tp = 0, fn = 0, fp = 0;
    std::map<Key, double> matched;
    for (std::size_t fi = 0; fi < frames.size(); ++fi) {
      const Frame& f = frames[fi];
      double hits = 0;
      for (auto [i, j] : best[fi]) {
        if (f.sim[i][j] >= alpha - metrics::kAlphaSlack) {
          hits += 1;
          matched[{f.g[i].track_id, f.p[j].track_id}] += 1;
        }
      }
      tp += hits;
      fn += static_cast<double>(f.g.size()) - hits;
      fp += static_cast<double>(f.p.size()) - hits;
    }
    double ass = 0;
    for (const auto& [k, m] : matched)
      ass += m * m / std::max(1.0, gcount[k.first] + pcount[k.second] - m);
    const double ass_a = ass / std::max(1.0, tp);
    const double det_a = tp / std::max(1.0, tp + fn + fp);
    sum += std::sqrt(det_a * ass_a);
  }
  return sum / static_cast<double>(alphas.size());
}

// Random scene: up to `max_tracks` ground-truth tracks drifting along random
// headings, predictions that each follow one ground-truth track (switching
// target occasionally) with positional noise, or wander on their own.
struct MetricsCase {
  metrics::Frames gt;
  metrics::Frames pred;
};

inline MetricsCase random_metrics_case(std::mt19937_64& rng, int max_tracks, int max_frames) {
  std::uniform_int_distribution<int> ntrack(0, max_tracks), nframe(1, max_frames);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int frames = nframe(rng);
  const int ng = ntrack(rng), np = ntrack(rng);
  const auto ts = [](int f) { return static_cast<std::int64_t>(f) * 100'000'000; };

  std::vector<std::vector<metrics::Box3D>> gt_path(ng);
  for (int g = 0; g < ng; ++g) {
    metrics::Box3D b{6.0 * u(rng) - 3.0, 6.0 * u(rng) - 3.0, 0.5 * u(rng), 3.0 + 2.0 * u(rng),
                     1.5 + u(rng), 1.2 + u(rng), 6.283 * u(rng)};
    const double vx = u(rng) - 0.5, vy = u(rng) - 0.5;
    for (int f = 0; f < frames; ++f) {
      gt_path[g].push_back(b);
      b.cx += vx;
      b.cy += vy;
      b.yaw += 0.1 * (u(rng) - 0.5);
    }
  }
  MetricsCase c;
  for (int g = 0; g < ng; ++g) {
    for (int f = 0; f < frames; ++f)
      if (u(rng) < 0.8) c.gt[ts(f)].push_back({"g" + std::to_string(g), gt_path[g][f]});
  }
  for (int p = 0; p < np; ++p) {
    int target = ng > 0 ? static_cast<int>(u(rng) * ng) % ng : -1;
    const double noise = 1.2 * u(rng);
    metrics::Box3D wander{6.0 * u(rng) - 3.0, 6.0 * u(rng) - 3.0, 0.0, 4.0, 2.0, 1.5, 0.0};
    for (int f = 0; f < frames; ++f) {
      if (ng > 0 && u(rng) < 0.15) target = static_cast<int>(u(rng) * ng) % ng;
      if (u(rng) > 0.8) continue;
      metrics::Box3D b = target >= 0 ? gt_path[target][f] : wander;
      b.cx += noise * (u(rng) - 0.5);
      b.cy += noise * (u(rng) - 0.5);
      b.cz += 0.3 * (u(rng) - 0.5);
      b.length *= 0.8 + 0.4 * u(rng);
      b.yaw += 0.3 * (u(rng) - 0.5);
      c.pred[ts(f)].push_back({"p" + std::to_string(p), b});
    }
  }
  return c;
}

}  // namespace scenmine::testing
