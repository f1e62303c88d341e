#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "metrics_oracle.hpp"
#include "scenmine/errors.hpp"
#include "scenmine/metrics/assignment.hpp"
#include "scenmine/metrics/box.hpp"
#include "scenmine/metrics/results.hpp"
#include "scenmine/metrics/scores.hpp"

using namespace scenmine;
using namespace scenmine::metrics;

namespace {

std::int64_t frame_ts(int f) { return static_cast<std::int64_t>(f) * 100'000'000; }

Box3D car(double x, double y = 0.0) { return {x, y, 0.0, 4.0, 2.0, 1.5, 0.0}; }

double brute_min_cost(const CostMatrix& c) {
  const std::size_t n = c.size(), m = c.front().size();
  const std::size_t big = std::max(n, m);
  std::vector<std::size_t> perm(big);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      if (perm[r] < m) total += c[r][perm[r]];
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST(Assignment, MatchesPermutationSearch) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> val(-5.0, 5.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = dim(rng), m = dim(rng);
    CostMatrix c(n, std::vector<double>(m));
    for (auto& row : c)
      for (auto& x : row) x = trial % 3 == 0 ? std::round(val(rng)) : val(rng);
    const auto a = min_cost_assignment(c);
    ASSERT_EQ(a.size(), static_cast<std::size_t>(n));
    std::set<int> cols;
    double total = 0.0;
    int matched = 0;
    for (int r = 0; r < n; ++r) {
      if (a[r] < 0) continue;
      ++matched;
      EXPECT_TRUE(cols.insert(a[r]).second);
      total += c[r][a[r]];
    }
    EXPECT_EQ(matched, std::min(n, m));
    EXPECT_NEAR(total, brute_min_cost(c), 1e-9) << "trial " << trial;
  }
}

TEST(Assignment, EdgeCases) {
  EXPECT_TRUE(min_cost_assignment({}).empty());
  EXPECT_EQ(min_cost_assignment({{}, {}}), (std::vector<int>{-1, -1}));
  EXPECT_EQ(max_score_assignment({{1.0, 5.0}, {4.0, 1.0}}), (std::vector<int>{1, 0}));
  EXPECT_THROW(min_cost_assignment({{1.0, 2.0}, {3.0}}), InvalidInput);
  EXPECT_THROW(min_cost_assignment({{NAN}}), InvalidInput);
}

TEST(Box, IdenticalAndDisjoint) {
  const Box3D a{1.0, 2.0, 0.3, 4.0, 2.0, 1.5, 0.7};
  EXPECT_NEAR(iou_3d(a, a), 1.0, 1e-12);
  EXPECT_EQ(iou_3d(a, car(50.0)), 0.0);
  Box3D above = a;
  above.cz += 1.6;
  EXPECT_EQ(iou_3d(a, above), 0.0);
  Box3D flat = a;
  flat.height = 0.0;
  EXPECT_EQ(iou_3d(a, flat), 0.0);
}

TEST(Box, AxisAlignedClosedForm) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.2, 3.0), off(-2.0, 2.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Box3D a{off(rng), off(rng), off(rng), u(rng), u(rng), u(rng), 0.0};
    const Box3D b{off(rng), off(rng), off(rng), u(rng), u(rng), u(rng), 0.0};
    auto overlap = [](double c1, double e1, double c2, double e2) {
      return std::max(0.0, std::min(c1 + e1 / 2, c2 + e2 / 2) - std::max(c1 - e1 / 2, c2 - e2 / 2));
    };
    const double inter = overlap(a.cx, a.length, b.cx, b.length) *
                         overlap(a.cy, a.width, b.cy, b.width) *
                         overlap(a.cz, a.height, b.cz, b.height);
    const double uni = a.length * a.width * a.height + b.length * b.width * b.height - inter;
    EXPECT_NEAR(iou_3d(a, b), inter / uni, 1e-12);
  }
}

TEST(Box, ShiftedCarHasIouThreeFifths) {
  // Overlap (l - d) over union (l + d) with l = 4, d = 1.
  EXPECT_NEAR(iou_3d(car(0.0), car(1.0)), 0.6, 1e-15);
}

TEST(Box, RotatedAgainstGridSampling) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.5, 3.0), off(-1.0, 1.0), ang(-3.2, 3.2);
  auto inside = [](const Box3D& b, double x, double y) {
    const double c = std::cos(b.yaw), s = std::sin(b.yaw);
    const double lx = c * (x - b.cx) + s * (y - b.cy);
    const double ly = -s * (x - b.cx) + c * (y - b.cy);
    return std::abs(lx) <= b.length / 2 && std::abs(ly) <= b.width / 2;
  };
  for (int trial = 0; trial < 20; ++trial) {
    const Box3D a{off(rng), off(rng), 0.0, u(rng), u(rng), 1.0, ang(rng)};
    const Box3D b{off(rng), off(rng), 0.0, u(rng), u(rng), 1.0, ang(rng)};
    const int n = 600;
    const double lo = -3.0, step = 6.0 / n;
    double hits = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double x = lo + (i + 0.5) * step, y = lo + (j + 0.5) * step;
        if (inside(a, x, y) && inside(b, x, y)) hits += 1;
      }
    const double area = hits * step * step;
    const double expect = area / (a.length * a.width + b.length * b.width - area);
    EXPECT_NEAR(iou_3d(a, b), expect, 0.01) << "trial " << trial;
  }
}

TEST(Box, SymmetricAndRotationInvariant) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.5, 3.0), off(-1.5, 1.5), ang(-3.2, 3.2);
  for (int trial = 0; trial < 300; ++trial) {
    Box3D a{off(rng), off(rng), off(rng), u(rng), u(rng), u(rng), ang(rng)};
    Box3D b{off(rng), off(rng), off(rng), u(rng), u(rng), u(rng), ang(rng)};
    const double base = iou_3d(a, b);
    EXPECT_NEAR(base, iou_3d(b, a), 1e-12);
    EXPECT_GE(base, 0.0);
    EXPECT_LE(base, 1.0);
    const double th = ang(rng), c = std::cos(th), s = std::sin(th);
    for (Box3D* x : {&a, &b}) {
      const double cx = c * x->cx - s * x->cy, cy = s * x->cx + c * x->cy;
      x->cx = cx;
      x->cy = cy;
      x->yaw += th;
    }
    EXPECT_NEAR(base, iou_3d(a, b), 1e-9);
  }
}

TEST(Box, FromStateUsesQuaternionYaw) {
  traj::TrackState s;
  s.tx = 1;
  s.ty = 2;
  s.tz = 3;
  s.qw = std::cos(0.25);
  s.qz = std::sin(0.25);
  s.length = 4;
  s.width = 2;
  s.height = 1.5;
  const Box3D b = box_from_state(s);
  EXPECT_NEAR(b.yaw, 0.5, 1e-12);
  EXPECT_EQ(b.cx, 1);
  EXPECT_EQ(b.height, 1.5);
}

TEST(TimestampF1, Examples) {
  const auto same = timestamp_f1({1, 2}, {1, 2});
  EXPECT_EQ(same.f1, 1.0);
  const auto shifted = timestamp_f1({3, 4, 5}, {2, 3, 4});
  EXPECT_DOUBLE_EQ(shifted.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(shifted.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(shifted.f1, 2.0 / 3.0);
  const auto missed = timestamp_f1({}, {1});
  EXPECT_EQ(missed.precision, 0.0);
  EXPECT_EQ(missed.recall, 0.0);
  EXPECT_EQ(missed.f1, 0.0);
  const auto silent = timestamp_f1({}, {});
  EXPECT_EQ(silent.precision, 1.0);
  EXPECT_EQ(silent.recall, 1.0);
  EXPECT_EQ(silent.f1, 1.0);
}

TEST(TimestampF1, CountingOracleAndSymmetry) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> len(0, 40);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = len(rng);
    std::set<std::int64_t> pred, gt;
    std::vector<bool> lp(n), lg(n);
    for (int f = 0; f < n; ++f) {
      lp[f] = coin(rng);
      lg[f] = coin(rng);
      if (lp[f]) pred.insert(frame_ts(f));
      if (lg[f]) gt.insert(frame_ts(f));
    }
    int tp = 0, fp = 0, fn = 0;
    for (int f = 0; f < n; ++f) {
      tp += lp[f] && lg[f];
      fp += lp[f] && !lg[f];
      fn += !lp[f] && lg[f];
    }
    const auto r = timestamp_f1(pred, gt);
    const double f1 = tp + fp + fn == 0 ? 1.0 : 2.0 * tp / (2.0 * tp + fp + fn);
    EXPECT_EQ(r.f1, f1);
    if (tp + fp > 0) EXPECT_EQ(r.precision, static_cast<double>(tp) / (tp + fp));
    if (tp + fn > 0) EXPECT_EQ(r.recall, static_cast<double>(tp) / (tp + fn));
    EXPECT_EQ(r.f1, timestamp_f1(gt, pred).f1);
  }
}

TEST(LogF1, Examples) {
  const std::vector<LogDecision> all{{true, true}, {true, true}};
  EXPECT_EQ(log_f1(all), 1.0);
  const std::vector<LogDecision> one_fp{{true, true}, {true, false}};
  EXPECT_DOUBLE_EQ(log_f1(one_fp), 2.0 / 3.0);
  const std::vector<LogDecision> vacuous{{false, false}, {false, false}};
  EXPECT_EQ(log_f1(vacuous), 1.0);
  EXPECT_THROW(log_f1({}), InvalidInput);
}

TEST(LogF1, CountingOracle) {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> len(1, 30);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<LogDecision> d(len(rng));
    int tp = 0, fp = 0, fn = 0;
    for (auto& x : d) {
      x = {coin(rng), coin(rng)};
      tp += x.pred && x.gt;
      fp += x.pred && !x.gt;
      fn += !x.pred && x.gt;
    }
    const double expect = tp + fp + fn == 0 ? 1.0 : 2.0 * tp / (2.0 * tp + fp + fn);
    EXPECT_EQ(log_f1(d), expect);
  }
}

TEST(Hota, PerfectPredictionScoresOne) {
  Frames gt;
  for (int f = 0; f < 10; ++f) {
    gt[frame_ts(f)].push_back({"a", car(f)});
    gt[frame_ts(f)].push_back({"b", car(f, 5.0)});
  }
  Frames pred;
  for (const auto& [t, dets] : gt)
    for (const auto& d : dets) pred[t].push_back({d.track_id == "a" ? "x" : "y", d.box});
  const auto r = hota(gt, pred, default_alphas());
  EXPECT_NEAR(r.hota, 1.0, 1e-12);
  EXPECT_NEAR(r.det_a, 1.0, 1e-12);
  EXPECT_NEAR(r.ass_a, 1.0, 1e-12);
}

TEST(Hota, EmptyConventions) {
  const Frames none;
  Frames some;
  some[0].push_back({"a", car(0)});
  EXPECT_EQ(hota(none, none, default_alphas()).hota, 1.0);
  EXPECT_EQ(hota(some, none, default_alphas()).hota, 0.0);
  EXPECT_EQ(hota(none, some, default_alphas()).hota, 0.0);
  // A frame key with no detections is still empty.
  Frames hollow;
  hollow[5];
  EXPECT_EQ(hota(hollow, none, default_alphas()).hota, 1.0);
}

TEST(Hota, SingleTrackAtThreeFifthsIou) {
  Frames gt, pred;
  for (int f = 0; f < 8; ++f) {
    gt[frame_ts(f)].push_back({"g", car(f)});
    pred[frame_ts(f)].push_back({"p", car(f + 1.0)});
  }
  const auto alphas = default_alphas();
  const auto r = hota(gt, pred, alphas);
  // Hits for alpha in {0.05, ..., 0.60}: 12 of the 19 thresholds.
  EXPECT_NEAR(r.hota, 12.0 / 19.0, 1e-12);
  EXPECT_NEAR(r.hota, scenmine::testing::oracle_hota(gt, pred, alphas), 1e-12);
  for (std::size_t a = 0; a < alphas.size(); ++a)
    EXPECT_EQ(r.hota_alpha[a] > 0.5, a < 12) << "alpha " << alphas[a];
}

TEST(Hota, IdentitySwitchLowersAssociation) {
  Frames gt, pred;
  for (int f = 0; f < 10; ++f) {
    gt[frame_ts(f)].push_back({"g", car(f)});
    pred[frame_ts(f)].push_back({f < 5 ? "p1" : "p2", car(f)});
  }
  const auto r = hota(gt, pred, default_alphas());
  EXPECT_NEAR(r.det_a, 1.0, 1e-12);
  // Each half matches 5 of 10 gt frames: AssA = 0.5 and HOTA = sqrt(0.5).
  EXPECT_NEAR(r.ass_a, 0.5, 1e-12);
  EXPECT_NEAR(r.hota, std::sqrt(0.5), 1e-12);
}

TEST(Hota, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(31);
  const auto alphas = default_alphas();
  int nontrivial = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const auto c = scenmine::testing::random_metrics_case(rng, 3, 10);
    const double got = hota(c.gt, c.pred, alphas).hota;
    const double want = scenmine::testing::oracle_hota(c.gt, c.pred, alphas);
    EXPECT_NEAR(got, want, 1e-12) << "trial " << trial;
    EXPECT_GE(got, 0.0);
    EXPECT_LE(got, 1.0);
    nontrivial += got > 0.0 && got < 1.0;
  }
  EXPECT_GT(nontrivial, 200);
}

TEST(Hota, InvariantUnderConsistentRelabeling) {
  std::mt19937_64 rng(32);
  const auto alphas = default_alphas();
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = scenmine::testing::random_metrics_case(rng, 3, 10);
    auto relabel = [](const Frames& in, const std::string& prefix) {
      Frames out;
      for (const auto& [t, dets] : in) {
        auto copy = dets;
        for (auto& d : copy) d.track_id = prefix + d.track_id + "_renamed";
        std::reverse(copy.begin(), copy.end());
        out[t] = copy;
      }
      return out;
    };
    EXPECT_NEAR(hota(c.gt, c.pred, alphas).hota,
                hota(relabel(c.gt, "q"), relabel(c.pred, "z"), alphas).hota, 1e-12);
  }
}

TEST(Hota, Preconditions) {
  Frames dup;
  dup[0].push_back({"a", car(0)});
  dup[0].push_back({"a", car(9)});
  Frames ok;
  ok[0].push_back({"a", car(0)});
  EXPECT_THROW(hota(dup, ok, default_alphas()), InvalidInput);
  EXPECT_THROW(hota(ok, ok, std::vector<double>{}), InvalidInput);
  EXPECT_THROW(hota(ok, ok, std::vector<double>{1.5}), InvalidInput);
}

TEST(HotaTemporal, IgnoresPredictionsOutsideScenario) {
  LogEval in;
  for (int f = 3; f < 7; ++f) in.gt[frame_ts(f)].push_back({"g", car(f)});
  for (int f = 0; f < 10; ++f) in.pred[frame_ts(f)].push_back({"p", car(f)});
  const auto alphas = default_alphas();
  EXPECT_NEAR(hota_temporal(in, alphas).hota, 1.0, 1e-12);
  EXPECT_LT(hota(in.gt, in.pred, alphas).hota, 1.0);

  in.scenario = std::vector<traj::TimeInterval>{{0.0, 0.45}};
  // Explicit range covering frames 0..4: gt at 3, 4 matched, pred 0..2 are FPs.
  EXPECT_LT(hota_temporal(in, alphas).hota, 1.0);
  EXPECT_GT(hota_temporal(in, alphas).hota, 0.0);
}

TEST(HotaTemporal, EmptyGroundTruthKeepsStrayPredictions) {
  LogEval in;
  in.pred[0].push_back({"p", car(0)});
  EXPECT_EQ(hota_temporal(in, default_alphas()).hota, 0.0);
  in.pred.clear();
  EXPECT_EQ(hota_temporal(in, default_alphas()).hota, 1.0);
}

TEST(FramesFromMask, BoxesAndMissingEntries) {
  traj::LogManifest log;
  log.log_id = "L";
  traj::Track t;
  t.track_id = "car";
  t.category = "REGULAR_VEHICLE";
  for (int f = 0; f < 3; ++f) {
    traj::TrackState s;
    s.timestamp_ns = frame_ts(f);
    s.tx = f;
    t.states.push_back(s);
  }
  log.tracks.push_back(t);
  dsl::ScenarioMask m{"L", {{"car", frame_ts(1)}, {"car", frame_ts(2)}}};
  const Frames fr = frames_from_mask(m, log);
  ASSERT_EQ(fr.size(), 2u);
  EXPECT_EQ(fr.at(frame_ts(2)).front().box.cx, 2.0);

  dsl::ScenarioMask bad_ts{"L", {{"car", frame_ts(7)}}};
  EXPECT_THROW(frames_from_mask(bad_ts, log), InvalidInput);
  dsl::ScenarioMask bad_track{"L", {{"bus", frame_ts(0)}}};
  EXPECT_THROW(frames_from_mask(bad_track, log), InvalidInput);
}

TEST(Evaluate, SummaryAndParallelAgree) {
  std::mt19937_64 rng(41);
  std::vector<LogEval> logs;
  for (int i = 0; i < 12; ++i) {
    const auto c = scenmine::testing::random_metrics_case(rng, 3, 10);
    logs.push_back(LogEval{"log" + std::to_string(i), c.gt, c.pred, std::nullopt});
  }
  const auto alphas = default_alphas();
  const auto seq = evaluate_logs(logs, alphas, 1);
  const auto par = evaluate_logs(logs, alphas, 4);
  ASSERT_EQ(seq.size(), par.size());
  Counts frames;
  std::vector<LogDecision> decisions;
  double ht = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    EXPECT_EQ(seq[i].log_id, par[i].log_id);
    EXPECT_EQ(seq[i].hota_temporal, par[i].hota_temporal);
    EXPECT_EQ(seq[i].hota, par[i].hota);
    frames += seq[i].timestamp;
    decisions.push_back({seq[i].pred_positive, seq[i].gt_positive});
    ht += seq[i].hota_temporal;
  }
  const Summary s = summarize(seq);
  EXPECT_EQ(s.logs, 12u);
  EXPECT_NEAR(s.hota_temporal, ht / 12.0, 1e-15);
  EXPECT_EQ(s.timestamp_f1, prf_from_counts(frames).f1);
  EXPECT_EQ(s.log_f1, log_f1(decisions));
  EXPECT_THROW(summarize({}), InvalidInput);
}

TEST(Evaluate, PerfectLogsScoreOneEverywhere) {
  std::vector<LogEval> logs;
  for (int i = 0; i < 3; ++i) {
    LogEval e;
    e.log_id = "l" + std::to_string(i);
    for (int f = 2; f < 6; ++f) e.gt[frame_ts(f)].push_back({"a", car(f)});
    e.pred = e.gt;
    logs.push_back(e);
  }
  logs.push_back(LogEval{"silent", {}, {}, std::nullopt});
  const Summary s = summarize(evaluate_logs(logs, default_alphas(), 2));
  EXPECT_NEAR(s.hota_temporal, 1.0, 1e-12);
  EXPECT_NEAR(s.hota, 1.0, 1e-12);
  EXPECT_EQ(s.timestamp_f1, 1.0);
  EXPECT_EQ(s.log_f1, 1.0);
}

TEST(Results, RoundTripAndTable) {
  LogScores l;
  l.log_id = "abc";
  l.hota_temporal = 0.25;
  l.hota = 0.125;
  l.timestamp = {3, 1, 2};
  l.timestamp_prf = prf_from_counts(l.timestamp);
  l.pred_positive = true;
  l.gt_positive = true;
  l.pred_entries = 4;
  l.gt_entries = 5;
  const std::vector<LogScores> logs{l};
  const Summary s = summarize(logs);
  std::stringstream ss;
  write_results(ss, logs, s);
  const std::string text = ss.str();
  EXPECT_NE(text.find("\"HOTA-T\""), std::string::npos);
  EXPECT_NE(text.find("\"Log-F1\""), std::string::npos);
  const auto back = read_results(ss);
  ASSERT_EQ(back.logs.size(), 1u);
  EXPECT_EQ(back.logs[0].log_id, "abc");
  EXPECT_EQ(back.logs[0].timestamp.fn, 2u);
  EXPECT_EQ(back.summary.hota, s.hota);
  EXPECT_EQ(back.summary.timestamp_f1, s.timestamp_f1);

  EXPECT_EQ(format_table(s),
            "  HOTA-T     HOTA    TS-F1   Log-F1\n"
            "   25.00    12.50    66.67   100.00\n");

  std::stringstream no_summary(text.substr(0, text.find('\n') + 1));
  EXPECT_THROW(read_results(no_summary), FormatError);
  std::stringstream junk("{not json\n");
  EXPECT_THROW(read_results(junk), FormatError);
}
