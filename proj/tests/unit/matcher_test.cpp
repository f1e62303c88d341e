#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "gradcheck.hpp"
#include "scenmine/matcher/checkpoint.hpp"
#include "scenmine/matcher/losses.hpp"
#include "scenmine/matcher/model.hpp"
#include "scenmine/matcher/rank.hpp"
#include "scenmine/matcher/train.hpp"
#include "synthetic.hpp"
#include "toy_corpus.hpp"

namespace scenmine::matcher {
namespace {

namespace fs = std::filesystem;

Mat random_mat(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> g;
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = g(rng);
  return m;
}

Mat unit_rows(Mat m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i).normalize();
  return m;
}

// ---- patching ---------------------------------------------------------------

TEST(PatchCount, Examples) {
  EXPECT_EQ(patch_count(64, 16, 8), 7);
  EXPECT_EQ(patch_count(16, 16, 8), 1);
  EXPECT_THROW(patch_count(15, 16, 8), TrackTooShort);
}

TEST(PatchCount, MatchesEnumerationOracle) {
  int mismatches = 0;
  for (int L = 1; L <= 128; ++L) {
    for (int P = 1; P <= 32; ++P) {
      for (int S = 1; S <= P; ++S) {
        int count = 0;
        for (int start = 0; start + P <= L; start += S) ++count;
        if (count == 0) {
          EXPECT_THROW(patch_count(L, P, S), TrackTooShort);
        } else if (patch_count(L, P, S) != count) {
          ++mismatches;
        }
      }
    }
  }
  EXPECT_EQ(mismatches, 0);
}

TEST(Patchify, TokensAreSliceProjectionsPlusPosition) {
  const auto cfg = scenmine::testing::gradcheck_config();
  Model model(cfg, 3);
  std::mt19937_64 rng(1);
  const Mat feats = random_mat(rng, 11, 10);
  ad::Tape tape(false);
  const Mat tokens = model.patchify(tape, feats).value();
  ASSERT_EQ(tokens.rows(), patch_count(11, 4, 2));
  ASSERT_EQ(tokens.cols(), cfg.patch.token_dim);
  const Mat& W = model.param("patch.W").value;
  const Mat pe = positional_encoding(static_cast<int>(tokens.rows()), cfg.patch.token_dim);
  for (Eigen::Index t = 0; t < tokens.rows(); ++t) {
    for (Eigen::Index c = 0; c < tokens.cols(); ++c) {
      double acc = pe(t, c);
      for (int k = 0; k < 4; ++k)
        for (int d = 0; d < 10; ++d) acc += feats(t * 2 + k, d) * W(k * 10 + d, c);
      EXPECT_NEAR(tokens(t, c), acc, 1e-12);
    }
  }
}

// ---- encoders ---------------------------------------------------------------

TEST(EncodeTrack, DefaultShapesAndUnitNorm) {
  MatcherConfig cfg;
  Model model(cfg, 0);
  std::mt19937_64 rng(2);
  const auto enc = encode_track(model, random_mat(rng, 64, 10));
  EXPECT_EQ(enc.sequence.rows(), 7);
  EXPECT_EQ(enc.sequence.cols(), 256);
  EXPECT_EQ(enc.pooled.cols(), 512);
  EXPECT_NEAR(enc.pooled.norm(), 1.0, 1e-6);
}

TEST(EncodeTrack, PooledNormIsOneForRandomInputs) {
  Model model(scenmine::testing::gradcheck_config(), 4);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto enc = encode_track(model, random_mat(rng, 4 + i % 20, 10) * (1 + i));
    EXPECT_NEAR(enc.pooled.norm(), 1.0, 1e-6);
  }
}

TEST(EncodeTrack, NearZeroProjectionFallsBackToUniform) {
  Model model(scenmine::testing::gradcheck_config(), 4);
  model.param("track_out.W").value *= 1e-16;
  model.param("track_out.b").value.setZero();
  std::mt19937_64 rng(5);
  const auto enc = encode_track(model, random_mat(rng, 12, 10));
  const double u = 1.0 / std::sqrt(6.0);
  for (Eigen::Index c = 0; c < enc.pooled.cols(); ++c) EXPECT_DOUBLE_EQ(enc.pooled(0, c), u);
}

TEST(EncodeText, SingleTokenIsPointwise) {
  Model model(scenmine::testing::gradcheck_config(), 6);
  std::mt19937_64 rng(7);
  const Mat x = random_mat(rng, 1, 5);
  const auto enc = encode_text(model, x);
  ASSERT_EQ(enc.sequence.rows(), 1);
  ASSERT_EQ(enc.sequence.cols(), 8);
  // Only the center tap sees a one-token sequence.
  model.param("text.conv.W0").value.setRandom();
  model.param("text.conv.W2").value.setRandom();
  EXPECT_TRUE(encode_text(model, x).sequence.isApprox(enc.sequence, 1e-14));
}

TEST(EncodeText, IdentityInitializationReducesToProjection) {
  Model model(scenmine::testing::gradcheck_config(), 6);
  model.param("text.mlp.W2").value.setZero();
  model.param("text.mlp.b2").value.setZero();
  model.param("text.conv.W0").value.setZero();
  model.param("text.conv.W2").value.setZero();
  std::mt19937_64 rng(8);
  const Mat x = random_mat(rng, 5, 5);
  const Mat expected = (x * model.param("text.conv.W1").value).rowwise() +
                       model.param("text.conv.b").value.row(0);
  EXPECT_TRUE(encode_text(model, x).sequence.isApprox(expected, 1e-13));
}

TEST(EncodeText, ConvolutionUsesNeighbours) {
  Model model(scenmine::testing::gradcheck_config(), 6);
  model.param("text.mlp.W2").value.setZero();
  std::mt19937_64 rng(9);
  const Mat x = random_mat(rng, 4, 5);
  const Mat y = encode_text(model, x).sequence;
  const auto& W0 = model.param("text.conv.W0").value;
  const auto& W1 = model.param("text.conv.W1").value;
  const auto& W2 = model.param("text.conv.W2").value;
  for (Eigen::Index m = 0; m < 4; ++m) {
    Eigen::RowVectorXd expect = x.row(m) * W1;
    if (m > 0) expect += x.row(m - 1) * W0;
    if (m < 3) expect += x.row(m + 1) * W2;
    EXPECT_TRUE(y.row(m).isApprox(expect, 1e-12));
  }
}

TEST(EncodeText, RandomTwelveTokensGiveUnitPooled) {
  MatcherConfig cfg;
  Model model(cfg, 1);
  std::mt19937_64 rng(10);
  const auto enc = encode_text(model, random_mat(rng, 12, cfg.text_dim));
  EXPECT_EQ(enc.sequence.rows(), 12);
  EXPECT_EQ(enc.pooled.cols(), 512);
  EXPECT_NEAR(enc.pooled.norm(), 1.0, 1e-6);
  EXPECT_THROW(encode_text(model, random_mat(rng, 3, 7)), InvalidInput);
}

// ---- alignment and evidence -------------------------------------------------

TEST(CrossSim, ShapeAndIdentityScaling) {
  std::mt19937_64 rng(11);
  EXPECT_EQ(cross_sim(random_mat(rng, 7, 8), random_mat(rng, 12, 8), random_mat(rng, 8, 5),
                      random_mat(rng, 8, 5))
                .rows(),
            7);
  const Mat I = Mat::Identity(4, 4);
  Mat B = Mat::Zero(3, 4), A = Mat::Zero(2, 4);
  B(0, 0) = B(1, 2) = B(2, 1) = 1;
  A(0, 2) = A(1, 1) = 1;
  const Mat S = cross_sim(B, A, I, I);
  Mat expected = Mat::Zero(3, 2);
  expected(1, 0) = expected(2, 1) = 0.5;
  EXPECT_EQ(S, expected);
}

TEST(CrossSim, MatchesTripleLoopOracle) {
  std::mt19937_64 rng(12);
  const Mat B = random_mat(rng, 7, 16), A = random_mat(rng, 12, 16);
  const Mat Wq = random_mat(rng, 16, 6), Wk = random_mat(rng, 16, 6);
  const Mat S = cross_sim(B, A, Wq, Wk);
  ASSERT_EQ(S.rows(), 7);
  ASSERT_EQ(S.cols(), 12);
  for (int t = 0; t < 7; ++t) {
    for (int m = 0; m < 12; ++m) {
      double acc = 0;
      for (int k = 0; k < 6; ++k) {
        double q = 0, kk = 0;
        for (int d = 0; d < 16; ++d) {
          q += B(t, d) * Wq(d, k);
          kk += A(m, d) * Wk(d, k);
        }
        acc += q * kk;
      }
      EXPECT_NEAR(S(t, m), acc / std::sqrt(6.0), 1e-10);
    }
  }
}

TEST(EvidenceScore, Examples) {
  EXPECT_EQ(evidence_score(Mat::Constant(1, 1, 3.2)), 3.2);
  EXPECT_EQ(evidence_score(Mat::Zero(7, 12)), 0.0);
  std::mt19937_64 rng(13);
  const Mat S = random_mat(rng, 7, 12);
  double best = -1e300;
  for (Eigen::Index i = 0; i < S.size(); ++i) best = std::max(best, S(i));
  EXPECT_EQ(evidence_score(S), best);
  // The log-sum-exp variant upper-bounds the max and approaches it as t -> 0.
  EXPECT_GE(evidence_score(S, EvidencePooling::LogSumExp, 0.1), best);
  EXPECT_NEAR(evidence_score(S, EvidencePooling::LogSumExp, 1e-4), best, 1e-3);
  EXPECT_THROW(evidence_score(Mat(0, 0)), InvalidInput);
}

// ---- losses ------------------------------------------------------------------

TEST(MilLoss, Examples) {
  EXPECT_EQ(mil_loss(Eigen::VectorXd::Constant(1, 2.5), Mat(1, 0), 0.1), 0.0);
  const long double oracle = std::log1p(std::exp(-10.0L));
  const double got = mil_loss(Eigen::VectorXd::Constant(1, 1.0), Mat::Zero(1, 1), 0.1);
  EXPECT_NEAR(got, static_cast<double>(oracle), 1e-12 * static_cast<double>(oracle));
  EXPECT_NEAR(got, 4.54e-5, 1e-7);
  for (int n_neg : {1, 3, 7}) {
    EXPECT_NEAR(mil_loss(Eigen::VectorXd::Constant(3, 0.4), Mat::Constant(3, n_neg, 0.4), 0.1),
                std::log(1.0 + n_neg), 1e-12);
  }
}

TEST(MilLoss, Errors) {
  EXPECT_THROW(mil_loss(Eigen::VectorXd::Constant(1, 1.0), Mat::Zero(1, 1), 0.0), InvalidInput);
  EXPECT_THROW(mil_loss(Eigen::VectorXd::Constant(1, NAN), Mat::Zero(1, 1), 0.1), InvalidInput);
  EXPECT_THROW(mil_loss(Eigen::VectorXd::Constant(1, 1.0),
                        Mat::Constant(1, 1, std::numeric_limits<double>::infinity()), 0.1),
               InvalidInput);
}

TEST(MilLoss, ShiftAndPermutationInvariance) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 6;
    Eigen::VectorXd pos = random_mat(rng, n, 1);
    Mat neg = random_mat(rng, n, n - 1);
    const double base = mil_loss(pos, neg, 0.1);
    EXPECT_GE(base, 0.0);
    Eigen::VectorXd pos2 = pos;
    Mat neg2 = neg;
    for (int i = 0; i < n; ++i) {
      const double c = 3.0 * (i - 1.5);
      pos2(i) += c;
      neg2.row(i).array() += c;
    }
    EXPECT_NEAR(mil_loss(pos2, neg2, 0.1), base, 1e-10);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::VectorXd pp(n);
    Mat pn(n, n - 1);
    for (int i = 0; i < n; ++i) {
      pp(i) = pos(perm[i]);
      pn.row(i) = neg.row(perm[i]);
    }
    EXPECT_NEAR(mil_loss(pp, pn, 0.1), base, 1e-12);
  }
}

TEST(GlobalInfoNce, Examples) {
  std::mt19937_64 rng(15);
  const Mat b = unit_rows(random_mat(rng, 1, 8)), a = unit_rows(random_mat(rng, 1, 8));
  EXPECT_EQ(global_infonce(b, a, 0.07), 0.0);
  for (int n : {2, 5, 16}) {
    const Mat same = unit_rows(random_mat(rng, 1, 8)).replicate(n, 1);
    EXPECT_NEAR(global_infonce(same, same, 0.07), std::log(double(n)), 1e-12);
  }
  const Mat I = Mat::Identity(2, 2);
  EXPECT_NEAR(global_infonce(I, I, 1.0), std::log1p(std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(global_infonce(I, I, 1.0), 0.3133, 5e-5);
  EXPECT_THROW(global_infonce(I * 2.0, I, 1.0), InvalidInput);
  EXPECT_THROW(global_infonce(I, I, 0.0), InvalidInput);
}

// Row and column cross-entropies of a logit matrix, computed directly.
std::pair<double, double> ce_terms(const Mat& s) {
  double rows = 0, cols = 0;
  const auto n = s.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    long double zr = 0, zc = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      zr += std::exp(static_cast<long double>(s(i, j)));
      zc += std::exp(static_cast<long double>(s(j, i)));
    }
    rows += static_cast<double>(std::log(zr)) - s(i, i);
    cols += static_cast<double>(std::log(zc)) - s(i, i);
  }
  return {rows / double(n), cols / double(n)};
}

TEST(GlobalInfoNce, SymmetryPermutationAndBounds) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 9;
    const Mat b = unit_rows(random_mat(rng, n, 12)), a = unit_rows(random_mat(rng, n, 12));
    const double base = global_infonce(b, a, 0.07);
    EXPECT_GE(base, 0.0);
    EXPECT_NEAR(global_infonce(a, b, 0.07), base, 1e-12);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Mat pb(n, 12), pa(n, 12);
    for (int i = 0; i < n; ++i) {
      pb.row(i) = b.row(perm[i]);
      pa.row(i) = a.row(perm[i]);
    }
    EXPECT_NEAR(global_infonce(pb, pa, 0.07), base, 1e-12);
    // Oracle: each cross-entropy is at most log N plus the worst margin.
    const Mat s = b * a.transpose() / 0.07;
    double margin = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        margin = std::max({margin, s(i, j) - s(i, i), s(j, i) - s(i, i)});
    EXPECT_LE(base, std::log(double(n)) + margin + 1e-12);
    const auto [r, c] = ce_terms(s);
    EXPECT_NEAR(base, 0.5 * (r + c), 1e-10);
  }
}

TEST(GlobalInfoNce, SoftmaxShiftInvariancePerDirection) {
  std::mt19937_64 rng(17);
  const Mat s = random_mat(rng, 6, 6);
  const auto [r0, c0] = ce_terms(s);
  Mat row_shift = s, col_shift = s;
  row_shift.row(2).array() += 4.0;
  col_shift.col(4).array() -= 3.0;
  EXPECT_NEAR(ce_terms(row_shift).first, r0, 1e-10);
  EXPECT_NEAR(ce_terms(col_shift).second, c0, 1e-10);
}

TEST(TotalLoss, Examples) {
  EXPECT_DOUBLE_EQ(total_loss(0.2, 0.3, 1.0, 1.0), 0.5);
  EXPECT_EQ(total_loss(0.7, 0.3, 0.0, 2.0), 0.6);
}

TEST(BatchLoss, AgreesWithStandaloneLosses) {
  auto cfg = scenmine::testing::gradcheck_config();
  Model model(cfg, 18);
  std::mt19937_64 rng(18);
  std::vector<Mat> f, t;
  std::vector<const Mat*> fp, tp;
  for (int i = 0; i < 5; ++i) {
    f.push_back(random_mat(rng, 12, 10));
    t.push_back(random_mat(rng, 3, 5));
  }
  for (int i = 0; i < 5; ++i) {
    fp.push_back(&f[i]);
    tp.push_back(&t[i]);
  }
  const auto loss = batch_loss(model, fp, tp, false);

  std::vector<TrackEncoding> te;
  std::vector<TextEncoding> xe;
  for (int i = 0; i < 5; ++i) {
    te.push_back(encode_track(model, f[i]));
    xe.push_back(encode_text(model, t[i]));
  }
  Eigen::VectorXd pos(5);
  Mat neg(5, 4), b(5, 6), a(5, 6);
  for (int i = 0; i < 5; ++i) {
    b.row(i) = te[i].pooled;
    a.row(i) = xe[i].pooled;
    int c = 0;
    for (int j = 0; j < 5; ++j) {
      const double z = evidence_score(cross_sim(te[i].sequence, xe[j].sequence,
                                                model.param("align.Wq").value,
                                                model.param("align.Wk").value));
      if (i == j) {
        pos(i) = z;
      } else {
        neg(i, c++) = z;
      }
    }
  }
  EXPECT_NEAR(loss.mil, mil_loss(pos, neg, cfg.gamma), 1e-9);
  EXPECT_NEAR(loss.global, global_infonce(b, a, cfg.tau), 1e-9);
  EXPECT_NEAR(loss.total, total_loss(loss.mil, loss.global, 1.0, 1.0), 1e-12);
  EXPECT_TRUE(std::isfinite(loss.total));

  cfg.lambda_mil = 0.0;
  Model m0(cfg, 18);
  const auto l0 = batch_loss(m0, fp, tp, false);
  EXPECT_EQ(l0.total, cfg.lambda_global * l0.global);
}

TEST(BatchLoss, SameDescriptionPairsAreNotNegatives) {
  Model model(scenmine::testing::gradcheck_config(), 19);
  std::mt19937_64 rng(19);
  const Mat t0 = random_mat(rng, 3, 5);
  std::vector<Mat> f{random_mat(rng, 12, 10), random_mat(rng, 12, 10)};
  std::vector<const Mat*> fp{&f[0], &f[1]}, tp{&t0, &t0};
  // Both pairs share one description, so each softmax holds only its positive.
  const auto l = batch_loss(model, fp, tp, false, {7, 7});
  EXPECT_EQ(l.mil, 0.0);
  EXPECT_EQ(l.global, 0.0);
}

// ---- gradients ---------------------------------------------------------------

TEST(Gradients, MatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = scenmine::testing::gradient_check(seed, 4);
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " worst " << r.worst_tensor;
  }
}

TEST(Gradients, LogSumExpEvidenceAndGroupedBatch) {
  for (std::uint64_t seed = 100; seed < 104; ++seed) {
    const auto r = scenmine::testing::gradient_check(seed, 4, EvidencePooling::LogSumExp, true);
    EXPECT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " worst " << r.worst_tensor;
  }
}

TEST(Gradients, EveryParameterReceivesGradient) {
  Model model(scenmine::testing::gradcheck_config(), 2);
  std::mt19937_64 rng(2);
  std::vector<Mat> f, t;
  for (int i = 0; i < 3; ++i) {
    f.push_back(random_mat(rng, 10, 10));
    t.push_back(random_mat(rng, 3, 5));
  }
  batch_loss(model, {&f[0], &f[1], &f[2]}, {&t[0], &t[1], &t[2]}, true);
  for (const auto& p : model.parameters()) EXPECT_GT(p.grad.norm(), 0.0) << p.name;
}

// ---- training ------------------------------------------------------------------

TEST(Schedule, WarmupThenCosine) {
  TrainConfig cfg;
  cfg.learning_rate = 1.0;
  EXPECT_DOUBLE_EQ(scheduled_lr(cfg, 0, 100, 10), 0.1);
  EXPECT_DOUBLE_EQ(scheduled_lr(cfg, 9, 100, 10), 1.0);
  EXPECT_DOUBLE_EQ(scheduled_lr(cfg, 10, 100, 10), 1.0);
  EXPECT_NEAR(scheduled_lr(cfg, 55, 100, 10), 0.5, 1e-12);
  EXPECT_NEAR(scheduled_lr(cfg, 100, 100, 10), 0.0, 1e-12);
  for (int s = 11; s < 100; ++s)
    EXPECT_LE(scheduled_lr(cfg, s, 100, 10), scheduled_lr(cfg, s - 1, 100, 10));
}

TEST(MakeBatches, ChunksInOrder) {
  const std::vector<std::size_t> order{4, 2, 0, 3, 1};
  const auto b = make_batches(order, 2);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0], (std::vector<std::size_t>{4, 2}));
  EXPECT_EQ(b[2], (std::vector<std::size_t>{1}));
}

TEST(Train, ZeroWeightsLeaveParametersUnchanged) {
  auto mc = scenmine::testing::gradcheck_config();
  mc.lambda_mil = mc.lambda_global = 0.0;
  auto corpus = scenmine::testing::make_toy_corpus(1, 2, 0, 12, mc.text_dim);
  TrainConfig tc;
  tc.batch_size = 4;
  tc.max_steps = 10;
  const auto r = train(corpus.train, mc, tc);
  EXPECT_TRUE(r.model == Model(mc, tc.seed));
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Train, SkipsShortTracksAndWarnsOnTinyBatches) {
  auto mc = scenmine::testing::gradcheck_config();
  auto corpus = scenmine::testing::make_toy_corpus(1, 1, 0, 12, mc.text_dim);
  corpus.train[0].track.states.resize(3);
  TrainConfig tc;
  tc.batch_size = 1;
  tc.max_steps = 3;
  const auto r = train(corpus.train, mc, tc);
  EXPECT_EQ(r.skipped_short, 1u);
  EXPECT_EQ(r.warnings.size(), 2u);
  std::vector<TrainPair> one(corpus.train.begin() + 1, corpus.train.begin() + 2);
  EXPECT_THROW(train(one, mc, tc), InvalidInput);
}

TEST(Train, SameSeedGivesBitwiseIdenticalCheckpoints) {
  auto mc = scenmine::testing::toy_matcher_config();
  auto tc = scenmine::testing::toy_train_config();
  tc.max_steps = 15;
  tc.batch_size = 16;
  const auto corpus = scenmine::testing::make_toy_corpus(3, 4, 0, 64, mc.text_dim);
  const auto dir = fs::temp_directory_path();
  const auto a = train(corpus.train, mc, tc);
  const auto b = train(corpus.train, mc, tc);
  save_checkpoint(dir / "scenmine_a.smck", a.model, a.norm);
  save_checkpoint(dir / "scenmine_b.smck", b.model, b.norm);
  std::ifstream fa(dir / "scenmine_a.smck", std::ios::binary), fb(dir / "scenmine_b.smck", std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(fa)), {});
  const std::string sb((std::istreambuf_iterator<char>(fb)), {});
  EXPECT_FALSE(sa.empty());
  EXPECT_EQ(sa, sb);
  tc.seed = 1;
  const auto c = train(corpus.train, mc, tc);
  EXPECT_FALSE(c.model == a.model);
}

TEST(Train, ToyCorpusLearnsToRetrieve) {
  const auto mc = scenmine::testing::toy_matcher_config();
  const auto tc = scenmine::testing::toy_train_config();
  const auto corpus = scenmine::testing::make_toy_corpus(0, 16, 8, 64, mc.text_dim);
  auto r = train(corpus.train, mc, tc);
  ASSERT_EQ(r.curve.size(), 200u);
  // Compare the mean of the first and last ten steps.
  double first = 0, last = 0;
  for (int i = 0; i < 10; ++i) {
    first += r.curve[i].loss.total;
    last += r.curve[190 + i].loss.total;
  }
  EXPECT_LT(last, first);
  const auto rep =
      scenmine::testing::evaluate_retrieval(r.model, r.norm, corpus.heldout, corpus.class_texts);
  EXPECT_GE(rep.recall_at_1, 0.9);
  EXPECT_GE(rep.mean_pos_cosine - rep.mean_neg_cosine, 0.2);

  // The planted positive outranks random negatives for its description.
  std::vector<traj::Track> cands;
  for (std::size_t i = 0; i < corpus.heldout.size(); i += 8) cands.push_back(corpus.heldout[i].track);
  const auto ranked = rank_candidates(corpus.class_texts[2], cands, r.model, r.norm, mc.alpha);
  EXPECT_EQ(ranked.front().track_id, corpus.heldout[16].track.track_id);
}

// ---- ranking ------------------------------------------------------------------

class RankTest : public ::testing::Test {
 protected:
  RankTest() : model(scenmine::testing::gradcheck_config(), 21) {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 6; ++k) {
      tracks.push_back(scenmine::testing::behavior_track(rng, k, 20, "c" + std::to_string(k)));
    }
    norm = traj::fit_norm_stats(tracks);
    query = random_mat(rng, 3, 5);
  }
  Model model;
  std::vector<traj::Track> tracks;
  traj::NormStats norm;
  Mat query;
};

TEST_F(RankTest, DuplicateCandidatesTieByIdAndSingleCandidate) {
  auto dup = tracks[2];
  dup.track_id = "a-copy";
  auto cands = tracks;
  cands.push_back(dup);
  const auto r = rank_candidates(query, cands, model, norm, 0.5);
  const auto pos_copy = std::find_if(r.begin(), r.end(), [](auto& x) { return x.track_id == "a-copy"; });
  const auto pos_orig = std::find_if(r.begin(), r.end(), [](auto& x) { return x.track_id == "c2"; });
  EXPECT_EQ(pos_copy->score, pos_orig->score);
  EXPECT_EQ(pos_copy + 1, pos_orig);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_GE(r[i - 1].score, r[i].score);

  const auto one = rank_candidates(query, {tracks[0]}, model, norm, 0.5);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].track_id, "c0");
  EXPECT_THROW(rank_candidates(query, {}, model, norm, 0.5), InvalidInput);
}

TEST_F(RankTest, ShortTracksRankLastAndBlendIsExact) {
  auto cands = tracks;
  auto shorty = tracks[0];
  shorty.track_id = "0-short";
  shorty.states.resize(3);
  cands.push_back(shorty);
  const auto r = rank_candidates(query, cands, model, norm, 0.3);
  EXPECT_EQ(r.back().track_id, "0-short");
  EXPECT_EQ(r.back().score, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i + 1 < r.size(); ++i) {
    EXPECT_NEAR(r[i].score, 0.3 * r[i].cosine + 0.7 * r[i].evidence, 1e-12);
  }
}

TEST_F(RankTest, ThreadCountDoesNotChangeResults) {
  const auto a = rank_candidates(query, tracks, model, norm, 0.5, 1);
  const auto b = rank_candidates(query, tracks, model, norm, 0.5, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].track_id, b[i].track_id);
    EXPECT_EQ(a[i].score, b[i].score);
  }
}

// ---- checkpoints ----------------------------------------------------------------

TEST(Checkpoint, RoundTripAndCorruption) {
  auto cfg = scenmine::testing::gradcheck_config();
  cfg.evidence = EvidencePooling::LogSumExp;
  cfg.alpha = 0.25;
  Model model(cfg, 5);
  traj::NormStats norm;
  for (int d = 0; d < 10; ++d) {
    norm.mean[d] = 0.5 * d;
    norm.std[d] = 1.0 + d;
  }
  const auto dir = fs::temp_directory_path() / "scenmine_ckpt";
  fs::remove_all(dir);
  save_checkpoint(dir / "m.smck", model, norm);
  auto back = load_checkpoint(dir / "m.smck");
  EXPECT_EQ(back.model.config(), cfg);
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    const auto& p = model.parameters()[i];
    EXPECT_EQ(back.model.parameters()[i].name, p.name);
    EXPECT_EQ(back.model.parameters()[i].value, p.value.cast<float>().cast<double>());
  }
  EXPECT_EQ(back.norm.mean, norm.mean);
  // Saving a loaded checkpoint reproduces the file byte for byte.
  save_checkpoint(dir / "m2.smck", back.model, back.norm);
  std::ifstream a(dir / "m.smck", std::ios::binary), b(dir / "m2.smck", std::ios::binary);
  EXPECT_EQ(std::string((std::istreambuf_iterator<char>(a)), {}),
            std::string((std::istreambuf_iterator<char>(b)), {}));

  fs::copy_file(dir / "m.smck", dir / "t.smck");
  fs::resize_file(dir / "t.smck", fs::file_size(dir / "t.smck") - 2);
  EXPECT_THROW(load_checkpoint(dir / "t.smck"), FormatError);
  {
    std::fstream f(dir / "m2.smck", std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(4);
    f.put(9);
  }
  EXPECT_THROW(load_checkpoint(dir / "m2.smck"), FormatError);
  std::ofstream(dir / "bad.smck") << "XXXXXXXX";
  EXPECT_THROW(load_checkpoint(dir / "bad.smck"), FormatError);
}

}  // namespace
}  // namespace scenmine::matcher
