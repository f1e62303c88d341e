#include "scenmine/matcher/losses.hpp"

#include <cmath>
#include <limits>

#include "scenmine/errors.hpp"

namespace scenmine::matcher {

namespace {

bool all_finite(const Mat& m) { return m.array().isFinite().all(); }

// -log softmax(x)[target] with the max-shift; log1p keeps full relative
// precision when the target is the maximum and the loss is tiny.
double neg_log_softmax(const Eigen::RowVectorXd& x, Eigen::Index target) {
  const double m = x.maxCoeff();
  if (x(target) == m) {
    const double rest = (x.array() - m).exp().sum() - 1.0;
    return std::log1p(rest);
  }
  return m + std::log((x.array() - m).exp().sum()) - x(target);
}

}  // namespace

double mil_loss(const Eigen::VectorXd& z_pos, const Mat& z_neg, double gamma) {
  if (!(gamma > 0.0)) throw InvalidInput("gamma must be positive");
  if (z_pos.size() == 0) throw InvalidInput("mil_loss needs at least one positive");
  if (z_neg.rows() != z_pos.size()) throw InvalidInput("z_neg needs one row per positive");
  if (!z_pos.array().isFinite().all() || !all_finite(z_neg)) {
    throw InvalidInput("mil_loss inputs must be finite");
  }
  double sum = 0.0;
  Eigen::RowVectorXd row(z_neg.cols() + 1);
  for (Eigen::Index i = 0; i < z_pos.size(); ++i) {
    row(0) = z_pos(i) / gamma;
    row.tail(z_neg.cols()) = z_neg.row(i) / gamma;
    sum += neg_log_softmax(row, 0);
  }
  return sum / static_cast<double>(z_pos.size());
}

double global_infonce(const Mat& b_hat, const Mat& a_hat, double tau) {
  if (!(tau > 0.0)) throw InvalidInput("tau must be positive");
  if (b_hat.rows() < 1 || b_hat.rows() != a_hat.rows() || b_hat.cols() != a_hat.cols()) {
    throw InvalidInput("global_infonce needs two N x e matrices with N >= 1");
  }
  if (!all_finite(b_hat) || !all_finite(a_hat)) throw InvalidInput("inputs must be finite");
  for (Eigen::Index i = 0; i < b_hat.rows(); ++i) {
    if (std::abs(b_hat.row(i).norm() - 1.0) > 1e-6 || std::abs(a_hat.row(i).norm() - 1.0) > 1e-6) {
      throw InvalidInput("global_infonce rows must be L2-normalized");
    }
  }
  const Mat s = b_hat * a_hat.transpose() / tau;
  const Eigen::Index n = s.rows();
  double rows = 0.0, cols = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    rows += neg_log_softmax(s.row(i), i);
    cols += neg_log_softmax(s.col(i).transpose(), i);
  }
  return 0.5 * (rows + cols) / static_cast<double>(n);
}

double total_loss(double mil, double global, double lambda_mil, double lambda_global) {
  return lambda_mil * mil + lambda_global * global;
}

LossBundle batch_loss(Model& model, const std::vector<const Mat*>& features,
                      const std::vector<const Mat*>& texts, bool backward,
                      const std::vector<int>& groups) {
  const std::size_t n = features.size();
  if (n == 0 || texts.size() != n) throw InvalidInput("batch needs matching non-empty sides");
  if (!groups.empty() && groups.size() != n) throw InvalidInput("one group id per pair");
  const auto& cfg = model.config();
  ad::Tape tape(backward);

  std::vector<Var> queries, keys, b_hat, a_hat;
  for (std::size_t i = 0; i < n; ++i) {
    Var seq = model.encode_track_sequence(tape, model.patchify(tape, *features[i]));
    queries.push_back(model.track_queries(tape, seq));
    b_hat.push_back(model.pool_track(tape, seq));
  }
  for (std::size_t j = 0; j < n; ++j) {
    Var seq = model.encode_text_sequence(tape, *texts[j]);
    keys.push_back(model.text_keys(tape, seq));
    a_hat.push_back(model.pool_text(tape, seq));
  }
  std::vector<Var> z;
  z.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      z.push_back(model.evidence(model.alignment(queries[i], keys[j])));
    }
  }
  const auto N = static_cast<Eigen::Index>(n);
  Mat mask = Mat::Zero(N, N);
  bool masked = false;
  for (Eigen::Index i = 0; i < N && !groups.empty(); ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      if (i != j && groups[i] == groups[j]) {
        mask(i, j) = -std::numeric_limits<double>::infinity();
        masked = true;
      }
    }
  }
  const auto apply_mask = [&](Var logits) {
    return masked ? ad::add(logits, tape.constant(mask)) : logits;
  };
  Var evidence = ad::stack_scalars(z, N, N);
  Var mil = ad::cross_entropy_diag(apply_mask(ad::scale(evidence, 1.0 / cfg.gamma)));

  Var sims = apply_mask(ad::scale(
      ad::matmul_nt(ad::concat_rows(b_hat), ad::concat_rows(a_hat)), 1.0 / cfg.tau));
  Var global = ad::scale(
      ad::add(ad::cross_entropy_diag(sims), ad::cross_entropy_diag(ad::transpose(sims))), 0.5);
  Var total = ad::add(ad::scale(mil, cfg.lambda_mil), ad::scale(global, cfg.lambda_global));
  if (backward) tape.backward(total);
  return {mil.scalar(), global.scalar(), total.scalar()};
}

}  // namespace scenmine::matcher
