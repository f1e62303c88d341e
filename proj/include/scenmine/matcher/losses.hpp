#pragma once

#include <vector>

#include <Eigen/Dense>

#include "scenmine/matcher/model.hpp"

namespace scenmine::matcher {

// Mean over i of -log(e^{z_i/g} / (e^{z_i/g} + sum_j e^{neg_ij/g})).
// z_neg has one row per positive and any number of columns. Throws
// InvalidInput for non-finite inputs or gamma <= 0.
double mil_loss(const Eigen::VectorXd& z_pos, const Mat& z_neg, double gamma);

// Symmetric InfoNCE over s_ij = b_i . a_j / tau: half the sum of the row and
// column cross-entropies against the diagonal, averaged over the batch. Rows
// of b and a must be unit length within 1e-6.
double global_infonce(const Mat& b_hat, const Mat& a_hat, double tau);

double total_loss(double mil, double global, double lambda_mil, double lambda_global);

struct LossBundle {
  double mil = 0.0;
  double global = 0.0;
  double total = 0.0;
};

// Objective over a batch of (track features, text tokens) pairs where pair i
// is the positive for both track i and text i. Pairing track i with text j is
// a negative unless groups[i] == groups[j] (same description), in which case
// the pair is left out of both softmaxes. Empty `groups` means all distinct.
// With `backward`, gradients accumulate into the model parameters.
LossBundle batch_loss(Model& model, const std::vector<const Mat*>& features,
                      const std::vector<const Mat*>& texts, bool backward,
                      const std::vector<int>& groups = {});

}  // namespace scenmine::matcher
