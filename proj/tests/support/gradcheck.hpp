#pragma once

#include <cstdint>
#include <string>

#include "scenmine/matcher/config.hpp"

namespace scenmine::testing {

struct GradCheckResult {
  // Largest per-tensor ||analytic - numeric|| / max(||analytic||, ||numeric||),
  // taken as 0 when both norms are below 1e-8.
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t tensors = 0;
  std::size_t entries = 0;
};

// Tiny matcher used for finite-difference checks.
matcher::MatcherConfig gradcheck_config();

// Compares the analytic gradient of the total objective on a random batch of
// `batch` pairs against central differences with step h, for every entry of
// every parameter tensor. With `grouped`, pairs 0 and 1 share a description.
GradCheckResult gradient_check(std::uint64_t seed, int batch = 4,
                               matcher::EvidencePooling pooling = matcher::EvidencePooling::Max,
                               bool grouped = false, double h = 1e-5);

}  // namespace scenmine::testing
