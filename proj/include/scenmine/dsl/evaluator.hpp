#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "scenmine/dsl/ast.hpp"
#include "scenmine/dsl/catalog.hpp"
#include "scenmine/dsl/mask.hpp"
#include "scenmine/traj/track.hpp"

namespace scenmine::dsl {

struct EvalOptions {
  // Worker threads used per expression node; results do not depend on it.
  unsigned threads = 1;
};

struct EvalStats {
  // (track, timestamp) cells computed, summed over expression nodes.
  std::size_t cells_evaluated = 0;
  // Pairwise geometry tests performed by relational predicates.
  std::size_t relation_checks = 0;
};

// Evaluates a checked program over one log. Cells outside log.region (when
// set) are never evaluated and never reported; states outside it are still
// used as kinematic context.
ScenarioMask evaluate(const ScenarioProgram& program, const traj::LogManifest& log,
                      const Catalog& catalog = default_catalog(),
                      const EvalOptions& options = {}, EvalStats* stats = nullptr);

// Pointwise semantics of an arbitrary expression at one (track, index) cell.
bool evaluate_at(const Call& expr, const traj::Track& track, std::size_t index,
                 const traj::LogManifest& log, const Catalog& catalog = default_catalog());

// Pointwise semantics of one predicate applied to `args`. Throws InvalidInput
// for an unregistered name (normally caught by parse).
bool evaluate_predicate(std::string_view name, const std::vector<Arg>& args,
                        const traj::Track& track, std::size_t index,
                        const traj::LogManifest& log,
                        const Catalog& catalog = default_catalog());

}  // namespace scenmine::dsl
