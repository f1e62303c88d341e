#include "scenmine/dsl/evaluator.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <thread>

#include "scenmine/errors.hpp"

namespace scenmine::dsl {

using traj::LogManifest;
using traj::Track;

namespace {

// cells[track][state] != 0 where the expression holds.
using CellMask = std::vector<std::vector<char>>;

const PredicateSpec& lookup(const Catalog& catalog, std::string_view name) {
  const PredicateSpec* spec = catalog.find(name);
  if (spec == nullptr) {
    throw InvalidInput("unknown predicate '" + std::string(name) + "'");
  }
  return *spec;
}

std::vector<const Call*> query_args(const Call& call) {
  std::vector<const Call*> out;
  for (const auto& a : call.args) {
    if (a.is_query()) out.push_back(std::get<CallPtr>(a.value).get());
  }
  return out;
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

class BatchEvaluator {
 public:
  BatchEvaluator(const LogManifest& log, const Catalog& catalog, const EvalOptions& options)
      : log_(log), catalog_(catalog), options_(options) {
    const std::size_t n = log.tracks.size();
    active_.resize(n);
    kinematics_.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      const Track& track = log.tracks[t];
      active_[t].resize(track.size());
      for (std::size_t i = 0; i < track.size(); ++i) {
        active_[t][i] = log.in_region(track.states[i].timestamp_ns) ? 1 : 0;
        if (active_[t][i]) {
          by_timestamp_[track.states[i].timestamp_ns].emplace_back(t, i);
          ++active_cells_;
        }
      }
      if (track.size() >= 3) kinematics_[t] = traj::compute_kinematics(track);
    }
  }

  CellMask eval(const Call& call) {
    const PredicateSpec& spec = lookup(catalog_, call.name);
    stats_.cells_evaluated += active_cells_;
    switch (spec.cls) {
      case PredicateClass::Logic: return eval_logic(call);
      case PredicateClass::State: return eval_state(spec, call);
      case PredicateClass::Relational: return eval_relational(spec, call);
    }
    return empty_mask();
  }

  const EvalStats& stats() const { return stats_; }

 private:
  CellMask empty_mask() const {
    CellMask m(log_.tracks.size());
    for (std::size_t t = 0; t < m.size(); ++t) m[t].assign(log_.tracks[t].size(), 0);
    return m;
  }

  CellMask eval_logic(const Call& call) {
    const auto subs = query_args(call);
    std::vector<CellMask> parts;
    parts.reserve(subs.size());
    for (const Call* s : subs) parts.push_back(eval(*s));
    CellMask out = empty_mask();
    for (std::size_t t = 0; t < out.size(); ++t) {
      for (std::size_t i = 0; i < out[t].size(); ++i) {
        if (!active_[t][i]) continue;
        if (call.name == "not") {
          out[t][i] = parts[0][t][i] ? 0 : 1;
        } else if (call.name == "and") {
          out[t][i] = std::all_of(parts.begin(), parts.end(),
                                  [&](const CellMask& p) { return p[t][i] != 0; });
        } else {
          out[t][i] = std::any_of(parts.begin(), parts.end(),
                                  [&](const CellMask& p) { return p[t][i] != 0; });
        }
      }
    }
    return out;
  }

  CellMask eval_state(const PredicateSpec& spec, const Call& call) {
    const ArgValues args = resolve_args(spec, call);
    CellMask out = empty_mask();
    parallel_for(log_.tracks.size(), options_.threads, [&](std::size_t t) {
      const Track& track = log_.tracks[t];
      if (spec.needs_derivatives && track.size() < 3) return;
      std::optional<SeriesKinematics> series;
      std::optional<DirectKinematics> direct;
      const KinematicView* view = nullptr;
      if (kinematics_[t]) {
        view = &series.emplace(*kinematics_[t]);
      } else {
        view = &direct.emplace(track);
      }
      for (std::size_t i = 0; i < track.size(); ++i) {
        if (!active_[t][i]) continue;
        out[t][i] = spec.state(StateContext{track, i, *view, args}) ? 1 : 0;
      }
    });
    return out;
  }

  CellMask eval_relational(const PredicateSpec& spec, const Call& call) {
    const auto subs = query_args(call);
    const CellMask ref = eval(*subs[0]);
    const CellMask rel = eval(*subs[1]);
    const ArgValues args = resolve_args(spec, call);
    CellMask out = empty_mask();
    std::vector<std::size_t> checks(log_.tracks.size(), 0);
    parallel_for(log_.tracks.size(), options_.threads, [&](std::size_t a) {
      const Track& track = log_.tracks[a];
      for (std::size_t i = 0; i < track.size(); ++i) {
        if (!ref[a][i]) continue;
        const auto& peers = by_timestamp_.at(track.states[i].timestamp_ns);
        for (const auto& [b, j] : peers) {
          if (b == a || !rel[b][j]) continue;
          ++checks[a];
          if (spec.relation(RelationContext{track, i, log_.tracks[b], j, args})) {
            out[a][i] = 1;
            break;
          }
        }
      }
    });
    for (std::size_t c : checks) stats_.relation_checks += c;
    return out;
  }

  const LogManifest& log_;
  const Catalog& catalog_;
  EvalOptions options_;
  CellMask active_;
  std::size_t active_cells_ = 0;
  std::vector<std::optional<traj::KinematicSeries>> kinematics_;
  std::map<std::int64_t, std::vector<std::pair<std::size_t, std::size_t>>> by_timestamp_;
  EvalStats stats_;
};

}  // namespace

ScenarioMask evaluate(const ScenarioProgram& program, const LogManifest& log,
                      const Catalog& catalog, const EvalOptions& options, EvalStats* stats) {
  BatchEvaluator evaluator(log, catalog, options);
  const CellMask root = evaluator.eval(*program.root);
  ScenarioMask mask;
  mask.log_id = log.log_id;
  for (std::size_t t = 0; t < root.size(); ++t) {
    for (std::size_t i = 0; i < root[t].size(); ++i) {
      if (root[t][i]) {
        mask.entries.insert({log.tracks[t].track_id, log.tracks[t].states[i].timestamp_ns});
      }
    }
  }
  if (stats != nullptr) *stats = evaluator.stats();
  return mask;
}

bool evaluate_at(const Call& expr, const Track& track, std::size_t index, const LogManifest& log,
                 const Catalog& catalog) {
  return evaluate_predicate(expr.name, expr.args, track, index, log, catalog);
}

bool evaluate_predicate(std::string_view name, const std::vector<Arg>& args, const Track& track,
                        std::size_t index, const LogManifest& log, const Catalog& catalog) {
  if (index >= track.size()) throw InvalidInput("state index out of range");
  if (!log.in_region(track.states[index].timestamp_ns)) return false;
  const PredicateSpec& spec = lookup(catalog, name);
  Call call;
  call.name = std::string(name);
  call.args = args;
  const auto subs = query_args(call);
  switch (spec.cls) {
    case PredicateClass::Logic: {
      if (call.name == "not") return !evaluate_at(*subs.at(0), track, index, log, catalog);
      if (call.name == "and") {
        return std::all_of(subs.begin(), subs.end(), [&](const Call* s) {
          return evaluate_at(*s, track, index, log, catalog);
        });
      }
      return std::any_of(subs.begin(), subs.end(), [&](const Call* s) {
        return evaluate_at(*s, track, index, log, catalog);
      });
    }
    case PredicateClass::State: {
      if (spec.needs_derivatives && track.size() < 3) return false;
      const ArgValues values = resolve_args(spec, call);
      DirectKinematics kin(track);
      return spec.state(StateContext{track, index, kin, values});
    }
    case PredicateClass::Relational: {
      if (!evaluate_at(*subs.at(0), track, index, log, catalog)) return false;
      const ArgValues values = resolve_args(spec, call);
      const std::int64_t ts = track.states[index].timestamp_ns;
      for (const Track& other : log.tracks) {
        if (other.track_id == track.track_id) continue;
        const auto j = other.index_at(ts);
        if (!j || !evaluate_at(*subs.at(1), other, *j, log, catalog)) continue;
        if (spec.relation(RelationContext{track, index, other, *j, values})) return true;
      }
      return false;
    }
  }
  return false;
}

}  // namespace scenmine::dsl
