#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scenmine/dsl/ast.hpp"
#include "scenmine/traj/kinematics.hpp"
#include "scenmine/traj/track.hpp"

namespace scenmine::dsl {

enum class ParamKind { Query, String, Number };
enum class PredicateClass { State, Relational, Logic };

std::string_view to_string(ParamKind kind);
std::string_view to_string(PredicateClass cls);

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::Number;
  std::optional<Literal> default_value;  // keyword parameters only
  std::vector<std::string> choices;      // allowed string values, if closed
  std::string doc;
};

// Resolved literal arguments of one call: positional literals are bound to
// their parameter names, keyword defaults filled in.
class ArgValues {
 public:
  void set(std::string name, Literal value) { values_[std::move(name)] = std::move(value); }
  double number(const std::string& name) const;
  const std::string& string(const std::string& name) const;
  const std::map<std::string, Literal>& values() const { return values_; }

 private:
  std::map<std::string, Literal> values_;
};

// Access to per-index kinematics; the evaluator backs it with a precomputed
// series, the pointwise path computes each value on demand.
class KinematicView {
 public:
  virtual ~KinematicView() = default;
  virtual traj::Vec3 velocity(std::size_t i) const = 0;
  virtual double speed(std::size_t i) const = 0;
  virtual double yaw_rate(std::size_t i) const = 0;
  virtual double acceleration(std::size_t i) const = 0;
};

class SeriesKinematics final : public KinematicView {
 public:
  explicit SeriesKinematics(const traj::KinematicSeries& k) : k_(k) {}
  traj::Vec3 velocity(std::size_t i) const override { return k_.velocity[i]; }
  double speed(std::size_t i) const override { return k_.speed[i]; }
  double yaw_rate(std::size_t i) const override { return k_.yaw_rate[i]; }
  double acceleration(std::size_t i) const override { return k_.acceleration[i]; }

 private:
  const traj::KinematicSeries& k_;
};

class DirectKinematics final : public KinematicView {
 public:
  explicit DirectKinematics(const traj::Track& t) : t_(t) {}
  traj::Vec3 velocity(std::size_t i) const override { return traj::estimate_velocity(t_, i); }
  double speed(std::size_t i) const override { return traj::estimate_speed(t_, i); }
  double yaw_rate(std::size_t i) const override { return traj::estimate_yaw_rate(t_, i); }
  double acceleration(std::size_t i) const override {
    return traj::estimate_acceleration(t_, i);
  }

 private:
  const traj::Track& t_;
};

struct StateContext {
  const traj::Track& track;
  std::size_t index;
  const KinematicView& kinematics;
  const ArgValues& args;
};

// `other` at `other_index` shares the timestamp of `ref` at `ref_index`.
struct RelationContext {
  const traj::Track& ref;
  std::size_t ref_index;
  const traj::Track& other;
  std::size_t other_index;
  const ArgValues& args;
};

using StateFn = std::function<bool(const StateContext&)>;
using RelationFn = std::function<bool(const RelationContext&)>;

struct PredicateSpec {
  std::string name;
  PredicateClass cls = PredicateClass::State;
  std::string doc;
  std::vector<ParamSpec> positional;
  // Logic combinators take a variable number of query arguments.
  std::size_t min_args = 0;
  bool variadic = false;
  std::vector<ParamSpec> keywords;
  // Derivative-based predicates are false on tracks with < 3 states.
  bool needs_derivatives = false;
  StateFn state;
  RelationFn relation;
};

class Catalog {
 public:
  // Throws InvalidInput on duplicate names or malformed specs.
  void add(PredicateSpec spec);
  const PredicateSpec* find(std::string_view name) const;
  const std::vector<PredicateSpec>& predicates() const { return predicates_; }

  const std::vector<std::string>& categories() const { return categories_; }
  void set_categories(std::vector<std::string> categories) {
    categories_ = std::move(categories);
  }

  // Machine-readable description of every predicate, consumed by prompt
  // assembly and written to data/catalog.json.
  nlohmann::json to_json() const;
  // Plain-text rendering of to_json() for prompts.
  std::string render_doc() const;

 private:
  std::vector<PredicateSpec> predicates_;
  std::vector<std::string> categories_;
};

// Catalog v1: 8 state, 6 relational and 3 logic predicates.
Catalog make_default_catalog();
const Catalog& default_catalog();

// Binds literal arguments of `call` against `spec`; assumes the call passed
// static checking.
ArgValues resolve_args(const PredicateSpec& spec, const Call& call);

// Position of `other` expressed in the local frame of `ref` (origin at its
// center, +x along its yaw).
std::pair<double, double> to_local_frame(const traj::TrackState& ref,
                                         const traj::TrackState& other);

}  // namespace scenmine::dsl
