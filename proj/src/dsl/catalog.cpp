#include "scenmine/dsl/catalog.hpp"

#include <cmath>
#include <sstream>

#include "scenmine/errors.hpp"

namespace scenmine::dsl {

using traj::Track;
using traj::TrackState;

std::string_view to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::Query: return "query";
    case ParamKind::String: return "string";
    case ParamKind::Number: return "number";
  }
  return "?";
}

std::string_view to_string(PredicateClass cls) {
  switch (cls) {
    case PredicateClass::State: return "state";
    case PredicateClass::Relational: return "relational";
    case PredicateClass::Logic: return "logic";
  }
  return "?";
}

double ArgValues::number(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end() || !std::holds_alternative<double>(it->second)) {
    throw InvalidInput("missing number argument '" + name + "'");
  }
  return std::get<double>(it->second);
}

const std::string& ArgValues::string(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end() || !std::holds_alternative<std::string>(it->second)) {
    throw InvalidInput("missing string argument '" + name + "'");
  }
  return std::get<std::string>(it->second);
}

void Catalog::add(PredicateSpec spec) {
  if (find(spec.name) != nullptr) {
    throw InvalidInput("predicate '" + spec.name + "' already registered");
  }
  if (spec.cls == PredicateClass::State && !spec.state) {
    throw InvalidInput("state predicate '" + spec.name + "' has no implementation");
  }
  if (spec.cls == PredicateClass::Relational && !spec.relation) {
    throw InvalidInput("relational predicate '" + spec.name + "' has no implementation");
  }
  for (const auto& kw : spec.keywords) {
    if (!kw.default_value) {
      throw InvalidInput("keyword '" + kw.name + "' of '" + spec.name + "' needs a default");
    }
  }
  predicates_.push_back(std::move(spec));
}

const PredicateSpec* Catalog::find(std::string_view name) const {
  for (const auto& p : predicates_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

namespace {

nlohmann::json literal_json(const Literal& v) {
  if (std::holds_alternative<double>(v)) return std::get<double>(v);
  return std::get<std::string>(v);
}

nlohmann::json param_json(const ParamSpec& p) {
  nlohmann::json j{{"name", p.name}, {"kind", std::string(to_string(p.kind))}, {"doc", p.doc}};
  if (p.default_value) j["default"] = literal_json(*p.default_value);
  if (!p.choices.empty()) j["choices"] = p.choices;
  return j;
}

}  // namespace

nlohmann::json Catalog::to_json() const {
  nlohmann::json preds = nlohmann::json::array();
  for (const auto& p : predicates_) {
    nlohmann::json pos = nlohmann::json::array();
    for (const auto& a : p.positional) pos.push_back(param_json(a));
    nlohmann::json kws = nlohmann::json::array();
    for (const auto& a : p.keywords) kws.push_back(param_json(a));
    nlohmann::json j{{"name", p.name},
                     {"class", std::string(to_string(p.cls))},
                     {"doc", p.doc},
                     {"positional", pos},
                     {"keywords", kws}};
    if (p.variadic) j["min_args"] = p.min_args;
    preds.push_back(std::move(j));
  }
  return nlohmann::json{{"version", 1}, {"predicates", preds}};
}

std::string Catalog::render_doc() const {
  std::ostringstream out;
  for (const auto& p : predicates_) {
    out << p.name << "(";
    bool first = true;
    if (p.variadic) {
      out << "query, query, ...";
      first = false;
    }
    for (const auto& a : p.positional) {
      if (!first) out << ", ";
      out << a.name << ": " << to_string(a.kind);
      first = false;
    }
    for (const auto& a : p.keywords) {
      if (!first) out << ", ";
      out << a.name << "=";
      if (std::holds_alternative<double>(*a.default_value)) {
        out << format_number(std::get<double>(*a.default_value));
      } else {
        out << quote_string(std::get<std::string>(*a.default_value));
      }
      first = false;
    }
    out << ")  [" << to_string(p.cls) << "] " << p.doc << "\n";
  }
  return out.str();
}

ArgValues resolve_args(const PredicateSpec& spec, const Call& call) {
  ArgValues values;
  for (const auto& kw : spec.keywords) values.set(kw.name, *kw.default_value);
  std::size_t pos_index = 0;
  for (const auto& arg : call.args) {
    if (arg.is_keyword()) {
      if (std::holds_alternative<double>(arg.value)) {
        values.set(arg.keyword, std::get<double>(arg.value));
      } else if (std::holds_alternative<std::string>(arg.value)) {
        values.set(arg.keyword, std::get<std::string>(arg.value));
      }
      continue;
    }
    if (!spec.variadic && pos_index < spec.positional.size() && !arg.is_query()) {
      const std::string& name = spec.positional[pos_index].name;
      if (std::holds_alternative<double>(arg.value)) {
        values.set(name, std::get<double>(arg.value));
      } else {
        values.set(name, std::get<std::string>(arg.value));
      }
    }
    ++pos_index;
  }
  return values;
}

std::pair<double, double> to_local_frame(const TrackState& ref, const TrackState& other) {
  const double yaw = traj::yaw_from_quaternion(ref.orientation());
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const double dx = other.tx - ref.tx;
  const double dy = other.ty - ref.ty;
  return {c * dx + s * dy, -s * dx + c * dy};
}

namespace {

ParamSpec number_kw(std::string name, double def, std::string doc) {
  return ParamSpec{std::move(name), ParamKind::Number, Literal{def}, {}, std::move(doc)};
}

ParamSpec query_param(std::string name, std::string doc) {
  return ParamSpec{std::move(name), ParamKind::Query, std::nullopt, {}, std::move(doc)};
}

// Index i lies in a run of at least `min_frames` consecutive indices all
// satisfying `pred`.
template <typename Pred>
bool in_sustained_run(std::size_t i, std::size_t n, std::size_t min_frames, Pred pred) {
  if (!pred(i)) return false;
  std::size_t run = 1;
  for (std::size_t j = i; j > 0 && pred(j - 1); --j) ++run;
  for (std::size_t j = i + 1; j < n && pred(j); ++j) ++run;
  return run >= min_frames;
}

PredicateSpec relational(std::string name, std::string doc, std::vector<ParamSpec> keywords,
                         RelationFn fn) {
  PredicateSpec p;
  p.name = std::move(name);
  p.cls = PredicateClass::Relational;
  p.doc = std::move(doc);
  p.positional = {query_param("reference", "objects being described"),
                  query_param("related", "objects the relation is tested against")};
  p.keywords = std::move(keywords);
  p.relation = std::move(fn);
  return p;
}

}  // namespace

Catalog make_default_catalog() {
  Catalog c;
  c.set_categories(traj::default_categories());

  {
    PredicateSpec p;
    p.name = "category";
    p.doc = "object class equals the given category (VEHICLE covers motor-vehicle classes, ANY matches all)";
    p.positional = {ParamSpec{"name", ParamKind::String, std::nullopt, {}, "category name"}};
    p.state = [](const StateContext& ctx) {
      return traj::category_matches(ctx.args.string("name"), ctx.track.category);
    };
    c.add(std::move(p));
  }
  {
    PredicateSpec p;
    p.name = "stationary";
    p.doc = "planar speed <= max_speed (m/s)";
    p.keywords = {number_kw("max_speed", 0.5, "speed ceiling in m/s")};
    p.needs_derivatives = true;
    p.state = [](const StateContext& ctx) {
      return ctx.kinematics.speed(ctx.index) <= ctx.args.number("max_speed");
    };
    c.add(std::move(p));
  }
  {
    PredicateSpec p;
    p.name = "moving";
    p.doc = "planar speed > min_speed (m/s)";
    p.keywords = {number_kw("min_speed", 0.5, "speed floor in m/s")};
    p.needs_derivatives = true;
    p.state = [](const StateContext& ctx) {
      return ctx.kinematics.speed(ctx.index) > ctx.args.number("min_speed");
    };
    c.add(std::move(p));
  }
  {
    PredicateSpec p;
    p.name = "turning";
    p.doc = "yaw rate of the given sign with magnitude >= min_yaw_rate (rad/s), sustained over >= min_frames consecutive frames; left is counter-clockwise";
    p.positional = {ParamSpec{"direction", ParamKind::String, std::nullopt, {"left", "right"},
                              "turn direction"}};
    p.keywords = {number_kw("min_yaw_rate", 0.15, "yaw-rate threshold in rad/s"),
                  number_kw("min_frames", 3.0, "minimum run length in frames")};
    p.needs_derivatives = true;
    p.state = [](const StateContext& ctx) {
      const double sign = ctx.args.string("direction") == "left" ? 1.0 : -1.0;
      const double thr = ctx.args.number("min_yaw_rate");
      const auto min_frames = static_cast<std::size_t>(std::max(1.0, ctx.args.number("min_frames")));
      return in_sustained_run(ctx.index, ctx.track.size(), min_frames, [&](std::size_t j) {
        return sign * ctx.kinematics.yaw_rate(j) >= thr;
      });
    };
    c.add(std::move(p));
  }
  {
    PredicateSpec p;
    p.name = "accelerating";
    p.doc = "rate of change of speed >= min_accel (m/s^2)";
    p.keywords = {number_kw("min_accel", 1.0, "acceleration threshold in m/s^2")};
    p.needs_derivatives = true;
    p.state = [](const StateContext& ctx) {
      return ctx.kinematics.acceleration(ctx.index) >= ctx.args.number("min_accel");
    };
    c.add(std::move(p));
  }
  {
    PredicateSpec p;
    p.name = "braking";
    p.doc = "rate of change of speed <= -min_decel (m/s^2)";
    p.keywords = {number_kw("min_decel", 1.0, "deceleration threshold in m/s^2")};
    p.needs_derivatives = true;
    p.state = [](const StateContext& ctx) {
      return ctx.kinematics.acceleration(ctx.index) <= -ctx.args.number("min_decel");
    };
    c.add(std::move(p));
  }
  {
    PredicateSpec p;
    p.name = "speed_between";
    p.doc = "min_speed <= planar speed <= max_speed (m/s)";
    p.keywords = {number_kw("min_speed", 0.0, "lower bound in m/s"),
                  number_kw("max_speed", 1e9, "upper bound in m/s")};
    p.needs_derivatives = true;
    p.state = [](const StateContext& ctx) {
      const double v = ctx.kinematics.speed(ctx.index);
      return v >= ctx.args.number("min_speed") && v <= ctx.args.number("max_speed");
    };
    c.add(std::move(p));
  }
  {
    PredicateSpec p;
    p.name = "heading_toward";
    p.doc = "moving faster than min_speed with velocity pointing at the ego vehicle within max_angle (rad)";
    p.keywords = {number_kw("max_angle", 0.35, "angular tolerance in rad"),
                  number_kw("min_speed", 0.5, "speed floor in m/s")};
    p.needs_derivatives = true;
    p.state = [](const StateContext& ctx) {
      const auto v = ctx.kinematics.velocity(ctx.index);
      const auto& s = ctx.track.states[ctx.index];
      const double speed = std::hypot(v[0], v[1]);
      const double dist = std::hypot(s.tx, s.ty);
      if (speed <= ctx.args.number("min_speed") || dist == 0.0) return false;
      const double cos_angle = (-s.tx * v[0] - s.ty * v[1]) / (speed * dist);
      return cos_angle >= std::cos(ctx.args.number("max_angle"));
    };
    c.add(std::move(p));
  }

  const auto within = [](double def) {
    return number_kw("within", def, "range along the relation axis in m");
  };
  c.add(relational(
      "has_in_front", "reference has a related object ahead: local x in (0, within], |local y| <= lateral_tolerance",
      {within(10.0), number_kw("lateral_tolerance", 2.0, "lateral half-width in m")},
      [](const RelationContext& r) {
        auto [x, y] = to_local_frame(r.ref.states[r.ref_index], r.other.states[r.other_index]);
        return x > 0.0 && x <= r.args.number("within") &&
               std::abs(y) <= r.args.number("lateral_tolerance");
      }));
  c.add(relational(
      "has_behind", "reference has a related object behind: local x in [-within, 0), |local y| <= lateral_tolerance",
      {within(10.0), number_kw("lateral_tolerance", 2.0, "lateral half-width in m")},
      [](const RelationContext& r) {
        auto [x, y] = to_local_frame(r.ref.states[r.ref_index], r.other.states[r.other_index]);
        return x < 0.0 && x >= -r.args.number("within") &&
               std::abs(y) <= r.args.number("lateral_tolerance");
      }));
  c.add(relational(
      "has_to_left", "related object on the reference's left: local y in (0, within], |local x| <= longitudinal_tolerance",
      {within(10.0), number_kw("longitudinal_tolerance", 2.0, "longitudinal half-length in m")},
      [](const RelationContext& r) {
        auto [x, y] = to_local_frame(r.ref.states[r.ref_index], r.other.states[r.other_index]);
        return y > 0.0 && y <= r.args.number("within") &&
               std::abs(x) <= r.args.number("longitudinal_tolerance");
      }));
  c.add(relational(
      "has_to_right", "related object on the reference's right: local y in [-within, 0), |local x| <= longitudinal_tolerance",
      {within(10.0), number_kw("longitudinal_tolerance", 2.0, "longitudinal half-length in m")},
      [](const RelationContext& r) {
        auto [x, y] = to_local_frame(r.ref.states[r.ref_index], r.other.states[r.other_index]);
        return y < 0.0 && y >= -r.args.number("within") &&
               std::abs(x) <= r.args.number("longitudinal_tolerance");
      }));
  c.add(relational(
      "near", "planar center distance <= distance (m)",
      {number_kw("distance", 5.0, "distance threshold in m")},
      [](const RelationContext& r) {
        const auto& a = r.ref.states[r.ref_index];
        const auto& b = r.other.states[r.other_index];
        return std::hypot(a.tx - b.tx, a.ty - b.ty) <= r.args.number("distance");
      }));
  c.add(relational(
      "being_crossed_by", "related object crosses the reference's forward centerline between its previous and current frame, within `within` m ahead",
      {within(10.0)},
      [](const RelationContext& r) {
        if (r.other_index == 0) return false;
        const auto& ref = r.ref.states[r.ref_index];
        auto [x_prev, y_prev] = to_local_frame(ref, r.other.states[r.other_index - 1]);
        auto [x_now, y_now] = to_local_frame(ref, r.other.states[r.other_index]);
        (void)x_prev;
        const bool crossed = (y_prev < 0.0 && y_now >= 0.0) || (y_prev > 0.0 && y_now <= 0.0);
        return crossed && x_now >= 0.0 && x_now <= r.args.number("within");
      }));

  {
    PredicateSpec p;
    p.name = "and";
    p.cls = PredicateClass::Logic;
    p.doc = "intersection of all argument queries";
    p.variadic = true;
    p.min_args = 2;
    c.add(std::move(p));
  }
  {
    PredicateSpec p;
    p.name = "or";
    p.cls = PredicateClass::Logic;
    p.doc = "union of all argument queries";
    p.variadic = true;
    p.min_args = 2;
    c.add(std::move(p));
  }
  {
    PredicateSpec p;
    p.name = "not";
    p.cls = PredicateClass::Logic;
    p.doc = "complement of the argument query within each track's timestamps";
    p.positional = {query_param("query", "query to negate")};
    c.add(std::move(p));
  }
  return c;
}

const Catalog& default_catalog() {
  static const Catalog kCatalog = make_default_catalog();
  return kCatalog;
}

}  // namespace scenmine::dsl
