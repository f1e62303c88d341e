#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace scenmine::dsl {

struct SourcePos {
  int line = 1;
  int column = 1;
};

struct Call;
using CallPtr = std::shared_ptr<const Call>;

// A literal argument value.
using Literal = std::variant<std::string, double>;

struct Arg {
  std::string keyword;  // empty for positional arguments
  std::variant<CallPtr, std::string, double> value;
  SourcePos pos;

  bool is_query() const { return std::holds_alternative<CallPtr>(value); }
  bool is_keyword() const { return !keyword.empty(); }
};

struct Call {
  std::string name;
  std::vector<Arg> args;
  SourcePos pos;
};

// Parsed, statically checked program. `root` is the expression wrapped by
// the single `output(...)` call.
struct ScenarioProgram {
  std::string source;
  CallPtr root;
};

// Equality of tree shape, names and values; source positions are ignored.
bool structurally_equal(const Call& a, const Call& b);
bool structurally_equal(const ScenarioProgram& a, const ScenarioProgram& b);

// Canonical source text; parse(to_source(p)) is structurally equal to p.
std::string to_source(const Call& call);
std::string to_source(const ScenarioProgram& program);

// Number of call nodes below (and including) `call`.
std::size_t node_count(const Call& call);

// Shortest round-trip decimal rendering of a number literal.
std::string format_number(double v);
std::string quote_string(const std::string& s);

}  // namespace scenmine::dsl
