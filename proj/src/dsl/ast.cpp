#include "scenmine/dsl/ast.hpp"

#include <charconv>

namespace scenmine::dsl {

bool structurally_equal(const Call& a, const Call& b) {
  if (a.name != b.name || a.args.size() != b.args.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    const Arg& x = a.args[i];
    const Arg& y = b.args[i];
    if (x.keyword != y.keyword || x.value.index() != y.value.index()) return false;
    if (x.is_query()) {
      if (!structurally_equal(*std::get<CallPtr>(x.value), *std::get<CallPtr>(y.value))) {
        return false;
      }
    } else if (std::holds_alternative<std::string>(x.value)) {
      if (std::get<std::string>(x.value) != std::get<std::string>(y.value)) return false;
    } else if (std::get<double>(x.value) != std::get<double>(y.value)) {
      return false;
    }
  }
  return true;
}

bool structurally_equal(const ScenarioProgram& a, const ScenarioProgram& b) {
  if (!a.root || !b.root) return a.root == b.root;
  return structurally_equal(*a.root, *b.root);
}

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string quote_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

std::string to_source(const Call& call) {
  std::string out = call.name + "(";
  for (std::size_t i = 0; i < call.args.size(); ++i) {
    if (i > 0) out += ", ";
    const Arg& arg = call.args[i];
    if (arg.is_keyword()) out += arg.keyword + "=";
    if (arg.is_query()) {
      out += to_source(*std::get<CallPtr>(arg.value));
    } else if (std::holds_alternative<std::string>(arg.value)) {
      out += quote_string(std::get<std::string>(arg.value));
    } else {
      out += format_number(std::get<double>(arg.value));
    }
  }
  return out + ")";
}

std::string to_source(const ScenarioProgram& program) {
  return "output(" + to_source(*program.root) + ")";
}

std::size_t node_count(const Call& call) {
  std::size_t n = 1;
  for (const auto& arg : call.args) {
    if (arg.is_query()) n += node_count(*std::get<CallPtr>(arg.value));
  }
  return n;
}

}  // namespace scenmine::dsl
