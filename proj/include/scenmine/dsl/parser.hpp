#pragma once

#include <string>
#include <string_view>

#include "scenmine/dsl/ast.hpp"
#include "scenmine/dsl/catalog.hpp"
#include "scenmine/errors.hpp"

namespace scenmine::dsl {

enum class ParseErrorKind { Syntax, UnknownPredicate, Arity, TypeMismatch, BadValue };

std::string_view to_string(ParseErrorKind kind);

class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, SourcePos pos, const std::string& detail);

  ParseErrorKind kind() const { return kind_; }
  SourcePos pos() const { return pos_; }

 private:
  ParseErrorKind kind_;
  SourcePos pos_;
};

// Parses and statically checks a program:
//   program := "output" "(" expr ")"
//   expr    := call
//   call    := IDENT "(" [arg {"," arg}] ")"
//   arg     := expr | STRING | NUMBER | IDENT "=" (STRING | NUMBER)
// `#` starts a comment running to end of line.
ScenarioProgram parse(std::string_view source, const Catalog& catalog = default_catalog());

}  // namespace scenmine::dsl
