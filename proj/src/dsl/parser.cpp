#include "scenmine/dsl/parser.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace scenmine::dsl {

std::string_view to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::Syntax: return "syntax error";
    case ParseErrorKind::UnknownPredicate: return "unknown predicate";
    case ParseErrorKind::Arity: return "arity mismatch";
    case ParseErrorKind::TypeMismatch: return "type mismatch";
    case ParseErrorKind::BadValue: return "invalid value";
  }
  return "error";
}

namespace {

std::string format_error(ParseErrorKind kind, SourcePos pos, const std::string& detail) {
  std::ostringstream out;
  out << "line " << pos.line << ", column " << pos.column << ": " << to_string(kind) << ": "
      << detail;
  return out.str();
}

enum class Tok { Ident, String, Number, LParen, RParen, Comma, Equals, End };

std::string_view describe(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::String: return "string";
    case Tok::Number: return "number";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Comma: return "','";
    case Tok::Equals: return "'='";
    case Tok::End: return "end of input";
  }
  return "token";
}

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  SourcePos pos;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space();
    Token tok;
    tok.pos = {line_, col_};
    if (i_ >= src_.size()) return tok;
    const char c = src_[i_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = i_;
      while (i_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_')) {
        advance();
      }
      tok.kind = Tok::Ident;
      tok.text = std::string(src_.substr(start, i_ - start));
      return tok;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
      return lex_number(tok);
    }
    if (c == '"') return lex_string(tok);
    advance();
    switch (c) {
      case '(': tok.kind = Tok::LParen; return tok;
      case ')': tok.kind = Tok::RParen; return tok;
      case ',': tok.kind = Tok::Comma; return tok;
      case '=': tok.kind = Tok::Equals; return tok;
      default: break;
    }
    throw ParseError(ParseErrorKind::Syntax, tok.pos,
                     std::string("unexpected character '") + c + "'");
  }

 private:
  void advance() {
    if (src_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }

  void skip_space() {
    while (i_ < src_.size()) {
      const char c = src_[i_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '#') {
        while (i_ < src_.size() && src_[i_] != '\n') advance();
      } else {
        break;
      }
    }
  }

  Token lex_number(Token tok) {
    const std::size_t start = i_;
    if (src_[i_] == '-' || src_[i_] == '+') advance();
    while (i_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[i_])) || src_[i_] == '.' ||
            src_[i_] == 'e' || src_[i_] == 'E' ||
            ((src_[i_] == '-' || src_[i_] == '+') &&
             (src_[i_ - 1] == 'e' || src_[i_ - 1] == 'E')))) {
      advance();
    }
    std::string_view text = src_.substr(start, i_ - start);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw ParseError(ParseErrorKind::Syntax, tok.pos,
                       "malformed number '" + std::string(src_.substr(start, i_ - start)) + "'");
    }
    tok.kind = Tok::Number;
    tok.number = value;
    tok.text = std::string(src_.substr(start, i_ - start));
    return tok;
  }

  Token lex_string(Token tok) {
    advance();  // opening quote
    std::string value;
    while (true) {
      if (i_ >= src_.size()) {
        throw ParseError(ParseErrorKind::Syntax, tok.pos, "unterminated string literal");
      }
      const char c = src_[i_];
      if (c == '"') {
        advance();
        break;
      }
      if (c == '\\') {
        advance();
        if (i_ >= src_.size()) {
          throw ParseError(ParseErrorKind::Syntax, tok.pos, "unterminated string literal");
        }
        const char e = src_[i_];
        switch (e) {
          case 'n': value += '\n'; break;
          case 't': value += '\t'; break;
          case '"': value += '"'; break;
          case '\\': value += '\\'; break;
          default:
            throw ParseError(ParseErrorKind::Syntax, {line_, col_},
                             std::string("unknown escape '\\") + e + "'");
        }
        advance();
        continue;
      }
      value += c;
      advance();
    }
    tok.kind = Tok::String;
    tok.text = std::move(value);
    return tok;
  }

  std::string_view src_;
  std::size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  Parser(std::string_view src, const Catalog& catalog) : lex_(src), catalog_(catalog) {
    cur_ = lex_.next();
  }

  CallPtr parse_program() {
    const Token head = expect(Tok::Ident, "program must start with output(...)");
    if (head.text != "output") {
      throw ParseError(ParseErrorKind::Syntax, head.pos,
                       "program must start with output(...), found '" + head.text + "'");
    }
    expect(Tok::LParen, "expected '(' after output");
    if (cur_.kind != Tok::Ident) {
      throw ParseError(ParseErrorKind::Syntax, cur_.pos,
                       "output(...) takes one query expression, found " +
                           std::string(describe(cur_.kind)));
    }
    const Token name = take();
    CallPtr root = parse_call(name);
    if (cur_.kind == Tok::Comma) {
      throw ParseError(ParseErrorKind::Arity, cur_.pos, "output(...) takes exactly one argument");
    }
    expect(Tok::RParen, "expected ')' closing output(");
    if (cur_.kind != Tok::End) {
      throw ParseError(ParseErrorKind::Syntax, cur_.pos,
                       "unexpected " + std::string(describe(cur_.kind)) +
                           " after output(...); a program has exactly one output");
    }
    return root;
  }

 private:
  Token take() {
    Token t = std::move(cur_);
    cur_ = lex_.next();
    return t;
  }

  Token expect(Tok kind, const std::string& what) {
    if (cur_.kind != kind) {
      throw ParseError(ParseErrorKind::Syntax, cur_.pos,
                       what + ", found " + std::string(describe(cur_.kind)));
    }
    return take();
  }

  // `name` has been consumed.
  CallPtr parse_call(const Token& name) {
    auto call = std::make_shared<Call>();
    call->name = name.text;
    call->pos = name.pos;
    expect(Tok::LParen, "expected '(' after '" + name.text + "'");
    if (cur_.kind != Tok::RParen) {
      while (true) {
        call->args.push_back(parse_arg());
        if (cur_.kind == Tok::Comma) {
          take();
          continue;
        }
        break;
      }
    }
    expect(Tok::RParen, "expected ',' or ')' in call to '" + name.text + "'");
    check(*call);
    return call;
  }

  Arg parse_arg() {
    Arg arg;
    arg.pos = cur_.pos;
    switch (cur_.kind) {
      case Tok::String:
        arg.value = take().text;
        return arg;
      case Tok::Number:
        arg.value = take().number;
        return arg;
      case Tok::Ident: {
        Token id = take();
        if (cur_.kind == Tok::Equals) {
          take();
          arg.keyword = id.text;
          if (cur_.kind == Tok::String) {
            arg.value = take().text;
          } else if (cur_.kind == Tok::Number) {
            arg.value = take().number;
          } else {
            throw ParseError(ParseErrorKind::Syntax, cur_.pos,
                             "keyword argument '" + id.text +
                                 "' needs a string or number value, found " +
                                 std::string(describe(cur_.kind)));
          }
          return arg;
        }
        if (cur_.kind != Tok::LParen) {
          throw ParseError(ParseErrorKind::Syntax, cur_.pos,
                           "expected '(' or '=' after '" + id.text + "', found " +
                               std::string(describe(cur_.kind)));
        }
        arg.value = parse_call(id);
        return arg;
      }
      default:
        throw ParseError(ParseErrorKind::Syntax, cur_.pos,
                         "expected an argument, found " + std::string(describe(cur_.kind)));
    }
  }

  static std::string_view arg_kind(const Arg& a) {
    if (a.is_query()) return "query";
    if (std::holds_alternative<std::string>(a.value)) return "string";
    return "number";
  }

  static bool kind_matches(const Arg& a, ParamKind k) {
    switch (k) {
      case ParamKind::Query: return a.is_query();
      case ParamKind::String: return std::holds_alternative<std::string>(a.value);
      case ParamKind::Number: return std::holds_alternative<double>(a.value);
    }
    return false;
  }

  void check_value(const Call& call, const ParamSpec& p, const Arg& a) const {
    if (!p.choices.empty() && std::holds_alternative<std::string>(a.value)) {
      const auto& v = std::get<std::string>(a.value);
      if (std::find(p.choices.begin(), p.choices.end(), v) == p.choices.end()) {
        std::string allowed;
        for (const auto& c : p.choices) allowed += (allowed.empty() ? "" : ", ") + quote_string(c);
        throw ParseError(ParseErrorKind::BadValue, a.pos,
                         call.name + ": '" + p.name + "' must be one of " + allowed);
      }
    }
    if (std::holds_alternative<double>(a.value) && !std::isfinite(std::get<double>(a.value))) {
      throw ParseError(ParseErrorKind::BadValue, a.pos, call.name + ": non-finite number");
    }
  }

  void check(const Call& call) const {
    if (call.name == "output") {
      throw ParseError(ParseErrorKind::Syntax, call.pos,
                       "output(...) may only appear once, at the top level");
    }
    const PredicateSpec* spec = catalog_.find(call.name);
    if (spec == nullptr) {
      throw ParseError(ParseErrorKind::UnknownPredicate, call.pos,
                       "'" + call.name + "' is not a known predicate");
    }
    std::vector<const Arg*> positional;
    std::set<std::string> seen;
    for (const auto& a : call.args) {
      if (!a.is_keyword()) {
        if (!seen.empty()) {
          throw ParseError(ParseErrorKind::Syntax, a.pos,
                           call.name + ": positional argument after keyword argument");
        }
        positional.push_back(&a);
        continue;
      }
      auto it = std::find_if(spec->keywords.begin(), spec->keywords.end(),
                             [&](const ParamSpec& p) { return p.name == a.keyword; });
      if (it == spec->keywords.end()) {
        throw ParseError(ParseErrorKind::Arity, a.pos,
                         call.name + ": unknown keyword argument '" + a.keyword + "'");
      }
      if (!seen.insert(a.keyword).second) {
        throw ParseError(ParseErrorKind::Arity, a.pos,
                         call.name + ": keyword '" + a.keyword + "' given twice");
      }
      if (!kind_matches(a, it->kind)) {
        throw ParseError(ParseErrorKind::TypeMismatch, a.pos,
                         call.name + ": '" + a.keyword + "' expects " +
                             std::string(to_string(it->kind)) + ", got " +
                             std::string(arg_kind(a)));
      }
      check_value(call, *it, a);
    }
    if (spec->variadic) {
      if (positional.size() < spec->min_args) {
        throw ParseError(ParseErrorKind::Arity, call.pos,
                         call.name + " expects at least " + std::to_string(spec->min_args) +
                             " query arguments, got " + std::to_string(positional.size()));
      }
      for (const Arg* a : positional) {
        if (!a->is_query()) {
          throw ParseError(ParseErrorKind::TypeMismatch, a->pos,
                           call.name + ": expects query arguments, got " +
                               std::string(arg_kind(*a)));
        }
      }
      return;
    }
    if (positional.size() != spec->positional.size()) {
      throw ParseError(ParseErrorKind::Arity, call.pos,
                       call.name + " expects " + std::to_string(spec->positional.size()) +
                           " positional argument(s), got " + std::to_string(positional.size()));
    }
    for (std::size_t i = 0; i < positional.size(); ++i) {
      const ParamSpec& p = spec->positional[i];
      if (!kind_matches(*positional[i], p.kind)) {
        throw ParseError(ParseErrorKind::TypeMismatch, positional[i]->pos,
                         call.name + ": argument " + std::to_string(i + 1) + " ('" + p.name +
                             "') expects " + std::string(to_string(p.kind)) + ", got " +
                             std::string(arg_kind(*positional[i])));
      }
      check_value(call, p, *positional[i]);
    }
    if (call.name == "category") {
      const auto& name = std::get<std::string>(positional[0]->value);
      const auto& cats = catalog_.categories();
      if (name != "ANY" && std::find(cats.begin(), cats.end(), name) == cats.end()) {
        throw ParseError(ParseErrorKind::BadValue, positional[0]->pos,
                         "category: unknown category " + quote_string(name));
      }
    }
  }

  Lexer lex_;
  const Catalog& catalog_;
  Token cur_;
};

}  // namespace

ParseError::ParseError(ParseErrorKind kind, SourcePos pos, const std::string& detail)
    : Error(format_error(kind, pos, detail)), kind_(kind), pos_(pos) {}

ScenarioProgram parse(std::string_view source, const Catalog& catalog) {
  Parser parser(source, catalog);
  ScenarioProgram program;
  program.root = parser.parse_program();
  program.source = std::string(source);
  return program;
}

}  // namespace scenmine::dsl
