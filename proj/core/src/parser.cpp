#include "poto/parser.hpp"

#include <set>
#include <string_view>

namespace poto::py {
namespace {

const std::set<std::string, std::less<>> kKeywords = {
    "False",  "None",   "True",    "and",      "as",       "assert", "async", "await",
    "break",  "class",  "continue", "def",     "del",      "elif",   "else",  "except",
    "finally", "for",   "from",    "global",   "if",       "import", "in",    "is",
    "lambda", "nonlocal", "not",   "or",       "pass",     "raise",  "return", "try",
    "while",  "with",   "yield"};

const std::set<std::string, std::less<>> kAugOps = {"+=", "-=", "*=", "/=", "//=", "%=", "@=",
                                                    "&=", "|=", "^=", ">>=", "<<=", "**="};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  StmtList parse_file() {
    StmtList body;
    while (!at(TokenKind::EndMarker)) {
      if (accept_kind(TokenKind::Newline)) continue;
      parse_statement(body);
    }
    return body;
  }

 private:
  // ---- token helpers -------------------------------------------------------

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at(TokenKind k) const { return peek().kind == k; }
  bool at_op(std::string_view op, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == TokenKind::Op && t.text == op;
  }
  bool at_kw(std::string_view kw, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == TokenKind::Name && t.text == kw;
  }
  bool at_name() const { return at(TokenKind::Name) && !kKeywords.count(peek().text); }

  const Token& advance() { return toks_[pos_++]; }
  bool accept_kind(TokenKind k) {
    if (!at(k)) return false;
    ++pos_;
    return true;
  }
  bool accept_op(std::string_view op) {
    if (!at_op(op)) return false;
    ++pos_;
    return true;
  }
  bool accept_kw(std::string_view kw) {
    if (!at_kw(kw)) return false;
    ++pos_;
    return true;
  }

  [[noreturn]] void fail(const std::string& what) const {
    const Token& t = peek();
    std::string got = t.kind == TokenKind::Newline     ? "newline"
                      : t.kind == TokenKind::Indent    ? "indent"
                      : t.kind == TokenKind::Dedent    ? "dedent"
                      : t.kind == TokenKind::EndMarker ? "end of file"
                                                       : "'" + t.text + "'";
    throw ParseError(t.line, "expected " + what + ", got " + got);
  }
  void expect_op(std::string_view op) {
    if (!accept_op(op)) fail("'" + std::string(op) + "'");
  }
  void expect_kw(std::string_view kw) {
    if (!accept_kw(kw)) fail("'" + std::string(kw) + "'");
  }
  std::string expect_name() {
    if (!at_name()) fail("identifier");
    return advance().text;
  }
  void expect_newline() {
    if (accept_kind(TokenKind::Newline)) return;
    if (at(TokenKind::EndMarker)) return;
    fail("newline");
  }

  SourceRange range_from(const Token& first) const {
    const Token& last = toks_[pos_ == 0 ? 0 : pos_ - 1];
    return SourceRange{first.begin, last.end, first.line};
  }
  SourceRange range_from(const Expr& first) const {
    const Token& last = toks_[pos_ == 0 ? 0 : pos_ - 1];
    return SourceRange{first.range.begin, last.end, first.range.line};
  }

  ExprPtr make(ExprKind k, SourceRange r) { return std::make_unique<Expr>(k, r); }
  StmtPtr make_stmt(StmtKind k, const Token& first) {
    return std::make_unique<Stmt>(k, SourceRange{first.begin, first.end, first.line});
  }
  void close(Stmt& s) {
    const Token& last = toks_[pos_ == 0 ? 0 : pos_ - 1];
    s.range.end = std::max(s.range.end, last.end);
  }

  // ---- statements ------------------------------------------------------------

  void parse_statement(StmtList& out) {
    if (at_kw("if")) return out.push_back(parse_if());
    if (at_kw("while")) return out.push_back(parse_while());
    if (at_kw("for")) return out.push_back(parse_for(false, peek()));
    if (at_kw("try")) return out.push_back(parse_try());
    if (at_kw("with")) return out.push_back(parse_with(false, peek()));
    if (at_kw("def")) return out.push_back(parse_def({}, false, peek()));
    if (at_kw("class")) return out.push_back(parse_class({}, peek()));
    if (at_op("@")) return out.push_back(parse_decorated());
    if (at_kw("async")) {
      const Token& first = advance();
      if (at_kw("def")) return out.push_back(parse_def({}, true, first));
      if (at_kw("for")) return out.push_back(parse_for(true, first));
      if (at_kw("with")) return out.push_back(parse_with(true, first));
      fail("'def', 'for' or 'with' after 'async'");
    }
    if (at_kw("match") && !at(TokenKind::EndMarker)) {
      if (auto m = try_parse_match()) return out.push_back(std::move(m));
    }
    parse_simple_statements(out);
  }

  StmtList parse_block() {
    StmtList body;
    expect_op(":");
    if (accept_kind(TokenKind::Newline)) {
      if (!accept_kind(TokenKind::Indent)) fail("an indented block");
      while (!accept_kind(TokenKind::Dedent)) {
        if (at(TokenKind::EndMarker)) break;
        if (accept_kind(TokenKind::Newline)) continue;
        parse_statement(body);
      }
    } else {
      parse_simple_statements(body);
    }
    return body;
  }

  void parse_simple_statements(StmtList& out) {
    while (true) {
      out.push_back(parse_small_statement());
      if (!accept_op(";")) break;
      if (at(TokenKind::Newline) || at(TokenKind::EndMarker)) break;
    }
    expect_newline();
  }

  StmtPtr parse_small_statement() {
    const Token& first = peek();
    if (accept_kw("pass")) return make_stmt(StmtKind::Pass, first);
    if (accept_kw("break")) return make_stmt(StmtKind::Break, first);
    if (accept_kw("continue")) return make_stmt(StmtKind::Continue, first);
    if (accept_kw("return")) {
      auto s = make_stmt(StmtKind::Return, first);
      if (!at_statement_end()) s->value = parse_testlist_star_expr();
      close(*s);
      return s;
    }
    if (accept_kw("raise")) {
      auto s = make_stmt(StmtKind::Raise, first);
      if (!at_statement_end()) {
        s->value = parse_test();
        if (accept_kw("from")) s->extra = parse_test();
      }
      close(*s);
      return s;
    }
    if (accept_kw("global") || accept_kw("nonlocal")) {
      auto s = make_stmt(first.text == "global" ? StmtKind::Global : StmtKind::Nonlocal, first);
      do {
        s->names.push_back(expect_name());
      } while (accept_op(","));
      close(*s);
      return s;
    }
    if (accept_kw("del")) {
      auto s = make_stmt(StmtKind::Delete, first);
      s->targets.push_back(parse_exprlist());
      close(*s);
      return s;
    }
    if (accept_kw("assert")) {
      auto s = make_stmt(StmtKind::Assert, first);
      s->test = parse_test();
      if (accept_op(",")) s->extra = parse_test();
      close(*s);
      return s;
    }
    if (at_kw("import")) return parse_import();
    if (at_kw("from")) return parse_from_import();
    return parse_expr_statement();
  }

  bool at_statement_end() const {
    return at(TokenKind::Newline) || at(TokenKind::EndMarker) || at_op(";");
  }

  StmtPtr parse_expr_statement() {
    const Token& first = peek();
    ExprPtr lhs = at_kw("yield") ? parse_yield() : parse_testlist_star_expr();
    if (at_op(":")) {
      advance();
      auto s = make_stmt(StmtKind::AnnAssign, first);
      s->target = std::move(lhs);
      s->annotation = parse_test();
      if (accept_op("=")) s->value = at_kw("yield") ? parse_yield() : parse_testlist_star_expr();
      close(*s);
      return s;
    }
    if (peek().kind == TokenKind::Op && kAugOps.count(peek().text)) {
      std::string op = advance().text;
      auto s = make_stmt(StmtKind::AugAssign, first);
      s->target = std::move(lhs);
      s->op = op.substr(0, op.size() - 1);
      s->value = at_kw("yield") ? parse_yield() : parse_testlist_star_expr();
      close(*s);
      return s;
    }
    if (at_op("=")) {
      auto s = make_stmt(StmtKind::Assign, first);
      s->targets.push_back(std::move(lhs));
      ExprPtr rhs;
      while (accept_op("=")) {
        rhs = at_kw("yield") ? parse_yield() : parse_testlist_star_expr();
        if (at_op("=")) s->targets.push_back(std::move(rhs));
      }
      s->value = std::move(rhs);
      close(*s);
      return s;
    }
    auto s = make_stmt(StmtKind::ExprStmt, first);
    s->value = std::move(lhs);
    close(*s);
    return s;
  }

  std::string parse_dotted_name() {
    std::string name = expect_name();
    while (accept_op(".")) name += "." + expect_name();
    return name;
  }

  StmtPtr parse_import() {
    const Token& first = advance();
    auto s = make_stmt(StmtKind::Import, first);
    do {
      Alias a;
      a.line = peek().line;
      a.name = parse_dotted_name();
      if (accept_kw("as")) a.asname = expect_name();
      s->aliases.push_back(std::move(a));
    } while (accept_op(","));
    close(*s);
    return s;
  }

  StmtPtr parse_from_import() {
    const Token& first = advance();
    auto s = make_stmt(StmtKind::ImportFrom, first);
    while (at_op(".") || at_op("...")) s->level += static_cast<int>(advance().text.size());
    if (!at_kw("import")) s->module = parse_dotted_name();
    expect_kw("import");
    if (accept_op("*")) {
      s->aliases.push_back(Alias{"*", "", first.line});
      close(*s);
      return s;
    }
    bool parens = accept_op("(");
    do {
      if (parens && at_op(")")) break;
      Alias a;
      a.line = peek().line;
      a.name = expect_name();
      if (accept_kw("as")) a.asname = expect_name();
      s->aliases.push_back(std::move(a));
    } while (accept_op(","));
    if (parens) expect_op(")");
    close(*s);
    return s;
  }

  StmtPtr parse_if() {
    const Token& first = advance();
    auto s = make_stmt(StmtKind::If, first);
    s->test = parse_namedexpr_test();
    s->body = parse_block();
    if (at_kw("elif")) {
      s->orelse.push_back(parse_if());
    } else if (accept_kw("else")) {
      s->orelse = parse_block();
    }
    close(*s);
    return s;
  }

  StmtPtr parse_while() {
    const Token& first = advance();
    auto s = make_stmt(StmtKind::While, first);
    s->test = parse_namedexpr_test();
    s->body = parse_block();
    if (accept_kw("else")) s->orelse = parse_block();
    close(*s);
    return s;
  }

  StmtPtr parse_for(bool is_async, const Token& first) {
    expect_kw("for");
    auto s = make_stmt(StmtKind::For, first);
    s->is_async = is_async;
    s->target = parse_exprlist();
    expect_kw("in");
    s->iter = parse_testlist_star_expr();
    s->body = parse_block();
    if (accept_kw("else")) s->orelse = parse_block();
    close(*s);
    return s;
  }

  StmtPtr parse_try() {
    const Token& first = advance();
    auto s = make_stmt(StmtKind::Try, first);
    s->body = parse_block();
    while (at_kw("except")) {
      ExceptHandler h;
      h.line = advance().line;
      accept_op("*");
      if (!at_op(":")) {
        h.type = parse_test();
        if (accept_op(",")) {
          // legacy `except A, e` is not valid in the supported dialect
          fail("':'");
        }
        if (accept_kw("as")) h.name = expect_name();
      }
      h.body = parse_block();
      s->handlers.push_back(std::move(h));
    }
    if (accept_kw("else")) s->orelse = parse_block();
    if (accept_kw("finally")) s->finalbody = parse_block();
    if (s->handlers.empty() && s->finalbody.empty()) fail("'except' or 'finally'");
    close(*s);
    return s;
  }

  StmtPtr parse_with(bool is_async, const Token& first) {
    expect_kw("with");
    auto s = make_stmt(StmtKind::With, first);
    s->is_async = is_async;
    // Parenthesized item lists are ambiguous with a parenthesized context
    // expression; try the item-list reading first.
    if (at_op("(")) {
      std::size_t save = pos_;
      try {
        advance();
        std::vector<WithItem> items;
        do {
          if (at_op(")")) break;
          items.push_back(parse_with_item());
        } while (accept_op(","));
        expect_op(")");
        if (!at_op(":")) throw ParseError(peek().line, "not an item list");
        s->items = std::move(items);
      } catch (const ParseError&) {
        pos_ = save;
      }
    }
    if (s->items.empty()) {
      do {
        s->items.push_back(parse_with_item());
      } while (accept_op(","));
    }
    s->body = parse_block();
    close(*s);
    return s;
  }

  WithItem parse_with_item() {
    WithItem item;
    item.context = parse_test();
    if (accept_kw("as")) item.target = parse_target_expr();
    return item;
  }

  // A single assignment-target-like expression (no bare tuples).
  ExprPtr parse_target_expr() {
    if (at_op("*")) return parse_star_expr();
    return parse_expr();
  }

  StmtPtr parse_decorated() {
    const Token& first = peek();
    std::vector<ExprPtr> decorators;
    while (accept_op("@")) {
      decorators.push_back(parse_namedexpr_test());
      expect_newline();
    }
    if (at_kw("def")) return parse_def(std::move(decorators), false, first);
    if (at_kw("class")) return parse_class(std::move(decorators), first);
    if (accept_kw("async")) return parse_def(std::move(decorators), true, first);
    fail("'def' or 'class' after decorator");
  }

  StmtPtr parse_def(std::vector<ExprPtr> decorators, bool is_async, const Token& first) {
    expect_kw("def");
    auto s = make_stmt(StmtKind::FunctionDef, first);
    s->is_async = is_async;
    s->decorators = std::move(decorators);
    s->name = expect_name();
    if (at_op("[")) skip_type_params();
    expect_op("(");
    s->params = parse_params(")", true);
    expect_op(")");
    if (accept_op("->")) s->returns = parse_test();
    s->body = parse_block();
    close(*s);
    return s;
  }

  void skip_type_params() {
    int depth = 0;
    do {
      if (at_op("[")) ++depth;
      if (at_op("]")) --depth;
      advance();
    } while (depth > 0 && !at(TokenKind::EndMarker));
  }

  std::vector<Param> parse_params(std::string_view closer, bool annotations) {
    std::vector<Param> params;
    bool keyword_only = false;
    while (!at_op(closer)) {
      Param p;
      p.line = peek().line;
      if (accept_op("/")) {
        for (auto& prior : params) {
          if (prior.kind == ParamKind::Positional) prior.kind = ParamKind::PositionalOnly;
        }
        if (!accept_op(",")) break;
        continue;
      }
      if (accept_op("**")) {
        p.kind = ParamKind::KwArgs;
        p.name = expect_name();
      } else if (accept_op("*")) {
        keyword_only = true;
        if (at_op(",") || at_op(closer)) {
          if (!accept_op(",")) break;
          continue;
        }
        p.kind = ParamKind::VarArgs;
        p.name = expect_name();
      } else {
        p.kind = keyword_only ? ParamKind::KeywordOnly : ParamKind::Positional;
        p.name = expect_name();
      }
      if (annotations && accept_op(":")) p.annotation = parse_test();
      if (accept_op("=")) p.default_value = parse_test();
      params.push_back(std::move(p));
      if (!accept_op(",")) break;
    }
    return params;
  }

  StmtPtr parse_class(std::vector<ExprPtr> decorators, const Token& first) {
    expect_kw("class");
    auto s = make_stmt(StmtKind::ClassDef, first);
    s->decorators = std::move(decorators);
    s->name = expect_name();
    if (at_op("[")) skip_type_params();
    if (accept_op("(")) {
      std::vector<ExprPtr> args;
      parse_arglist(args, s->class_keywords);
      s->bases = std::move(args);
      expect_op(")");
    }
    s->body = parse_block();
    close(*s);
    return s;
  }

  // `match` is a soft keyword: only commit once `match <subject>:` is followed
  // by an indented `case`.
  StmtPtr try_parse_match() {
    std::size_t save = pos_;
    const Token& first = peek();
    auto s = make_stmt(StmtKind::Match, first);
    try {
      advance();
      if (at_statement_end() || at_op("=") || at_op(".") || at_op(":") || at_op(",") ||
          at_op(")")) {
        pos_ = save;
        return nullptr;
      }
      s->value = parse_testlist_star_expr();
    } catch (const ParseError&) {
      pos_ = save;
      return nullptr;
    }
    if (!(accept_op(":") && accept_kind(TokenKind::Newline) && accept_kind(TokenKind::Indent) &&
          at_kw("case"))) {
      pos_ = save;
      return nullptr;
    }
    while (accept_kw("case")) {
      MatchCase c;
      c.pattern = parse_pattern();
      if (accept_kw("if")) c.guard = parse_namedexpr_test();
      c.body = parse_block();
      s->cases.push_back(std::move(c));
      while (accept_kind(TokenKind::Newline)) {
      }
    }
    if (!accept_kind(TokenKind::Dedent) && !at(TokenKind::EndMarker)) fail("'case'");
    close(*s);
    return s;
  }

  // Patterns are parsed with the expression grammar minus conditional
  // expressions, plus `as` captures at any nesting level.
  ExprPtr parse_pattern() {
    const Token& first = peek();
    std::vector<ExprPtr> items;
    bool trailing_comma = false;
    in_pattern_ = true;
    try {
      do {
        if (at_op(":") || at_kw("if")) break;
        items.push_back(at_op("*") ? parse_star_expr() : parse_test());
        trailing_comma = at_op(",");
      } while (accept_op(","));
    } catch (...) {
      in_pattern_ = false;
      throw;
    }
    in_pattern_ = false;
    if (items.size() == 1 && !trailing_comma) return std::move(items.front());
    auto tuple = make(ExprKind::Tuple, range_from(first));
    tuple->elts = std::move(items);
    return tuple;
  }

  ExprPtr capture_as(const Token& first, ExprPtr p) {
    if (!accept_kw("as")) return p;
    auto named = make(ExprKind::NamedExpr, range_from(first));
    auto target = make(ExprKind::Name, range_from(peek()));
    target->text = expect_name();
    named->index = std::move(target);
    named->value = std::move(p);
    named->range = range_from(first);
    return named;
  }

  // ---- expressions -----------------------------------------------------------

  ExprPtr parse_testlist_star_expr() {
    const Token& first = peek();
    ExprPtr e = at_op("*") ? parse_star_expr() : parse_namedexpr_test();
    if (!at_op(",")) return e;
    auto tuple = make(ExprKind::Tuple, range_from(first));
    tuple->elts.push_back(std::move(e));
    while (accept_op(",")) {
      if (at_tuple_end()) break;
      tuple->elts.push_back(at_op("*") ? parse_star_expr() : parse_namedexpr_test());
    }
    tuple->range = range_from(first);
    return tuple;
  }

  bool at_tuple_end() const {
    return at_statement_end() || at_op("=") || at_op(")") || at_op("]") || at_op("}") ||
           at_op(":") || at_kw("in") || (peek().kind == TokenKind::Op && kAugOps.count(peek().text));
  }

  ExprPtr parse_exprlist() {
    const Token& first = peek();
    ExprPtr e = parse_target_expr();
    if (!at_op(",")) return e;
    auto tuple = make(ExprKind::Tuple, range_from(first));
    tuple->elts.push_back(std::move(e));
    while (accept_op(",")) {
      if (at_tuple_end()) break;
      tuple->elts.push_back(parse_target_expr());
    }
    tuple->range = range_from(first);
    return tuple;
  }

  ExprPtr parse_star_expr() {
    const Token& first = advance();
    auto e = make(ExprKind::Starred, range_from(first));
    e->value = parse_expr();
    e->range = range_from(first);
    return e;
  }

  ExprPtr parse_namedexpr_test() {
    if (at_name() && at_op(":=", 1)) {
      const Token& first = peek();
      auto target = make(ExprKind::Name, range_from(first));
      target->text = advance().text;
      target->range = SourceRange{first.begin, first.end, first.line};
      advance();
      auto e = make(ExprKind::NamedExpr, range_from(first));
      e->index = std::move(target);
      e->value = parse_test();
      e->range = range_from(first);
      return e;
    }
    return parse_test();
  }

  ExprPtr parse_test() {
    if (at_kw("lambda")) return parse_lambda(true);
    const Token& first = peek();
    ExprPtr e = parse_or_test();
    if (in_pattern_) return capture_as(first, std::move(e));
    if (at_kw("if")) {
      advance();
      auto ifexp = make(ExprKind::IfExp, range_from(first));
      ExprPtr test = parse_or_test();
      expect_kw("else");
      ExprPtr orelse = parse_test();
      ifexp->elts.push_back(std::move(e));
      ifexp->elts.push_back(std::move(test));
      ifexp->elts.push_back(std::move(orelse));
      ifexp->range = range_from(first);
      return ifexp;
    }
    return e;
  }

  ExprPtr parse_test_nocond() {
    if (at_kw("lambda")) return parse_lambda(false);
    return parse_or_test();
  }

  ExprPtr parse_lambda(bool allow_cond) {
    const Token& first = advance();
    auto e = make(ExprKind::Lambda, range_from(first));
    e->params = parse_params(":", false);
    expect_op(":");
    e->value = allow_cond ? parse_test() : parse_test_nocond();
    e->range = range_from(first);
    return e;
  }

  ExprPtr parse_bool(std::string_view op, ExprPtr (Parser::*next)()) {
    const Token& first = peek();
    ExprPtr e = (this->*next)();
    if (!at_kw(op)) return e;
    auto b = make(ExprKind::BoolOp, range_from(first));
    b->text = std::string(op);
    b->elts.push_back(std::move(e));
    while (accept_kw(op)) b->elts.push_back((this->*next)());
    b->range = range_from(first);
    return b;
  }
  ExprPtr parse_or_test() { return parse_bool("or", &Parser::parse_and_test); }
  ExprPtr parse_and_test() { return parse_bool("and", &Parser::parse_not_test); }

  ExprPtr parse_not_test() {
    if (at_kw("not")) {
      const Token& first = advance();
      auto e = make(ExprKind::UnaryOp, range_from(first));
      e->text = "not";
      e->elts.push_back(parse_not_test());
      e->range = range_from(first);
      return e;
    }
    return parse_comparison();
  }

  bool at_comp_op() const {
    if (peek().kind == TokenKind::Op) {
      const std::string& t = peek().text;
      return t == "<" || t == ">" || t == "==" || t == ">=" || t == "<=" || t == "!=" || t == "<>";
    }
    return at_kw("in") || at_kw("is") || (at_kw("not") && at_kw("in", 1));
  }

  ExprPtr parse_comparison() {
    const Token& first = peek();
    ExprPtr e = parse_expr();
    if (!at_comp_op()) return e;
    auto cmp = make(ExprKind::Compare, range_from(first));
    cmp->elts.push_back(std::move(e));
    while (at_comp_op()) {
      std::string op = advance().text;
      if (op == "not") op += " " + advance().text;
      else if (op == "is" && accept_kw("not")) op = "is not";
      if (!cmp->text.empty()) cmp->text += " ";
      cmp->text += op;
      cmp->elts.push_back(parse_expr());
    }
    cmp->range = range_from(first);
    return cmp;
  }

  ExprPtr parse_binary(std::initializer_list<std::string_view> ops, ExprPtr (Parser::*next)()) {
    const Token& first = peek();
    ExprPtr e = (this->*next)();
    while (peek().kind == TokenKind::Op) {
      bool match = false;
      for (auto op : ops) match = match || peek().text == op;
      if (!match) break;
      auto b = make(ExprKind::BinOp, range_from(first));
      b->text = advance().text;
      b->elts.push_back(std::move(e));
      b->elts.push_back((this->*next)());
      b->range = range_from(first);
      e = std::move(b);
    }
    return e;
  }
  ExprPtr parse_expr() { return parse_binary({"|"}, &Parser::parse_xor); }
  ExprPtr parse_xor() { return parse_binary({"^"}, &Parser::parse_and); }
  ExprPtr parse_and() { return parse_binary({"&"}, &Parser::parse_shift); }
  ExprPtr parse_shift() { return parse_binary({"<<", ">>"}, &Parser::parse_arith); }
  ExprPtr parse_arith() { return parse_binary({"+", "-"}, &Parser::parse_term); }
  ExprPtr parse_term() { return parse_binary({"*", "@", "/", "%", "//"}, &Parser::parse_factor); }

  ExprPtr parse_factor() {
    if (at_op("+") || at_op("-") || at_op("~")) {
      const Token& first = advance();
      auto e = make(ExprKind::UnaryOp, range_from(first));
      e->text = first.text;
      e->elts.push_back(parse_factor());
      e->range = range_from(first);
      return e;
    }
    return parse_power();
  }

  ExprPtr parse_power() {
    const Token& first = peek();
    ExprPtr e;
    if (at_kw("await")) {
      advance();
      e = make(ExprKind::Await, range_from(first));
      e->value = parse_atom_trailers();
      e->range = range_from(first);
    } else {
      e = parse_atom_trailers();
    }
    if (accept_op("**")) {
      auto b = make(ExprKind::BinOp, range_from(first));
      b->text = "**";
      b->elts.push_back(std::move(e));
      b->elts.push_back(parse_factor());
      b->range = range_from(first);
      return b;
    }
    return e;
  }

  ExprPtr parse_atom_trailers() {
    const Token& first = peek();
    ExprPtr e = parse_atom();
    while (true) {
      if (accept_op(".")) {
        auto a = make(ExprKind::Attribute, range_from(first));
        a->text = expect_name_or_keyword();
        a->value = std::move(e);
        a->range = range_from(first);
        e = std::move(a);
      } else if (accept_op("(")) {
        auto c = make(ExprKind::Call, range_from(first));
        c->func = std::move(e);
        parse_arglist(c->args, c->keywords);
        expect_op(")");
        c->range = range_from(first);
        e = std::move(c);
      } else if (accept_op("[")) {
        auto s = make(ExprKind::Subscript, range_from(first));
        s->value = std::move(e);
        s->index = parse_subscript_list();
        expect_op("]");
        s->range = range_from(first);
        e = std::move(s);
      } else {
        break;
      }
    }
    return e;
  }

  // Attribute names may collide with soft keywords (`x.match`, `x.case`).
  std::string expect_name_or_keyword() {
    if (!at(TokenKind::Name)) fail("attribute name");
    return advance().text;
  }

  ExprPtr parse_subscript_list() {
    const Token& first = peek();
    ExprPtr e = parse_subscript();
    if (!at_op(",")) return e;
    auto tuple = make(ExprKind::Tuple, range_from(first));
    tuple->elts.push_back(std::move(e));
    while (accept_op(",")) {
      if (at_op("]")) break;
      tuple->elts.push_back(parse_subscript());
    }
    tuple->range = range_from(first);
    return tuple;
  }

  ExprPtr parse_subscript() {
    const Token& first = peek();
    if (at_op("*")) return parse_star_expr();
    ExprPtr lower;
    if (!at_op(":")) {
      lower = parse_namedexpr_test();
      if (!at_op(":")) return lower;
    }
    auto s = make(ExprKind::Slice, range_from(first));
    expect_op(":");
    ExprPtr upper, step;
    if (!at_op(":") && !at_op("]") && !at_op(",")) upper = parse_test();
    if (accept_op(":")) {
      if (!at_op("]") && !at_op(",")) step = parse_test();
    }
    s->elts.push_back(std::move(lower));
    s->elts.push_back(std::move(upper));
    s->elts.push_back(std::move(step));
    s->range = range_from(first);
    return s;
  }

  void parse_arglist(std::vector<ExprPtr>& args, std::vector<Keyword>& keywords) {
    while (!at_op(")")) {
      if (accept_op("**")) {
        keywords.push_back(Keyword{"", parse_test()});
      } else if (at_op("*")) {
        const Token& first = advance();
        auto star = make(ExprKind::Starred, range_from(first));
        star->value = parse_test();
        star->range = range_from(first);
        args.push_back(std::move(star));
      } else if (at(TokenKind::Name) && at_op("=", 1)) {
        std::string name = advance().text;
        advance();
        keywords.push_back(Keyword{name, parse_test()});
      } else {
        const Token& first = peek();
        ExprPtr e = parse_namedexpr_test();
        if (at_kw("for") || at_kw("async")) {
          auto gen = make(ExprKind::GeneratorExp, range_from(first));
          gen->elt = std::move(e);
          gen->generators = parse_comp_for();
          gen->range = range_from(first);
          e = std::move(gen);
        }
        args.push_back(std::move(e));
      }
      if (!accept_op(",")) break;
    }
  }

  std::vector<Comprehension> parse_comp_for() {
    std::vector<Comprehension> gens;
    while (at_kw("for") || (at_kw("async") && at_kw("for", 1))) {
      Comprehension c;
      c.is_async = accept_kw("async");
      expect_kw("for");
      c.target = parse_exprlist();
      expect_kw("in");
      c.iter = parse_or_test();
      while (accept_kw("if")) c.ifs.push_back(parse_test_nocond());
      gens.push_back(std::move(c));
    }
    return gens;
  }

  ExprPtr parse_yield() {
    const Token& first = advance();
    if (accept_kw("from")) {
      auto e = make(ExprKind::YieldFrom, range_from(first));
      e->value = parse_test();
      e->range = range_from(first);
      return e;
    }
    auto e = make(ExprKind::Yield, range_from(first));
    if (!at_statement_end() && !at_op(")") && !at_op("=")) e->value = parse_testlist_star_expr();
    e->range = range_from(first);
    return e;
  }

  ExprPtr parse_atom() {
    const Token& first = peek();
    switch (first.kind) {
      case TokenKind::Number: {
        advance();
        auto e = make(ExprKind::Constant, range_from(first));
        e->text = first.text;
        char last = first.text.back();
        if (last == 'j' || last == 'J') e->const_kind = ConstKind::Complex;
        else if (first.text.find_first_of(".eE") != std::string::npos &&
                 first.text.rfind("0x", 0) != 0 && first.text.rfind("0X", 0) != 0)
          e->const_kind = ConstKind::Float;
        else e->const_kind = ConstKind::Int;
        return e;
      }
      case TokenKind::String:
        return parse_strings();
      case TokenKind::Name: {
        if (first.text == "None" || first.text == "True" || first.text == "False") {
          advance();
          auto e = make(ExprKind::Constant, range_from(first));
          e->text = first.text;
          e->const_kind = first.text == "None"   ? ConstKind::None
                          : first.text == "True" ? ConstKind::True
                                                 : ConstKind::False;
          return e;
        }
        if (at_kw("yield")) return parse_yield();
        if (kKeywords.count(first.text) && first.text != "await") fail("expression");
        advance();
        auto e = make(ExprKind::Name, range_from(first));
        e->text = first.text;
        return e;
      }
      case TokenKind::Op:
        break;
      default:
        fail("expression");
    }
    if (accept_op("...")) {
      auto e = make(ExprKind::Constant, range_from(first));
      e->text = "...";
      e->const_kind = ConstKind::Ellipsis;
      return e;
    }
    if (accept_op("(")) return parse_paren(first);
    if (accept_op("[")) return parse_list(first);
    if (accept_op("{")) return parse_brace(first);
    fail("expression");
  }

  ExprPtr parse_strings() {
    const Token& first = peek();
    bool is_bytes = false;
    bool formatted = false;
    std::string text;
    while (at(TokenKind::String)) {
      const Token& t = advance();
      std::size_t q = t.text.find_first_of("'\"");
      for (std::size_t i = 0; i < q; ++i) {
        char c = static_cast<char>(std::tolower(static_cast<unsigned char>(t.text[i])));
        if (c == 'b') is_bytes = true;
        if (c == 'f') formatted = true;
      }
      if (!text.empty()) text += " ";
      text += t.text;
    }
    auto e = make(formatted ? ExprKind::FormattedString : ExprKind::Constant, range_from(first));
    e->text = text;
    e->const_kind = is_bytes ? ConstKind::Bytes : ConstKind::Str;
    return e;
  }

  ExprPtr parse_paren(const Token& first) {
    if (accept_op(")")) {
      auto e = make(ExprKind::Tuple, range_from(first));
      return e;
    }
    if (at_kw("yield")) {
      ExprPtr y = parse_yield();
      expect_op(")");
      y->range = range_from(first);
      return y;
    }
    ExprPtr e = at_op("*") ? parse_star_expr() : parse_namedexpr_test();
    if (at_kw("for") || at_kw("async")) {
      auto gen = make(ExprKind::GeneratorExp, range_from(first));
      gen->elt = std::move(e);
      gen->generators = parse_comp_for();
      expect_op(")");
      gen->range = range_from(first);
      return gen;
    }
    if (accept_op(")")) {
      // Keep the parenthesized range so source slices stay well-formed.
      e->range = range_from(first);
      return e;
    }
    auto tuple = make(ExprKind::Tuple, range_from(first));
    tuple->elts.push_back(std::move(e));
    while (accept_op(",")) {
      if (at_op(")")) break;
      tuple->elts.push_back(at_op("*") ? parse_star_expr() : parse_namedexpr_test());
    }
    expect_op(")");
    tuple->range = range_from(first);
    return tuple;
  }

  ExprPtr parse_list(const Token& first) {
    auto list = make(ExprKind::List, range_from(first));
    if (accept_op("]")) {
      list->range = range_from(first);
      return list;
    }
    ExprPtr e = at_op("*") ? parse_star_expr() : parse_namedexpr_test();
    if (at_kw("for") || at_kw("async")) {
      auto comp = make(ExprKind::ListComp, range_from(first));
      comp->elt = std::move(e);
      comp->generators = parse_comp_for();
      expect_op("]");
      comp->range = range_from(first);
      return comp;
    }
    list->elts.push_back(std::move(e));
    while (accept_op(",")) {
      if (at_op("]")) break;
      list->elts.push_back(at_op("*") ? parse_star_expr() : parse_namedexpr_test());
    }
    expect_op("]");
    list->range = range_from(first);
    return list;
  }

  ExprPtr parse_brace(const Token& first) {
    if (accept_op("}")) {
      auto d = make(ExprKind::Dict, range_from(first));
      return d;
    }
    // Dict display or comprehension.
    if (at_op("**")) return parse_dict_rest(first, nullptr);
    ExprPtr e = at_op("*") ? parse_star_expr() : parse_namedexpr_test();
    if (accept_op(":")) return parse_dict_rest(first, std::move(e));
    if (at_kw("for") || at_kw("async")) {
      auto comp = make(ExprKind::SetComp, range_from(first));
      comp->elt = std::move(e);
      comp->generators = parse_comp_for();
      expect_op("}");
      comp->range = range_from(first);
      return comp;
    }
    auto set = make(ExprKind::Set, range_from(first));
    set->elts.push_back(std::move(e));
    while (accept_op(",")) {
      if (at_op("}")) break;
      set->elts.push_back(at_op("*") ? parse_star_expr() : parse_namedexpr_test());
    }
    expect_op("}");
    set->range = range_from(first);
    return set;
  }

  // Called after the first key and ':' were consumed, or at a leading `**`.
  ExprPtr parse_dict_rest(const Token& first, ExprPtr first_key) {
    auto dict = make(ExprKind::Dict, range_from(first));
    if (first_key) {
      ExprPtr value = parse_test();
      if (at_kw("for") || at_kw("async")) {
        auto comp = make(ExprKind::DictComp, range_from(first));
        comp->elt = std::move(first_key);
        comp->elt_value = std::move(value);
        comp->generators = parse_comp_for();
        expect_op("}");
        comp->range = range_from(first);
        return comp;
      }
      dict->keys.push_back(std::move(first_key));
      dict->elts.push_back(std::move(value));
      if (!accept_op(",")) {
        expect_op("}");
        dict->range = range_from(first);
        return dict;
      }
    }
    while (!at_op("}")) {
      if (accept_op("**")) {
        dict->keys.push_back(nullptr);
        dict->elts.push_back(parse_expr());
      } else {
        dict->keys.push_back(parse_test());
        expect_op(":");
        dict->elts.push_back(parse_test());
      }
      if (!accept_op(",")) break;
    }
    expect_op("}");
    dict->range = range_from(first);
    return dict;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  bool in_pattern_ = false;
};

}  // namespace

Module parse_module(std::string source) {
  Module m;
  m.source = std::move(source);
  m.body = Parser(tokenize(m.source)).parse_file();
  return m;
}

}  // namespace poto::py
