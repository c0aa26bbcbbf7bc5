#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

// Syntax trees for the analyzed scripting language. The parser accepts the
// full statement and expression grammar; the analysis interprets a subset and
// walks everything else generically through children().
namespace poto::py {

struct SourceRange {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  int line = 0;
};

enum class ExprKind {
  Name,
  Constant,
  Attribute,
  Subscript,
  Call,
  List,
  Tuple,
  Set,
  Dict,
  ListComp,
  SetComp,
  DictComp,
  GeneratorExp,
  Lambda,
  BinOp,
  BoolOp,
  UnaryOp,
  Compare,
  IfExp,
  NamedExpr,
  Starred,
  Yield,
  YieldFrom,
  Await,
  Slice,
  FormattedString,
};

enum class ConstKind { None, True, False, Int, Float, Complex, Str, Bytes, Ellipsis };

struct Expr;
struct Stmt;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;
using StmtList = std::vector<StmtPtr>;

struct Comprehension {
  ExprPtr target;
  ExprPtr iter;
  std::vector<ExprPtr> ifs;
  bool is_async = false;
};

struct Keyword {
  std::string name;  // empty for `**mapping`
  ExprPtr value;
};

enum class ParamKind { PositionalOnly, Positional, VarArgs, KeywordOnly, KwArgs };

struct Param {
  std::string name;
  ParamKind kind = ParamKind::Positional;
  ExprPtr annotation;
  ExprPtr default_value;
  int line = 0;
};

struct Expr {
  ExprKind kind;
  SourceRange range;

  // Name: identifier. Attribute: attribute name. Constant: literal spelling.
  // BinOp/UnaryOp/BoolOp: operator. Compare: space-joined operators.
  std::string text;
  ConstKind const_kind = ConstKind::None;

  // Attribute/Subscript base, Starred/Await/Yield/YieldFrom operand,
  // NamedExpr value, Lambda body.
  ExprPtr value;
  // Subscript index, NamedExpr target.
  ExprPtr index;

  // Call.
  ExprPtr func;
  std::vector<ExprPtr> args;
  std::vector<Keyword> keywords;

  // List/Tuple/Set items, Dict values, BinOp/BoolOp/Compare operands,
  // IfExp [body, test, orelse], Slice [lower, upper, step] (entries may be null),
  // FormattedString embedded expressions.
  std::vector<ExprPtr> elts;
  // Dict keys; a null key marks `**mapping`.
  std::vector<ExprPtr> keys;

  // Comprehensions: element (key for DictComp) and DictComp value.
  ExprPtr elt;
  ExprPtr elt_value;
  std::vector<Comprehension> generators;

  std::vector<Param> params;  // Lambda

  Expr(ExprKind k, SourceRange r) : kind(k), range(r) {}

  int line() const { return range.line; }
  // Direct sub-expressions in source order; null slots are skipped.
  std::vector<const Expr*> children() const;
};

enum class StmtKind {
  FunctionDef,
  ClassDef,
  Return,
  Assign,
  AugAssign,
  AnnAssign,
  For,
  While,
  If,
  With,
  Try,
  Raise,
  Import,
  ImportFrom,
  Global,
  Nonlocal,
  ExprStmt,
  Pass,
  Break,
  Continue,
  Delete,
  Assert,
  Match,
};

struct Alias {
  std::string name;    // dotted
  std::string asname;  // empty when absent
  int line = 0;
};

struct ExceptHandler {
  ExprPtr type;
  std::string name;
  StmtList body;
  int line = 0;
};

struct WithItem {
  ExprPtr context;
  ExprPtr target;
};

struct MatchCase {
  ExprPtr pattern;
  ExprPtr guard;
  StmtList body;
};

struct Stmt {
  StmtKind kind;
  SourceRange range;

  // FunctionDef/ClassDef.
  std::string name;
  std::vector<Param> params;
  ExprPtr returns;
  std::vector<ExprPtr> decorators;
  std::vector<ExprPtr> bases;
  std::vector<Keyword> class_keywords;
  bool is_async = false;

  // Assign: one or more targets. Delete: deleted expressions.
  std::vector<ExprPtr> targets;
  // AugAssign/AnnAssign/For target.
  ExprPtr target;
  // Assign/AugAssign/AnnAssign/Return/ExprStmt value, Raise exception,
  // Match subject.
  ExprPtr value;
  ExprPtr annotation;
  std::string op;  // AugAssign operator without '='
  ExprPtr iter;
  ExprPtr test;    // If/While/Assert
  ExprPtr extra;   // Raise cause, Assert message

  StmtList body;
  StmtList orelse;
  StmtList finalbody;
  std::vector<ExceptHandler> handlers;
  std::vector<WithItem> items;
  std::vector<MatchCase> cases;

  // Import/ImportFrom.
  std::vector<Alias> aliases;
  std::string module;  // ImportFrom target without leading dots
  int level = 0;       // number of leading dots

  std::vector<std::string> names;  // Global/Nonlocal

  Stmt(StmtKind k, SourceRange r) : kind(k), range(r) {}

  int line() const { return range.line; }
  // Expressions owned directly by this statement (not by nested statements).
  std::vector<const Expr*> expressions() const;
  // Nested statement lists: body, orelse, handler bodies, case bodies, finalbody.
  std::vector<const StmtList*> blocks() const;
};

struct Module {
  std::string source;
  StmtList body;

  std::string_view text(const Expr& e) const {
    return std::string_view(source).substr(e.range.begin, e.range.end - e.range.begin);
  }
};

// Visits statements that run in the scope owning `body`: compound statement
// blocks are entered, function and class bodies are not.
void for_each_in_scope(const StmtList& body, const std::function<void(const Stmt&)>& f);

}  // namespace poto::py
