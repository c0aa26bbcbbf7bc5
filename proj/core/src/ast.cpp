#include "poto/ast.hpp"

namespace poto::py {
namespace {

void add(std::vector<const Expr*>& out, const ExprPtr& e) {
  if (e) out.push_back(e.get());
}

}  // namespace

std::vector<const Expr*> Expr::children() const {
  std::vector<const Expr*> out;
  switch (kind) {
    case ExprKind::Name:
    case ExprKind::Constant:
      break;
    case ExprKind::Attribute:
    case ExprKind::Starred:
    case ExprKind::Await:
    case ExprKind::Yield:
    case ExprKind::YieldFrom:
      add(out, value);
      break;
    case ExprKind::Subscript:
      add(out, value);
      add(out, index);
      break;
    case ExprKind::NamedExpr:
      add(out, index);
      add(out, value);
      break;
    case ExprKind::Call:
      add(out, func);
      for (const auto& a : args) add(out, a);
      for (const auto& k : keywords) add(out, k.value);
      break;
    case ExprKind::Dict:
      for (std::size_t i = 0; i < elts.size(); ++i) {
        if (i < keys.size()) add(out, keys[i]);
        add(out, elts[i]);
      }
      break;
    case ExprKind::ListComp:
    case ExprKind::SetComp:
    case ExprKind::DictComp:
    case ExprKind::GeneratorExp:
      for (const auto& g : generators) {
        add(out, g.target);
        add(out, g.iter);
        for (const auto& c : g.ifs) add(out, c);
      }
      add(out, elt);
      add(out, elt_value);
      break;
    case ExprKind::Lambda:
      for (const auto& p : params) add(out, p.default_value);
      add(out, value);
      break;
    default:
      for (const auto& e : elts) add(out, e);
      break;
  }
  return out;
}

std::vector<const Expr*> Stmt::expressions() const {
  std::vector<const Expr*> out;
  for (const auto& d : decorators) add(out, d);
  for (const auto& p : params) {
    add(out, p.annotation);
    add(out, p.default_value);
  }
  add(out, returns);
  for (const auto& b : bases) add(out, b);
  for (const auto& k : class_keywords) add(out, k.value);
  for (const auto& t : targets) add(out, t);
  add(out, target);
  add(out, annotation);
  add(out, iter);
  add(out, value);
  add(out, test);
  add(out, extra);
  for (const auto& item : items) {
    add(out, item.context);
    add(out, item.target);
  }
  for (const auto& h : handlers) add(out, h.type);
  for (const auto& c : cases) {
    add(out, c.pattern);
    add(out, c.guard);
  }
  return out;
}

std::vector<const StmtList*> Stmt::blocks() const {
  std::vector<const StmtList*> out;
  out.push_back(&body);
  for (const auto& h : handlers) out.push_back(&h.body);
  for (const auto& c : cases) out.push_back(&c.body);
  out.push_back(&orelse);
  out.push_back(&finalbody);
  return out;
}

void for_each_in_scope(const StmtList& body, const std::function<void(const Stmt&)>& f) {
  for (const auto& s : body) {
    f(*s);
    if (s->kind == StmtKind::FunctionDef || s->kind == StmtKind::ClassDef) continue;
    for (const StmtList* block : s->blocks()) for_each_in_scope(*block, f);
  }
}

}  // namespace poto::py
