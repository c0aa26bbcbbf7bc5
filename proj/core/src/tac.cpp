#include "poto/tac.hpp"

#include <algorithm>
#include <sstream>

namespace poto {

std::vector<VarId> read_vars(const TacStatement& s) {
  return std::visit(
      [](const auto& f) -> std::vector<VarId> {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, NewStmt>) {
          return {};
        } else if constexpr (std::is_same_v<T, CopyStmt>) {
          return {f.rhs};
        } else if constexpr (std::is_same_v<T, FieldWriteStmt>) {
          return {f.base, f.rhs};
        } else if constexpr (std::is_same_v<T, FieldReadStmt>) {
          return {f.base};
        } else {
          std::vector<VarId> out{f.callee};
          out.insert(out.end(), f.args.begin(), f.args.end());
          return out;
        }
      },
      s.form);
}

std::optional<VarId> LocalEnv::lookup(std::string_view name) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->first == name) return it->second;
  }
  return std::nullopt;
}

VarId LocalEnv::bind(std::string name, VarId v) {
  if (auto existing = lookup(name)) return *existing;
  entries_.emplace_back(std::move(name), v);
  return v;
}

const FunctionEntry* FunctionTable::find(FunctionId f) const {
  auto it = entries_.find(f);
  return it == entries_.end() ? nullptr : &it->second;
}

const FunctionEntry& FunctionTable::insert(FunctionEntry entry) {
  FunctionId id = entry.function;
  auto [it, inserted] = entries_.emplace(id, std::move(entry));
  if (inserted) order_.push_back(id);
  return it->second;
}

// ---- translation ---------------------------------------------------------------

struct Translator::Scope {
  FunctionId function;
  const FunctionInfo* info = nullptr;
  std::string module;
  const py::Module* tree = nullptr;
  std::string path;
  bool module_scope = false;
  std::vector<std::string> imports;
  LocalEnv env;
  std::vector<TacStatement> out;
  std::vector<VarId> params;
  VarId ret;
  std::uint32_t next_ordinal = 0;
  std::uint32_t next_site = 0;
  int line = 0;
};

namespace {

void add_unique(std::vector<VarId>& into, VarId v) {
  if (v.valid() && std::find(into.begin(), into.end(), v) == into.end()) into.push_back(v);
}

void add_all(std::vector<VarId>& into, const std::vector<VarId>& from) {
  for (VarId v : from) add_unique(into, v);
}

bool dotted_parts(const py::Expr& e, std::vector<std::string>& out) {
  if (e.kind == py::ExprKind::Name) {
    out.push_back(e.text);
    return true;
  }
  if (e.kind == py::ExprKind::Attribute && dotted_parts(*e.value, out)) {
    out.push_back(e.text);
    return true;
  }
  return false;
}

}  // namespace

Translator::Scope Translator::open_scope(FunctionId f) {
  Scope sc;
  sc.function = f;
  sc.info = &ctx_.package.functions.info(f);
  sc.module = sc.info->module;
  sc.tree = sc.info->unit ? sc.info->unit->tree.get() : nullptr;
  sc.path = sc.info->unit ? sc.info->unit->source_path.string() : sc.module;
  sc.module_scope = sc.info->is_module_init;
  sc.imports = ctx_.package.external_imports(sc.module);
  return sc;
}

FunctionEntry Translator::close_scope(Scope& sc) {
  FunctionEntry entry;
  entry.function = sc.function;
  entry.env = std::move(sc.env);
  entry.statements = std::move(sc.out);
  entry.params = std::move(sc.params);
  entry.ret = sc.ret;
  return entry;
}

FunctionEntry Translator::translate_function(FunctionId f) {
  Scope sc = open_scope(f);
  const FunctionInfo& info = *sc.info;
  if (info.is_module_init) {
    if (sc.tree) block(sc.tree->body, sc);
    return close_scope(sc);
  }
  for (const auto& p : info.def->params) {
    VarId v = ctx_.vars.fresh(f, p.name, VarRole::Local, sc.next_ordinal++);
    sc.env.bind(p.name, v);
    if (p.kind == py::ParamKind::PositionalOnly || p.kind == py::ParamKind::Positional) sc.params.push_back(v);
  }
  std::string ret_name = info.name + "_ret";
  sc.ret = ctx_.vars.fresh(f, ret_name, VarRole::Return, sc.next_ordinal++);
  sc.env.bind(ret_name, sc.ret);
  block(info.def->body, sc);
  return close_scope(sc);
}

FunctionEntry Translator::translate_body(FunctionId owner, const py::StmtList& body, LocalEnv env) {
  Scope sc = open_scope(owner);
  sc.env = std::move(env);
  sc.next_ordinal = static_cast<std::uint32_t>(sc.env.entries().size());
  block(body, sc);
  return close_scope(sc);
}

std::vector<TacStatement> Translator::translate_import(const ImportRecord& import) {
  auto init = ctx_.package.functions.module_init(import.importing_module);
  if (!init) return {};
  Scope sc = open_scope(*init);
  if (import.kind != ImportKind::Internal || !import.is_from || import.is_star || import.module_alias) return {};
  auto source = ctx_.globals.lookup(import.from_module + "." + import.imported_name);
  auto alias = ctx_.globals.lookup(import.importing_module + "." + import.bound_name);
  if (!source || !alias) {
    report(sc, import.line, "unresolvable internal import '" + import.target + "'");
    return {};
  }
  sc.line = import.line;
  emit(sc, CopyStmt{*alias, *source});
  return std::move(sc.out);
}

void Translator::block(const py::StmtList& body, Scope& sc) {
  for (const auto& s : body) stmt(*s, sc);
}

void Translator::emit(Scope& sc, TacForm form) {
  sc.out.push_back(TacStatement{sc.function, sc.line, std::move(form)});
}

VarId Translator::temp(Scope& sc) { return ctx_.vars.temporary(sc.function, sc.next_ordinal++); }

// Joins a variable set into one variable. Flow-insensitively this is the same
// as emitting the statement once per member of the set.
VarId Translator::single(const Vars& vars, Scope& sc) {
  if (vars.size() == 1) return vars.front();
  VarId t = temp(sc);
  for (VarId v : vars) emit(sc, CopyStmt{t, v});
  return t;
}

ObjectId Translator::allocate(std::string_view builtin_class, Scope& sc) {
  ClassId cls = ctx_.hierarchy.builtin(builtin_class).value_or(ctx_.hierarchy.root());
  return ctx_.objects.data(cls, Site{sc.function, sc.next_site++});
}

void Translator::report(const Scope& sc, int line, std::string message) {
  if (ctx_.diags) ctx_.diags->report(sc.path, line, std::move(message));
}

VarId Translator::bind_name(const std::string& name, Scope& sc) {
  if (sc.module_scope) {
    if (auto g = ctx_.globals.lookup(sc.module + "." + name)) return *g;
  }
  if (auto v = sc.env.lookup(name)) return *v;
  return sc.env.bind(name, ctx_.vars.fresh(sc.function, name, VarRole::Local, sc.next_ordinal++));
}

// ---- statements ----------------------------------------------------------------

void Translator::stmt(const py::Stmt& s, Scope& sc) {
  sc.line = s.line();
  using K = py::StmtKind;
  switch (s.kind) {
    case K::Pass:
    case K::Break:
    case K::Continue:
    case K::Global:
    case K::Nonlocal:
    case K::ClassDef:
      return;
    case K::FunctionDef:
      return function_def(s, sc);
    case K::Import:
    case K::ImportFrom:
      return import_stmt(s, sc);
    case K::ExprStmt:
      expr(*s.value, sc);
      return;
    case K::Assign: {
      Vars rhs = expr(*s.value, sc);
      for (const auto& t : s.targets) assign(*t, rhs, sc);
      return;
    }
    case K::AugAssign: {
      // x op= e is x = x op e; the operator itself is uninterpreted.
      Vars rhs = expr(*s.target, sc);
      add_all(rhs, expr(*s.value, sc));
      assign(*s.target, rhs, sc);
      return;
    }
    case K::AnnAssign:
      if (s.value) {
        assign(*s.target, expr(*s.value, sc), sc);
      } else {
        bind_names(*s.target, sc);
      }
      return;
    case K::For:
      assign(*s.target, expr(*s.iter, sc), sc);
      block(s.body, sc);
      block(s.orelse, sc);
      return;
    case K::Return: {
      Vars rhs = expr_opt(s.value.get(), sc);
      if (sc.ret.valid()) {
        for (VarId v : rhs) emit(sc, CopyStmt{sc.ret, v});
      }
      return;
    }
    case K::With:
      for (const auto& item : s.items) {
        expr(*item.context, sc);
        if (item.target) bind_names(*item.target, sc);
      }
      block(s.body, sc);
      return;
    case K::Try:
      block(s.body, sc);
      for (const auto& h : s.handlers) {
        sc.line = h.line;
        expr_opt(h.type.get(), sc);
        if (!h.name.empty()) bind_name(h.name, sc);
        block(h.body, sc);
      }
      block(s.orelse, sc);
      block(s.finalbody, sc);
      return;
    case K::Match:
      expr(*s.value, sc);
      for (const auto& c : s.cases) {
        bind_names(*c.pattern, sc);
        expr_opt(c.guard.get(), sc);
        block(c.body, sc);
      }
      return;
    default:
      // Other: translate sub-expressions and nested blocks, no gluing.
      for (const py::Expr* e : s.expressions()) expr(*e, sc);
      for (const py::StmtList* b : s.blocks()) block(*b, sc);
      return;
  }
}

void Translator::function_def(const py::Stmt& s, Scope& sc) {
  for (const auto& d : s.decorators) expr(*d, sc);
  for (const auto& p : s.params) expr_opt(p.default_value.get(), sc);
  auto f = ctx_.package.functions.of_def(&s);
  if (!f) return;
  sc.line = s.line();
  VarId t;
  if (sc.module_scope) {
    if (auto g = ctx_.globals.lookup(sc.module + "." + s.name)) t = *g;
  }
  if (!t.valid()) {
    t = ctx_.vars.fresh(sc.function, s.name, VarRole::Local, sc.next_ordinal++);
    t = sc.env.bind(s.name, t);
  }
  emit(sc, NewStmt{t, ctx_.objects.meta_func(*f)});
}

void Translator::import_stmt(const py::Stmt& s, Scope& sc) {
  for (const auto& rec : ctx_.package.imports) {
    if (rec.importing_module != sc.module || rec.line != s.line() || rec.kind != ImportKind::Internal) continue;
    if (!rec.is_from || rec.is_star || rec.module_alias) continue;
    bool named_here = std::any_of(s.aliases.begin(), s.aliases.end(), [&](const py::Alias& a) {
      return a.name == rec.imported_name && (a.asname.empty() ? a.name : a.asname) == rec.bound_name;
    });
    if (!named_here) continue;
    sc.line = rec.line;
    auto source = ctx_.globals.lookup(rec.from_module + "." + rec.imported_name);
    if (!source) {
      report(sc, rec.line, "unresolvable internal import '" + rec.target + "'");
      continue;
    }
    VarId alias = sc.module_scope ? ctx_.globals.lookup(sc.module + "." + rec.bound_name).value_or(VarId{})
                                  : VarId{};
    if (!alias.valid()) alias = bind_name(rec.bound_name, sc);
    emit(sc, CopyStmt{alias, *source});
  }
}

void Translator::assign(const py::Expr& target, const Vars& rhs, Scope& sc) {
  switch (target.kind) {
    case py::ExprKind::Name: {
      VarId t = bind_name(target.text, sc);
      for (VarId v : rhs) emit(sc, CopyStmt{t, v});
      return;
    }
    case py::ExprKind::Attribute: {
      Vars base = expr(*target.value, sc);
      for (VarId b : base) {
        for (VarId v : rhs) emit(sc, FieldWriteStmt{b, target.text, v});
      }
      return;
    }
    case py::ExprKind::Subscript: {
      Vars base = expr(*target.value, sc);
      expr(*target.index, sc);
      for (VarId b : base) {
        for (VarId v : rhs) emit(sc, FieldWriteStmt{b, std::string(kSubscriptField), v});
      }
      return;
    }
    default:
      // Complex left-hand sides: names are bound, no value flows.
      bind_names(target, sc);
      return;
  }
}

void Translator::bind_names(const py::Expr& target, Scope& sc) {
  switch (target.kind) {
    case py::ExprKind::Name:
      bind_name(target.text, sc);
      return;
    case py::ExprKind::Tuple:
    case py::ExprKind::List:
      for (const auto& e : target.elts) bind_names(*e, sc);
      return;
    case py::ExprKind::Starred:
      bind_names(*target.value, sc);
      return;
    case py::ExprKind::NamedExpr:
      // `pattern as name` in match cases.
      bind_names(*target.value, sc);
      bind_names(*target.index, sc);
      return;
    case py::ExprKind::Attribute:
    case py::ExprKind::Subscript:
      expr(target, sc);
      return;
    case py::ExprKind::Call:
      // Class patterns: Point(x=a, y=b).
      for (const auto& a : target.args) bind_names(*a, sc);
      for (const auto& k : target.keywords) bind_names(*k.value, sc);
      return;
    case py::ExprKind::Dict:
      for (const auto& v : target.elts) bind_names(*v, sc);
      return;
    default:
      return;
  }
}

// ---- expressions -----------------------------------------------------------------

bool Translator::references_abstract(const py::Expr& e, const Scope& sc) const {
  using K = py::ExprKind;
  switch (e.kind) {
    case K::Yield:
    case K::YieldFrom:
    case K::Await:
    case K::NamedExpr:
      return true;
    case K::Name: {
      if (sc.env.lookup(e.text)) return true;
      const GlobalBinding* g = ctx_.globals.find(sc.module + "." + e.text);
      return g && !g->external_only;
    }
    default:
      break;
  }
  for (const py::Expr* c : e.children()) {
    if (references_abstract(*c, sc)) return true;
  }
  return false;
}

std::optional<VarId> Translator::try_concrete(const py::Expr& e, Scope& sc) {
  if (!ctx_.concrete || !sc.tree) return std::nullopt;
  std::string text(sc.tree->text(e));
  if (text.empty()) return std::nullopt;
  auto o = ctx_.concrete->eval(sc.module, text, sc.imports);
  if (!o) return std::nullopt;
  VarId t = temp(sc);
  emit(sc, NewStmt{t, *o});
  return t;
}

Translator::Vars Translator::expr(const py::Expr& e, Scope& sc) {
  using K = py::ExprKind;
  switch (e.kind) {
    case K::Name:
      return name(e, sc);
    case K::Attribute:
      return attribute(e, sc);
    default:
      break;
  }
  if (!references_abstract(e, sc)) {
    if (auto t = try_concrete(e, sc)) return {*t};
  }
  switch (e.kind) {
    case K::Constant:
      return {};
    case K::Subscript: {
      Vars base = expr(*e.value, sc);
      expr(*e.index, sc);
      VarId t = temp(sc);
      for (VarId b : base) emit(sc, FieldReadStmt{t, b, std::string(kSubscriptField)});
      return {t};
    }
    case K::Call:
      return call(e, sc);
    case K::List:
      return container(e, "list", sc);
    case K::Tuple:
      return container(e, "tuple", sc);
    case K::Set:
      return container(e, "set", sc);
    case K::Dict:
      return container(e, "dict", sc);
    case K::ListComp:
    case K::SetComp:
    case K::DictComp:
      return comprehension(e, sc);
    case K::GeneratorExp: {
      Vars out;
      bool module_scope = sc.module_scope;
      sc.module_scope = false;
      for (const auto& g : e.generators) {
        Vars iter = expr(*g.iter, sc);
        add_all(out, iter);
        assign(*g.target, iter, sc);
        for (const auto& cond : g.ifs) expr(*cond, sc);
      }
      add_all(out, expr(*e.elt, sc));
      sc.module_scope = module_scope;
      return out;
    }
    case K::Lambda:
      // The body refers to parameters that have no binding here.
      for (const auto& p : e.params) expr_opt(p.default_value.get(), sc);
      return {};
    default:
      return other(e, sc);
  }
}

Translator::Vars Translator::other(const py::Expr& e, Scope& sc) {
  Vars out;
  for (const py::Expr* c : e.children()) add_all(out, expr(*c, sc));
  return out;
}

Translator::Vars Translator::name(const py::Expr& e, Scope& sc) {
  if (auto v = sc.env.lookup(e.text)) return {*v};
  const GlobalBinding* g = ctx_.globals.find(sc.module + "." + e.text);
  if (g && !g->external_only) return {g->var};
  if (auto t = try_concrete(e, sc)) return {*t};
  if (g) return {g->var};
  report(sc, e.line(), "unresolved name '" + e.text + "'");
  return {};
}

std::optional<Translator::Vars> Translator::module_attribute(const py::Expr& e, Scope& sc) {
  std::vector<std::string> parts;
  if (!dotted_parts(e, parts) || sc.env.lookup(parts.front())) return std::nullopt;
  for (std::size_t k = parts.size(); k >= 2; --k) {
    std::vector<std::string> prefix(parts.begin(), parts.begin() + static_cast<std::ptrdiff_t>(k));
    auto q = resolve_qualified(ctx_.package, ctx_.globals, sc.module, prefix);
    if (!q) continue;
    auto var = ctx_.globals.lookup(*q);
    if (!var) continue;
    VarId current = *var;
    for (std::size_t i = k; i < parts.size(); ++i) {
      VarId t = temp(sc);
      emit(sc, FieldReadStmt{t, current, parts[i]});
      current = t;
    }
    return Vars{current};
  }
  return std::nullopt;
}

Translator::Vars Translator::attribute(const py::Expr& e, Scope& sc) {
  if (!references_abstract(e, sc)) {
    if (auto t = try_concrete(e, sc)) return {*t};
  }
  if (auto mapped = module_attribute(e, sc)) return *mapped;
  Vars base = expr(*e.value, sc);
  VarId t = temp(sc);
  for (VarId b : base) emit(sc, FieldReadStmt{t, b, e.text});
  return {t};
}

Translator::Vars Translator::call(const py::Expr& e, Scope& sc) {
  Vars callee = expr(*e.func, sc);
  std::vector<VarId> args;
  for (const auto& a : e.args) {
    if (a->kind == py::ExprKind::Starred) {
      expr(*a->value, sc);
      continue;
    }
    Vars v = expr(*a, sc);
    // An empty set still occupies its position so later arguments line up.
    args.push_back(v.empty() ? temp(sc) : single(v, sc));
  }
  for (const auto& k : e.keywords) expr(*k.value, sc);
  sc.line = e.line();
  VarId t = temp(sc);
  Site site{sc.function, sc.next_site++};
  if (!callee.empty()) emit(sc, CallStmt{t, single(callee, sc), std::move(args), site});
  return {t};
}

Translator::Vars Translator::container(const py::Expr& e, std::string_view cls, Scope& sc) {
  Vars items;
  if (e.kind == py::ExprKind::Dict) {
    for (std::size_t i = 0; i < e.elts.size(); ++i) {
      if (i < e.keys.size() && e.keys[i]) {
        expr(*e.keys[i], sc);
        add_all(items, expr(*e.elts[i], sc));
      } else {
        expr(*e.elts[i], sc);  // **mapping
      }
    }
  } else {
    for (const auto& elt : e.elts) {
      add_all(items, expr(elt->kind == py::ExprKind::Starred ? *elt->value : *elt, sc));
    }
  }
  sc.line = e.line();
  VarId t = temp(sc);
  emit(sc, NewStmt{t, allocate(cls, sc)});
  for (VarId v : items) emit(sc, FieldWriteStmt{t, std::string(kSubscriptField), v});
  return {t};
}

Translator::Vars Translator::comprehension(const py::Expr& e, Scope& sc) {
  std::string_view cls = e.kind == py::ExprKind::ListComp ? "list" : e.kind == py::ExprKind::SetComp ? "set" : "dict";
  // [elt for x in it if c] is result = new; for x in it: result[] = elt.
  VarId result = temp(sc);
  sc.line = e.line();
  emit(sc, NewStmt{result, allocate(cls, sc)});
  // Comprehension variables never land in the module's global bindings.
  bool module_scope = sc.module_scope;
  sc.module_scope = false;
  for (const auto& g : e.generators) {
    assign(*g.target, expr(*g.iter, sc), sc);
    for (const auto& cond : g.ifs) expr(*cond, sc);
  }
  Vars values;
  if (e.kind == py::ExprKind::DictComp) {
    expr(*e.elt, sc);
    values = expr(*e.elt_value, sc);
  } else {
    values = expr(*e.elt, sc);
  }
  sc.module_scope = module_scope;
  for (VarId v : values) emit(sc, FieldWriteStmt{result, std::string(kSubscriptField), v});
  return {result};
}

// ---- dumps ------------------------------------------------------------------------

std::string format_object(ObjectId o, const ObjectTable& objects, const Hierarchy& hierarchy,
                          const FunctionRegistry& functions) {
  return std::visit(
      [&](const auto& obj) -> std::string {
        using T = std::decay_t<decltype(obj)>;
        if constexpr (std::is_same_v<T, DataObject>) {
          return "(data, " + hierarchy.record(obj.cls).qualified_name() + ")";
        } else if constexpr (std::is_same_v<T, MetaFuncObject>) {
          std::string s = "(meta-func, " + functions.info(obj.def).full_name();
          if (obj.bound_receiver.valid()) s += ", self=" + format_object(obj.bound_receiver, objects, hierarchy, functions);
          return s + ")";
        } else if constexpr (std::is_same_v<T, MetaClsObject>) {
          return "(meta-cls, " + hierarchy.record(obj.cls).qualified_name() + ")";
        } else {
          return "(const, <class '" + obj.type_name + "'>, " + obj.repr + ")";
        }
      },
      objects.get(o));
}

std::string format_statement(const TacStatement& s, const VariableTable& vars, const ObjectTable& objects,
                             const Hierarchy& hierarchy, const FunctionRegistry& functions) {
  auto field = [](const std::string& base, const std::string& f) {
    return f == kSubscriptField ? base + "[]" : base + "." + f;
  };
  return std::visit(
      [&](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, NewStmt>) {
          return vars.display(f.lhs) + " = " + format_object(f.object, objects, hierarchy, functions);
        } else if constexpr (std::is_same_v<T, CopyStmt>) {
          return vars.display(f.lhs) + " = " + vars.display(f.rhs);
        } else if constexpr (std::is_same_v<T, FieldWriteStmt>) {
          return field(vars.display(f.base), f.field) + " = " + vars.display(f.rhs);
        } else if constexpr (std::is_same_v<T, FieldReadStmt>) {
          return vars.display(f.lhs) + " = " + field(vars.display(f.base), f.field);
        } else {
          std::string s = vars.display(f.lhs) + " = " + vars.display(f.callee) + "(";
          for (std::size_t i = 0; i < f.args.size(); ++i) {
            if (i) s += ", ";
            s += vars.display(f.args[i]);
          }
          return s + ")";
        }
      },
      s.form);
}

std::string dump_function(const FunctionEntry& entry, const VariableTable& vars, const ObjectTable& objects,
                          const Hierarchy& hierarchy, const FunctionRegistry& functions) {
  std::ostringstream os;
  std::string prefix = functions.info(entry.function).full_name() + ": ";
  for (const auto& s : entry.statements) {
    os << prefix << format_statement(s, vars, objects, hierarchy, functions) << '\n';
  }
  return os.str();
}

}  // namespace poto
