#include "poto/typeinfer.hpp"

#include <algorithm>
#include <cctype>
#include <vector>

namespace poto {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Splits on `sep` outside brackets and parentheses.
std::vector<std::string_view> split_top(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '[' || c == '(') ++depth;
    else if (c == ']' || c == ')') --depth;
    else if (c == sep && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(s.substr(start)));
  return out;
}

std::string_view unquote(std::string_view s) {
  std::size_t q = s.find_first_of("'\"");
  if (q == std::string_view::npos || q > 2) return s;
  for (std::size_t i = 0; i < q; ++i) {
    if (!std::isalpha(static_cast<unsigned char>(s[i]))) return s;
  }
  std::string_view body = s.substr(q);
  for (std::string_view quote : {"\"\"\"", "'''", "\"", "'"}) {
    if (body.size() >= 2 * quote.size() && body.substr(0, quote.size()) == quote &&
        body.substr(body.size() - quote.size()) == quote) {
      return trim(body.substr(quote.size(), body.size() - 2 * quote.size()));
    }
  }
  return s;
}

std::string_view strip_typing(std::string_view s) {
  for (std::string_view prefix : {"typing.", "typing_extensions.", "t.", "builtins."}) {
    if (s.substr(0, prefix.size()) == prefix) return s.substr(prefix.size());
  }
  return s;
}

const std::map<std::string, std::string, std::less<>>& typing_aliases() {
  static const std::map<std::string, std::string, std::less<>> aliases = {
      {"List", "list"},          {"Dict", "dict"},     {"Set", "set"},
      {"FrozenSet", "frozenset"}, {"Tuple", "tuple"},   {"Type", "type"},
      {"Text", "str"},           {"Callable", "function"}, {"NoneType", "None"},
      {"DefaultDict", "collections.defaultdict"}, {"OrderedDict", "collections.OrderedDict"},
      {"Deque", "collections.deque"}, {"Counter", "collections.Counter"},
  };
  return aliases;
}

bool is_builtin_type(std::string_view name) {
  static const std::set<std::string, std::less<>> names = {
      "int",  "float", "complex", "str",       "bytes", "bytearray", "bool", "list", "dict",
      "set",  "tuple", "frozenset", "type",    "object", "range",    "slice", "memoryview", "None",
      "function",
  };
  return names.count(name) != 0;
}

void collect(std::string_view text, const NameResolver& resolve, TypeSet& out) {
  text = trim(text);
  if (text.empty()) return;
  std::string_view inner = unquote(text);
  if (inner != text) return collect(inner, resolve, out);
  if (text.front() == '(' && text.back() == ')') return collect(text.substr(1, text.size() - 2), resolve, out);

  auto alternatives = split_top(text, '|');
  if (alternatives.size() > 1) {
    for (auto a : alternatives) collect(a, resolve, out);
    return;
  }

  std::string_view head = text;
  std::string_view args;
  if (std::size_t open = text.find('['); open != std::string_view::npos && text.back() == ']') {
    head = trim(text.substr(0, open));
    args = text.substr(open + 1, text.size() - open - 2);
  }
  std::string_view bare = strip_typing(head);
  if (bare == "Any") return;
  if (bare == "Optional") {
    collect(args, resolve, out);
    out.insert("None");
    return;
  }
  if (bare == "Union") {
    for (auto a : split_top(args, ',')) collect(a, resolve, out);
    return;
  }
  if (bare == "Annotated" || bare == "Final" || bare == "ClassVar") {
    collect(split_top(args, ',').front(), resolve, out);
    return;
  }
  if (bare == "None" || bare == "NoneType") {
    out.insert("None");
    return;
  }
  const auto& aliases = typing_aliases();
  if (auto it = aliases.find(bare); it != aliases.end()) {
    out.insert(it->second);
    return;
  }
  if (is_builtin_type(bare)) {
    out.insert(std::string(bare));
    return;
  }
  std::string name = resolve ? resolve(head) : std::string(head);
  if (!name.empty()) out.insert(std::move(name));
}

const std::set<std::string, std::less<>>& builtin_constructors() {
  static const std::set<std::string, std::less<>> names = {"list", "dict", "set",  "tuple",    "str",
                                                           "int",  "float", "bool", "frozenset"};
  return names;
}

// Type of a literal or built-in constructor call, if the expression is one.
std::optional<std::string> shallow_type(const py::Expr& e) {
  using K = py::ExprKind;
  switch (e.kind) {
    case K::Constant:
      switch (e.const_kind) {
        case py::ConstKind::None: return "None";
        case py::ConstKind::True:
        case py::ConstKind::False: return "bool";
        case py::ConstKind::Int: return "int";
        case py::ConstKind::Float: return "float";
        case py::ConstKind::Complex: return "complex";
        case py::ConstKind::Str: return "str";
        case py::ConstKind::Bytes: return "bytes";
        case py::ConstKind::Ellipsis: return "ellipsis";
      }
      return std::nullopt;
    case K::FormattedString: return "str";
    case K::List:
    case K::ListComp: return "list";
    case K::Tuple: return "tuple";
    case K::Set:
    case K::SetComp: return "set";
    case K::Dict:
    case K::DictComp: return "dict";
    case K::Call:
      if (e.func && e.func->kind == K::Name && builtin_constructors().count(e.func->text)) return e.func->text;
      return std::nullopt;
    default: return std::nullopt;
  }
}

class ShallowScanner {
 public:
  ShallowScanner(const Package& package, KeyedTypeResult& out) : package_(package), out_(out) {}

  void scan(const FunctionInfo& info) {
    const ModuleUnit* unit = info.unit;
    if (!unit || unit->is_test || !unit->tree) return;
    module_ = info.module;
    function_ = info.is_module_init ? std::string(kModuleScope) : info.qualname;
    tree_ = unit->tree.get();
    if (info.is_module_init) {
      statements(unit->tree->body);
      return;
    }
    const py::Stmt& def = *info.def;
    for (const auto& p : def.params) {
      if (p.annotation) record(p.name, annotation(*p.annotation));
    }
    if (def.returns) record(info.name + "_ret", annotation(*def.returns));
    statements(def.body);
  }

 private:
  void statements(const py::StmtList& body) {
    py::for_each_in_scope(body, [&](const py::Stmt& s) {
      if (s.kind == py::StmtKind::Assign && s.value) {
        auto t = shallow_type(*s.value);
        if (!t) return;
        for (const auto& target : s.targets) {
          if (target->kind == py::ExprKind::Name) record(target->text, {*t});
        }
      } else if (s.kind == py::StmtKind::AnnAssign && s.target && s.target->kind == py::ExprKind::Name) {
        TypeSet types = annotation(*s.annotation);
        if (s.value) {
          if (auto t = shallow_type(*s.value)) types.insert(*t);
        }
        record(s.target->text, types);
      }
    });
  }

  TypeSet annotation(const py::Expr& e) {
    return annotation_types(tree_->text(e), [&](std::string_view name) { return resolve(name); });
  }

  std::string resolve(std::string_view name) {
    std::string_view first = name.substr(0, name.find('.'));
    std::string_view rest = name.substr(first.size());
    if (classes(module_).count(first)) return module_ + "." + std::string(name);
    if (const ImportRecord* rec = package_.import_binding(module_, first)) {
      std::string target = rec->kind == ImportKind::Internal && rec->is_from
                               ? rec->from_module + "." + rec->imported_name
                               : rec->module_alias.value_or(rec->target);
      return target + std::string(rest);
    }
    return std::string(name);
  }

  const std::set<std::string, std::less<>>& classes(const std::string& module) {
    auto [it, inserted] = class_cache_.try_emplace(module);
    if (inserted) {
      if (const ModuleUnit* unit = package_.unit(module)) {
        py::for_each_in_scope(unit->tree->body, [&](const py::Stmt& s) {
          if (s.kind == py::StmtKind::ClassDef) it->second.insert(s.name);
        });
      }
    }
    return it->second;
  }

  void record(const std::string& variable, const TypeSet& types) {
    if (types.empty()) return;
    out_[Key{module_, function_, variable}].insert(types.begin(), types.end());
  }

  const Package& package_;
  KeyedTypeResult& out_;
  std::map<std::string, std::set<std::string, std::less<>>> class_cache_;
  std::string module_;
  std::string function_;
  const py::Module* tree_ = nullptr;
};

bool in_test_module(const FunctionInfo& info) { return info.unit && info.unit->is_test; }

}  // namespace

std::string type_name_of(ObjectId o, const ObjectTable& objects, const Hierarchy& hierarchy) {
  const AbstractObject& obj = objects.get(o);
  if (const auto* d = std::get_if<DataObject>(&obj)) return hierarchy.record(d->cls).qualified_name();
  if (std::holds_alternative<MetaClsObject>(obj)) return "type";
  if (std::holds_alternative<MetaFuncObject>(obj)) return "function";
  const auto& c = std::get<ConstObject>(obj);
  if (c.type_name == "NoneType") return "None";
  return c.type_name;
}

KeyedTypeResult infer_types(const InferContext& ctx, const PointsToGraph& graph, const FunctionTable& table) {
  KeyedTypeResult out;
  auto types_of = [&](VarId v) {
    TypeSet types;
    for (ObjectId o : graph.pt(v)) types.insert(type_name_of(o, ctx.objects, ctx.hierarchy));
    return types;
  };
  for (FunctionId f : table.ids()) {
    const FunctionInfo& info = ctx.package.functions.info(f);
    if (in_test_module(info)) continue;
    std::string function = info.is_module_init ? std::string(kModuleScope) : info.qualname;
    for (const auto& [name, var] : table.at(f).env.entries()) {
      const VarInfo& vi = ctx.vars.info(var);
      if (!vi.reportable || vi.role == VarRole::Temporary) continue;
      // Module-scope names that resolve to Γ0 are reported below.
      if (vi.role == VarRole::Global) continue;
      out[Key{info.module, function, name}] = types_of(var);
    }
  }
  for (const auto& [qualified, binding] : ctx.globals.bindings()) {
    if (binding.kind != BindingKind::Assignment) continue;
    const VarInfo& vi = ctx.vars.info(binding.var);
    if (!vi.reportable || !table.contains(vi.owner)) continue;
    const FunctionInfo& owner = ctx.package.functions.info(vi.owner);
    if (in_test_module(owner)) continue;
    std::string variable = qualified.substr(owner.module.size() + 1);
    out[Key{owner.module, std::string(kModuleScope), variable}] = types_of(binding.var);
  }
  return out;
}

TypeSet annotation_types(std::string_view text, const NameResolver& resolve) {
  TypeSet out;
  collect(text, resolve, out);
  return out;
}

KeyedTypeResult shallow_scan(const Package& package) {
  KeyedTypeResult out;
  ShallowScanner scanner(package, out);
  for (const auto& info : package.functions.all()) scanner.scan(info);
  return out;
}

KeyedTypeResult merge(const KeyedTypeResult& primary, const KeyedTypeResult& shallow) {
  KeyedTypeResult out = primary;
  for (const auto& [key, types] : shallow) out[key].insert(types.begin(), types.end());
  return out;
}

}  // namespace poto
