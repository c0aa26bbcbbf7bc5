#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "poto/ids.hpp"

namespace poto {

// Instance of a package (or built-in container) class, one per allocation site.
struct DataObject {
  ClassId cls;
  Site site;
};

// Function value. A valid bound_receiver makes it a closure over `self`.
struct MetaFuncObject {
  FunctionId def;
  ObjectId bound_receiver;
};

struct MetaClsObject {
  ClassId cls;
};

// Live value held by the evaluator; identity is the handle alone.
struct ConstObject {
  std::uint64_t handle = 0;
  std::string type_name;
  std::string repr;
};

using AbstractObject = std::variant<DataObject, MetaFuncObject, MetaClsObject, ConstObject>;

const char* object_tag(const AbstractObject& o);
inline bool is_const(const AbstractObject& o) { return std::holds_alternative<ConstObject>(o); }

// Hash-consing table: interning an equal object returns the same id.
class ObjectTable {
 public:
  ObjectId intern(const AbstractObject& object);
  ObjectId data(ClassId cls, Site site) { return intern(DataObject{cls, site}); }
  ObjectId meta_func(FunctionId def, ObjectId receiver = {}) { return intern(MetaFuncObject{def, receiver}); }
  ObjectId meta_cls(ClassId cls) { return intern(MetaClsObject{cls}); }

  const AbstractObject& get(ObjectId id) const { return objects_.at(id.value()); }
  std::size_t size() const { return objects_.size(); }

 private:
  using Key = std::tuple<int, std::uint64_t, std::uint64_t, std::uint64_t>;
  static Key key_of(const AbstractObject& object);

  std::vector<AbstractObject> objects_;
  std::map<Key, ObjectId> index_;
};

}  // namespace poto
