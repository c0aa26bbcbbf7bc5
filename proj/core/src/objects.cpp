#include "poto/objects.hpp"

namespace poto {

const char* object_tag(const AbstractObject& o) {
  switch (o.index()) {
    case 0: return "data";
    case 1: return "meta-func";
    case 2: return "meta-cls";
    default: return "const";
  }
}

ObjectTable::Key ObjectTable::key_of(const AbstractObject& object) {
  return std::visit(
      [](const auto& o) -> Key {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, DataObject>) {
          return {0, o.cls.value(), o.site.function.value(), o.site.ordinal};
        } else if constexpr (std::is_same_v<T, MetaFuncObject>) {
          return {1, o.def.value(), o.bound_receiver.value(), 0};
        } else if constexpr (std::is_same_v<T, MetaClsObject>) {
          return {2, o.cls.value(), 0, 0};
        } else {
          return {3, o.handle, 0, 0};
        }
      },
      object);
}

ObjectId ObjectTable::intern(const AbstractObject& object) {
  Key key = key_of(object);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  ObjectId id(static_cast<std::uint32_t>(objects_.size()));
  objects_.push_back(object);
  index_.emplace(key, id);
  return id;
}

}  // namespace poto
