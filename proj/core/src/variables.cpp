#include "poto/variables.hpp"

namespace poto {

VarId VariableTable::fresh(FunctionId owner, std::string display_name, VarRole role,
                           std::uint32_t ordinal) {
  VarId id(static_cast<std::uint32_t>(vars_.size()));
  vars_.push_back(VarInfo{std::move(display_name), owner, role, ordinal, role != VarRole::Temporary});
  return id;
}

VarId VariableTable::temporary(FunctionId owner, std::uint32_t ordinal) {
  return fresh(owner, {}, VarRole::Temporary, ordinal);
}

std::string VariableTable::display(VarId v) const {
  const VarInfo& i = info(v);
  if (i.role == VarRole::Temporary || i.display_name.empty()) return "t" + std::to_string(v.value());
  return i.display_name;
}

}  // namespace poto
