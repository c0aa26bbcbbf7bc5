#pragma once

#include <string>
#include <vector>

#include "poto/ids.hpp"

namespace poto {

enum class VarRole {
  Local,      // source local or parameter
  Return,     // the <function>_ret slot
  Temporary,  // compiler temporary, never reported
  Global,     // module-level binding in the global environment
};

struct VarInfo {
  std::string display_name;
  FunctionId owner;  // module initializer for globals
  VarRole role = VarRole::Local;
  // Creation order within the owner; stable across re-translation.
  std::uint32_t ordinal = 0;
  bool reportable = true;
};

class VariableTable {
 public:
  VarId fresh(FunctionId owner, std::string display_name, VarRole role, std::uint32_t ordinal);
  VarId temporary(FunctionId owner, std::uint32_t ordinal);

  const VarInfo& info(VarId v) const { return vars_.at(v.value()); }
  VarInfo& info(VarId v) { return vars_.at(v.value()); }
  std::size_t size() const { return vars_.size(); }

  // Display form used by dumps: source name, or tN for temporaries.
  std::string display(VarId v) const;

 private:
  std::vector<VarInfo> vars_;
};

}  // namespace poto
