#include "poto/diagnostics.hpp"

#include <ostream>

namespace poto {

void Diagnostics::report(std::string path, int line, std::string message) {
  entries_.push_back(Diagnostic{std::move(path), line, std::move(message)});
}

bool Diagnostics::contains(std::string_view needle) const {
  for (const auto& d : entries_) {
    if (d.message.find(needle) != std::string::npos) return true;
  }
  return false;
}

void Diagnostics::print(std::ostream& os) const {
  for (const auto& d : entries_) os << d << '\n';
}

std::ostream& operator<<(std::ostream& os, const Diagnostic& d) {
  return os << d.path << ':' << d.line << ": " << d.message;
}

}  // namespace poto
