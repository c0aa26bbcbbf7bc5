#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace poto {

struct Diagnostic {
  std::string path;
  int line = 0;
  std::string message;
};

// Collects `path:line: message` diagnostics. Nothing here is fatal; fatal
// configuration problems throw ConfigError instead.
class Diagnostics {
 public:
  void report(std::string path, int line, std::string message);

  const std::vector<Diagnostic>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  bool contains(std::string_view needle) const;
  void print(std::ostream& os) const;
  void clear() { entries_.clear(); }

 private:
  std::vector<Diagnostic> entries_;
};

std::ostream& operator<<(std::ostream& os, const Diagnostic& d);

}  // namespace poto
