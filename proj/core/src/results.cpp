#include "poto/results.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace poto {

namespace {

constexpr std::string_view kSeparator = "::";

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::string encode_key(const Key& key) {
  return key.module + std::string(kSeparator) + key.function + std::string(kSeparator) + key.variable;
}

Key decode_key(std::string_view text) {
  std::size_t first = text.find(kSeparator);
  std::size_t last = text.rfind(kSeparator);
  if (first == std::string_view::npos || first == last) {
    throw ResultFormatError("malformed key: " + std::string(text));
  }
  Key key;
  key.module = std::string(text.substr(0, first));
  key.function = std::string(text.substr(first + 2, last - first - 2));
  key.variable = std::string(text.substr(last + 2));
  if (key.module.empty() || key.function.empty() || key.variable.empty() ||
      key.function.find(kSeparator) != std::string::npos) {
    throw ResultFormatError("malformed key: " + std::string(text));
  }
  return key;
}

std::string serialize_results(const KeyedTypeResult& result) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [key, types] : result) {
    // std::set is already sorted.
    doc[encode_key(key)] = std::vector<std::string>(types.begin(), types.end());
  }
  return doc.dump(2) + "\n";
}

KeyedTypeResult parse_results(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ResultFormatError(std::string("invalid result file: ") + e.what());
  }
  if (!doc.is_object()) throw ResultFormatError("result file must be an object");
  KeyedTypeResult out;
  for (const auto& [k, v] : doc.items()) {
    TypeSet types;
    auto add = [&](const nlohmann::json& t) {
      if (!t.is_string()) throw ResultFormatError("type names must be strings at " + k);
      std::string name = t.get<std::string>();
      if (name != "Any") types.insert(std::move(name));
    };
    if (v.is_array()) {
      for (const auto& t : v) add(t);
    } else if (v.is_string()) {
      add(v);
    } else if (!v.is_null()) {
      throw ResultFormatError("value must be a list of type names at " + k);
    }
    out[decode_key(k)].insert(types.begin(), types.end());
  }
  return out;
}

void save_results(const KeyedTypeResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ResultFormatError("cannot write " + path.string());
  out << serialize_results(result);
}

KeyedTypeResult load_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResultFormatError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_results(buf.str());
}

std::string normalize_type_name(std::string_view name) {
  std::string s(name);
  auto trim = [](std::string& t) {
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.front()))) t.erase(t.begin());
    while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
  };
  trim(s);
  if (s.rfind("<class '", 0) == 0 && s.size() >= 10 && s.substr(s.size() - 2) == "'>") {
    s = s.substr(8, s.size() - 10);
  }
  if (std::size_t open = s.find('['); open != std::string::npos) s.erase(open);
  trim(s);
  for (std::string_view prefix : {"typing.", "builtins."}) {
    if (s.rfind(prefix, 0) == 0) s.erase(0, prefix.size());
  }
  if (s == "NoneType") return "None";
  static const std::set<std::string, std::less<>> containers = {"list", "dict",  "set",  "tuple",
                                                                "frozenset", "type", "str"};
  std::string folded = lower(s);
  if (containers.count(folded)) return folded;
  return s;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::TotalMatch: return "total_match";
    case Verdict::PartialMatch: return "partial_match";
    case Verdict::Mismatch: return "mismatch";
  }
  return "?";
}

Verdict classify_equivalence(const TypeSet& a, const TypeSet& b) {
  TypeSet na;
  TypeSet nb;
  for (const auto& t : a) na.insert(normalize_type_name(t));
  for (const auto& t : b) nb.insert(normalize_type_name(t));
  if (na == nb) return Verdict::TotalMatch;
  bool overlap = std::any_of(na.begin(), na.end(), [&](const std::string& t) { return nb.count(t) != 0; });
  return overlap ? Verdict::PartialMatch : Verdict::Mismatch;
}

ComparisonSummary compare_results(const KeyedTypeResult& a, const KeyedTypeResult& b) {
  ComparisonSummary s;
  for (const auto& [key, types] : a) {
    if (types.empty()) ++s.empty_a;
  }
  for (const auto& [key, types] : b) {
    if (types.empty()) ++s.empty_b;
  }
  for (const auto& [key, ta] : a) {
    if (ta.empty()) continue;
    auto it = b.find(key);
    if (it == b.end() || it->second.empty()) continue;
    Verdict v = classify_equivalence(ta, it->second);
    switch (v) {
      case Verdict::TotalMatch: ++s.total_match; break;
      case Verdict::PartialMatch: ++s.partial_match; break;
      case Verdict::Mismatch: ++s.mismatch; break;
    }
    s.details.push_back({key, ta, it->second, v});
  }
  return s;
}

Coverage coverage(const KeyedTypeResult& result) {
  Coverage c;
  c.total = result.size();
  c.non_empty = static_cast<std::size_t>(
      std::count_if(result.begin(), result.end(), [](const auto& kv) { return !kv.second.empty(); }));
  return c;
}

std::ostream& operator<<(std::ostream& os, const Coverage& c) {
  std::ostringstream pct;
  pct << std::fixed << std::setprecision(1) << c.percent();
  return os << "keys: " << c.total << ", non-empty: " << c.non_empty << " (" << pct.str() << "%)";
}

std::ostream& operator<<(std::ostream& os, const ComparisonSummary& s) {
  os << "shared non-empty keys: " << s.shared() << "\n"
     << "total_match: " << s.total_match << "\n"
     << "partial_match: " << s.partial_match << "\n"
     << "mismatch: " << s.mismatch << "\n"
     << "empty in A: " << s.empty_a << "\n"
     << "empty in B: " << s.empty_b << "\n";
  return os;
}

}  // namespace poto
