#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "poto/typeinfer.hpp"

namespace poto {

class ResultFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// "module::function::variable"
std::string encode_key(const Key& key);
// Throws ResultFormatError unless the text has exactly three parts.
Key decode_key(std::string_view text);

// JSON object, keys sorted, each value a sorted list of type names.
std::string serialize_results(const KeyedTypeResult& result);
// "Any" entries load as the empty set. Throws ResultFormatError.
KeyedTypeResult parse_results(std::string_view text);

void save_results(const KeyedTypeResult& result, const std::filesystem::path& path);
KeyedTypeResult load_results(const std::filesystem::path& path);

// Top-level type name: strips module prefixes of typing/builtins, parametric
// arguments and `<class '...'>`, and case-folds container names.
std::string normalize_type_name(std::string_view name);

enum class Verdict { TotalMatch, PartialMatch, Mismatch };
const char* verdict_name(Verdict v);

// Both sets must be non-empty.
Verdict classify_equivalence(const TypeSet& a, const TypeSet& b);

struct KeyComparison {
  Key key;
  TypeSet a;
  TypeSet b;
  Verdict verdict;
};

struct ComparisonSummary {
  std::size_t total_match = 0;
  std::size_t partial_match = 0;
  std::size_t mismatch = 0;
  std::size_t empty_a = 0;  // keys present in a with no type
  std::size_t empty_b = 0;
  std::vector<KeyComparison> details;  // shared non-empty keys, key order

  std::size_t shared() const { return total_match + partial_match + mismatch; }
};

ComparisonSummary compare_results(const KeyedTypeResult& a, const KeyedTypeResult& b);

struct Coverage {
  std::size_t total = 0;
  std::size_t non_empty = 0;
  double percent() const { return total == 0 ? 0.0 : 100.0 * static_cast<double>(non_empty) / total; }
};

Coverage coverage(const KeyedTypeResult& result);

std::ostream& operator<<(std::ostream& os, const Coverage& c);
std::ostream& operator<<(std::ostream& os, const ComparisonSummary& s);

}  // namespace poto
