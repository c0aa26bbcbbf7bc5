#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "poto/ids.hpp"

namespace poto {

using ObjectSet = std::set<ObjectId>;

// Pt: variables and (object, field) pairs to object sets. Sets only grow.
class PointsToGraph {
 public:
  using FieldKey = std::pair<ObjectId, std::string>;

  const ObjectSet& pt(VarId v) const;
  const ObjectSet& field(ObjectId o, std::string_view name) const;

  // add/add_field report insertion; the *_all forms return the count added.
  bool add(VarId v, ObjectId o);
  std::size_t add_all(VarId v, const ObjectSet& objects);
  bool add_field(ObjectId base, const std::string& name, ObjectId o);
  std::size_t add_field_all(ObjectId base, const std::string& name, const ObjectSet& objects);

  std::size_t var_count() const { return vars_.size(); }
  const std::map<FieldKey, ObjectSet, std::less<>>& fields() const { return fields_; }
  std::size_t edge_count() const;

  // True when every set of `earlier` is contained in the matching set here.
  bool includes(const PointsToGraph& earlier) const;

  friend bool operator==(const PointsToGraph& a, const PointsToGraph& b);

 private:
  std::vector<ObjectSet> vars_;
  std::map<FieldKey, ObjectSet, std::less<>> fields_;
};

}  // namespace poto
