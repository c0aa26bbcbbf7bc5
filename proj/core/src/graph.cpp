#include "poto/graph.hpp"

#include <algorithm>

namespace poto {
namespace {
const ObjectSet kEmpty;
}

const ObjectSet& PointsToGraph::pt(VarId v) const {
  return v.value() < vars_.size() ? vars_[v.value()] : kEmpty;
}

const ObjectSet& PointsToGraph::field(ObjectId o, std::string_view name) const {
  auto it = fields_.find(std::make_pair(o, std::string(name)));
  return it == fields_.end() ? kEmpty : it->second;
}

bool PointsToGraph::add(VarId v, ObjectId o) {
  if (!v.valid() || !o.valid()) return false;
  if (v.value() >= vars_.size()) vars_.resize(v.value() + 1);
  return vars_[v.value()].insert(o).second;
}

std::size_t PointsToGraph::add_all(VarId v, const ObjectSet& objects) {
  if (objects.empty() || !v.valid()) return 0;
  if (v.value() >= vars_.size()) {
    // Growing the table would invalidate `objects` when it is one of our sets.
    ObjectSet copy = objects;
    vars_.resize(v.value() + 1);
    return add_all(v, copy);
  }
  if (&objects == &vars_[v.value()]) return 0;
  auto& dst = vars_[v.value()];
  std::size_t before = dst.size();
  dst.insert(objects.begin(), objects.end());
  return dst.size() - before;
}

bool PointsToGraph::add_field(ObjectId base, const std::string& name, ObjectId o) {
  return fields_[FieldKey(base, name)].insert(o).second;
}

std::size_t PointsToGraph::add_field_all(ObjectId base, const std::string& name,
                                         const ObjectSet& objects) {
  if (objects.empty()) return 0;
  ObjectSet copy = objects;  // the source may be this very field set
  auto& dst = fields_[FieldKey(base, name)];
  std::size_t before = dst.size();
  dst.insert(copy.begin(), copy.end());
  return dst.size() - before;
}

std::size_t PointsToGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& s : vars_) n += s.size();
  for (const auto& [k, s] : fields_) n += s.size();
  return n;
}

bool PointsToGraph::includes(const PointsToGraph& earlier) const {
  for (std::size_t i = 0; i < earlier.vars_.size(); ++i) {
    const ObjectSet& now = pt(VarId(static_cast<std::uint32_t>(i)));
    if (!std::includes(now.begin(), now.end(), earlier.vars_[i].begin(), earlier.vars_[i].end())) return false;
  }
  for (const auto& [key, set] : earlier.fields_) {
    const ObjectSet& now = field(key.first, key.second);
    if (!std::includes(now.begin(), now.end(), set.begin(), set.end())) return false;
  }
  return true;
}

bool operator==(const PointsToGraph& a, const PointsToGraph& b) {
  std::size_t n = std::max(a.vars_.size(), b.vars_.size());
  for (std::size_t i = 0; i < n; ++i) {
    VarId v(static_cast<std::uint32_t>(i));
    if (a.pt(v) != b.pt(v)) return false;
  }
  auto nonempty = [](const PointsToGraph& g) {
    std::map<PointsToGraph::FieldKey, ObjectSet, std::less<>> out;
    for (const auto& [k, s] : g.fields_) {
      if (!s.empty()) out.emplace(k, s);
    }
    return out;
  };
  return nonempty(a) == nonempty(b);
}

}  // namespace poto
