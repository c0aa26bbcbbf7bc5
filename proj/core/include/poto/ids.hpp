#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>

namespace poto {

// Index-backed identity. Distinct tags keep variables, functions, classes and
// objects from being mixed up at compile time.
template <typename Tag>
class Id {
 public:
  static constexpr std::uint32_t kInvalid = std::numeric_limits<std::uint32_t>::max();

  constexpr Id() = default;
  constexpr explicit Id(std::uint32_t value) : value_(value) {}

  constexpr std::uint32_t value() const { return value_; }
  constexpr bool valid() const { return value_ != kInvalid; }
  constexpr explicit operator bool() const { return valid(); }

  friend constexpr auto operator<=>(Id, Id) = default;

 private:
  std::uint32_t value_ = kInvalid;
};

using VarId = Id<struct VarTag>;
using FunctionId = Id<struct FunctionTag>;
using ClassId = Id<struct ClassTag>;
using ObjectId = Id<struct ObjectTag>;

// Allocation site: the function containing the allocating expression plus a
// per-function ordinal assigned during translation.
struct Site {
  FunctionId function;
  std::uint32_t ordinal = 0;

  friend constexpr auto operator<=>(const Site&, const Site&) = default;
};

}  // namespace poto

template <typename Tag>
struct std::hash<poto::Id<Tag>> {
  std::size_t operator()(poto::Id<Tag> id) const noexcept { return std::hash<std::uint32_t>{}(id.value()); }
};
