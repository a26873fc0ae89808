#pragma once

#include <cassert>
#include <type_traits>
#include <utility>
#include <variant>

namespace rangeforge {

// Minimal value-or-error carrier. Holds exactly one of T or E.
template <typename T, typename E>
class Result {
 public:
  static_assert(!std::is_same_v<T, E>, "Result<T, E> requires distinct types");

  Result(T value) : v_(std::in_place_index<0>, std::move(value)) {}  // NOLINT
  Result(E error) : v_(std::in_place_index<1>, std::move(error)) {}  // NOLINT

  bool has_value() const noexcept { return v_.index() == 0; }
  explicit operator bool() const noexcept { return has_value(); }

  T& value() & {
    assert(has_value());
    return std::get<0>(v_);
  }
  const T& value() const& {
    assert(has_value());
    return std::get<0>(v_);
  }
  T value() && {  // by value: safe in range-for over a temporary
    assert(has_value());
    return std::get<0>(std::move(v_));
  }

  E& error() & {
    assert(!has_value());
    return std::get<1>(v_);
  }
  const E& error() const& {
    assert(!has_value());
    return std::get<1>(v_);
  }

  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }
  T& operator*() & { return value(); }
  const T& operator*() const& { return value(); }

 private:
  std::variant<T, E> v_;
};

}  // namespace rangeforge
