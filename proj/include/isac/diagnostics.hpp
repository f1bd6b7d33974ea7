#pragma once

#include "isac/types.hpp"

#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace isac::diag {

/// Flat numeric event record; the sink decides formatting and destination.
using Fields = std::vector<std::pair<std::string, Scalar>>;
using Sink = std::function<void(std::string_view component, const Fields&)>;

inline Sink& sink() {
  static Sink s;
  return s;
}

inline bool enabled() { return static_cast<bool>(sink()); }

inline void emit(std::string_view component, const Fields& fields) {
  if (sink()) sink()(component, fields);
}

}  // namespace isac::diag
