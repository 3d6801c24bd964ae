#pragma once

#include <string>

#include "fk/types.hpp"

namespace fk {

/// Shortest round-trip decimal form of v ("inf", "-inf", "nan" for
/// non-finite values).
std::string to_text(double v);

/// "(v0, v1, ...)" with round-trip components.
std::string to_text(const Vec& v);

}  // namespace fk
