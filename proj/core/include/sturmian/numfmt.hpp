#pragma once

#include <string>

namespace sturmian {

/// Decimal text with 17 significant digits (round-trips binary64).
std::string format_real(double x);

}  // namespace sturmian
