// format.hpp — locale-independent number formatting for CSV/JSON output

#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace qworklab {

/// Shortest round-trip-safe text for a double (17 significant digits).
/// Negative zero is printed as 0 so outputs do not depend on rounding paths.
inline std::string fmt17(double x) {
    if (x == 0.0) return "0";
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace qworklab
