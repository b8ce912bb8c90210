#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace syncleft::detail {

// Scientific notation, 12 significant digits. Fixed formatting keeps output
// byte-stable across runs.
inline std::string format_sci(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.11e", v);
    return buf;
}

// Decimal (positional) notation carrying >= 12 significant digits. The
// fractional precision adapts to the magnitude so small rates keep their
// digits without switching to scientific form.
inline std::string format_dec(double v) {
    if (v == 0.0) return "0.000000000000";
    const int exp10 = static_cast<int>(std::floor(std::log10(std::fabs(v))));
    int frac = 11 - exp10;
    if (frac < 0) frac = 0;
    if (frac > 36) frac = 36;
    char buf[80];
    std::snprintf(buf, sizeof(buf), "%.*f", frac, v);
    return buf;
}

}  // namespace syncleft::detail
