#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace peck {

/// Shortest round-trip decimal form; NaN is written as "NA".
inline void append_number(std::string& out, double value)
{
    if (std::isnan(value)) {
        out += "NA";
        return;
    }
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    out.append(buf, res.ptr);
}

inline std::string format_number(double value)
{
    std::string s;
    append_number(s, value);
    return s;
}

} // namespace peck
