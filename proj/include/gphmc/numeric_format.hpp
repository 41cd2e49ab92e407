#pragma once

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gphmc {

// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double value) {
    char buffer[32];
    const auto res = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, res.ptr);
}

inline double parse_double(std::string_view text) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr == begin)
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    return value;
}

}  // namespace gphmc
