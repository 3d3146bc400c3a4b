#include "evomas/rng.hpp"

#include "evomas/errors.hpp"

#include <cstdio>

namespace evomas {

std::string to_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t from_hex(std::string_view s) {
    if (s.empty() || s.size() > 16) throw ValidationError("bad hex literal");
    std::uint64_t v = 0;
    for (char c : s) {
        v <<= 4;
        if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
        else if (c >= 'A' && c <= 'F') v |= static_cast<std::uint64_t>(c - 'A' + 10);
        else throw ValidationError("bad hex digit");
    }
    return v;
}

} // namespace evomas
