#include "ghostmap/format.hpp"

#include <charconv>
#include <stdexcept>

namespace ghostmap {

std::string fixed(double value, int digits) {
    if (value == 0.0) value = 0.0;  // drop the sign of -0
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, digits);
    if (res.ec != std::errc{}) throw std::runtime_error("number too long to format");
    return std::string(buf, res.ptr);
}

}  // namespace ghostmap
