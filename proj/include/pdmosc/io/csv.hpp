#ifndef PDMOSC_IO_CSV_HPP
#define PDMOSC_IO_CSV_HPP

#include <charconv>
#include <string>

namespace pdmosc::io {

/// Locale-independent float formatting with 17 significant digits (enough to
/// round-trip any double bit pattern), used for every CSV cell so repeated
/// runs are byte-identical.
inline std::string fmt17(double v) {
    char buf[48];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

}  // namespace pdmosc::io

#endif  // PDMOSC_IO_CSV_HPP
