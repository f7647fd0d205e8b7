#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "sentinel/errors.hpp"

namespace sentinel::binio {

// All on-disk binary formats are little-endian regardless of host order.

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
    write_u32(os, static_cast<std::uint32_t>(v));
    write_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline void write_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(os, bits);
}

inline void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(os, bits);
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint32_t read_u32(std::istream& is, const std::string& what) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw DataError("unexpected end of file while reading " + what);
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

inline std::uint64_t read_u64(std::istream& is, const std::string& what) {
    std::uint64_t lo = read_u32(is, what);
    std::uint64_t hi = read_u32(is, what);
    return lo | hi << 32;
}

inline float read_f32(std::istream& is, const std::string& what) {
    std::uint32_t bits = read_u32(is, what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

inline double read_f64(std::istream& is, const std::string& what) {
    std::uint64_t bits = read_u64(is, what);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline std::string read_string(std::istream& is, const std::string& what) {
    std::uint32_t len = read_u32(is, what);
    std::string s(len, '\0');
    if (len > 0 && !is.read(s.data(), len))
        throw DataError("unexpected end of file while reading " + what);
    return s;
}

inline void expect_magic(std::istream& is, const char* magic, const std::string& what) {
    char buf[8];
    if (!is.read(buf, 8) || std::memcmp(buf, magic, 8) != 0)
        throw DataError(what + ": bad magic, not a recognized file");
}

} // namespace sentinel::binio
