#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "boxgraph/error.hpp"

// Little-endian primitives shared by the feature cache and model formats.
namespace boxgraph::binary {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw DataError("unexpected end of binary file");
    return value;
}

inline void put_string(std::ostream& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in, std::uint32_t max_len = 1u << 24) {
    const auto n = get<std::uint32_t>(in);
    if (n > max_len) throw DataError("string length out of range in binary file");
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw DataError("unexpected end of binary file");
    return s;
}

inline void expect_magic(std::istream& in, const char (&magic)[5], const std::string& what) {
    char buf[4] = {};
    in.read(buf, 4);
    if (!in || std::memcmp(buf, magic, 4) != 0) throw DataError(what + ": bad magic, expected " + magic);
}

}  // namespace boxgraph::binary
