#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "ivc/common/error.hpp"

namespace ivc::bin {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian and written by memcpy");

template <typename T>
void put(std::ostream& os, const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    os.write(buf, sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::string& path) {
    static_assert(std::is_trivially_copyable_v<T>);
    char buf[sizeof(T)];
    if (!is.read(buf, sizeof(T))) throw IoError(path + ": unexpected end of file");
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
}

inline void put_string(std::ostream& os, const std::string& s) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& is, const std::string& path) {
    const auto n = get<std::uint32_t>(is, path);
    if (n > (1u << 20)) throw IoError(path + ": implausible string length");
    std::string s(n, '\0');
    if (n > 0 && !is.read(s.data(), n)) throw IoError(path + ": unexpected end of file");
    return s;
}

inline void put_magic(std::ostream& os, const char (&magic)[5]) { os.write(magic, 4); }

inline void expect_magic(std::istream& is, const char (&magic)[5], const std::string& path) {
    char buf[4];
    if (!is.read(buf, 4) || std::memcmp(buf, magic, 4) != 0)
        throw IoError(path + ": bad magic, expected \"" + std::string(magic, 4) + "\"");
}

}  // namespace ivc::bin
