#pragma once

// Self-describing binary container shared by scenario and surrogate files:
//
//   line 1: magic string, e.g. "DDUQ-SCENARIO 1"
//   line 2: one-line JSON header
//   rest:   float64 payload, little-endian, length given by header["payload_doubles"]
//
// Writes go to "<path>.tmp" and are renamed into place.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dduq/errors.hpp"

namespace dduq::io {

using json = nlohmann::json;

namespace detail {

inline std::uint64_t to_le(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::little) return v;
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
}

}  // namespace detail

struct Container {
    json header;
    std::vector<double> payload;
};

inline void write_container(const std::filesystem::path& path, const std::string& magic, json header,
                            const std::vector<double>& payload) {
    header["payload_doubles"] = payload.size();
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw ConfigError("output: cannot open " + tmp.string());
        os << magic << '\n' << header.dump() << '\n';
        for (double d : payload) {
            const std::uint64_t le = detail::to_le(std::bit_cast<std::uint64_t>(d));
            os.write(reinterpret_cast<const char*>(&le), sizeof le);
        }
        os.flush();
        if (!os) throw ConfigError("output: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline Container read_container(const std::filesystem::path& path, const std::string& magic) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("input: cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != magic)
        throw ConfigError("input: " + path.string() + " is not a '" + magic + "' file");
    if (!std::getline(is, line)) throw ConfigError("input: " + path.string() + " has no header");
    Container c;
    try {
        c.header = json::parse(line);
    } catch (const json::exception& e) {
        throw ConfigError("input: bad header in " + path.string() + ": " + e.what());
    }
    const auto n = c.header.value("payload_doubles", std::size_t{0});
    c.payload.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t le = 0;
        if (!is.read(reinterpret_cast<char*>(&le), sizeof le))
            throw ConfigError("input: truncated payload in " + path.string());
        c.payload[i] = std::bit_cast<double>(detail::to_le(le));
    }
    return c;
}

/// 64-bit FNV-1a digest rendered as 16 hex digits.
inline std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[i] = digits[h & 0xf];
    return out;
}

}  // namespace dduq::io
