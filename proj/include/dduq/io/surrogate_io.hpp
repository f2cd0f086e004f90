#pragma once

// Surrogate container ("DDUQ-GPC 1"). Header: M, p, truncation rule, index
// list, snapshot times [s], field size, grid (dim, lo, hi, n). Payload: for
// each snapshot, the coefficient fields in index-set order.

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "dduq/gpc.hpp"
#include "dduq/grid.hpp"
#include "dduq/io/container.hpp"

namespace dduq::io {

inline constexpr const char* kSurrogateMagic = "DDUQ-GPC 1";

struct StoredSurrogate {
    GpcSurrogate surrogate;
    BoxDomain domain;
    std::array<int, 3> n{1, 1, 1};
};

inline void save_surrogate(const std::filesystem::path& path, const GpcSurrogate& s, const StructuredGrid& grid) {
    json h;
    h["M"] = s.index_set.dim;
    h["p"] = s.index_set.order;
    h["truncation"] = to_string(s.index_set.rule);
    h["indices"] = s.index_set.indices;
    h["snapshot_times_s"] = s.snapshot_times;
    h["field_size"] = s.field_size;
    h["grid"] = {{"dim", grid.dim()}, {"lo", grid.domain().lo}, {"hi", grid.domain().hi}, {"n", grid.n()}};
    std::vector<double> payload;
    payload.reserve(s.num_times() * s.index_set.size() * s.field_size);
    for (const auto& per_time : s.coeffs)
        for (const auto& f : per_time) payload.insert(payload.end(), f.begin(), f.end());
    write_container(path, kSurrogateMagic, std::move(h), payload);
}

inline StoredSurrogate load_surrogate(const std::filesystem::path& path) {
    const auto c = read_container(path, kSurrogateMagic);
    StoredSurrogate out;
    auto& s = out.surrogate;
    try {
        const auto& h = c.header;
        s.index_set.dim = h.at("M").get<int>();
        s.index_set.order = h.at("p").get<int>();
        s.index_set.rule = truncation_from_string(h.at("truncation").get<std::string>());
        s.index_set.indices = h.at("indices").get<std::vector<MultiIndex>>();
        s.snapshot_times = h.at("snapshot_times_s").get<std::vector<double>>();
        s.field_size = h.at("field_size").get<std::size_t>();
        const auto& g = h.at("grid");
        out.domain.dim = g.at("dim").get<int>();
        out.domain.lo = g.at("lo").get<std::array<double, 3>>();
        out.domain.hi = g.at("hi").get<std::array<double, 3>>();
        out.n = g.at("n").get<std::array<int, 3>>();
    } catch (const json::exception& e) {
        throw ConfigError("input: malformed surrogate header in " + path.string() + ": " + e.what());
    }
    for (const auto& b : s.index_set.indices) {
        if (static_cast<int>(b.size()) != s.index_set.dim) throw ConfigError("input: multi-index of wrong length");
        s.norms.push_back(basis_norm(b));
    }
    const std::size_t nk = s.index_set.size();
    if (c.payload.size() != s.num_times() * nk * s.field_size)
        throw ConfigError("input: surrogate payload size mismatch in " + path.string());
    auto it = c.payload.begin();
    s.coeffs.assign(s.num_times(), std::vector<std::vector<double>>(nk));
    for (auto& per_time : s.coeffs)
        for (auto& f : per_time) {
            f.assign(it, it + static_cast<std::ptrdiff_t>(s.field_size));
            it += static_cast<std::ptrdiff_t>(s.field_size);
        }
    return out;
}

}  // namespace dduq::io
