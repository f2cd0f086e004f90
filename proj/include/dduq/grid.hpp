#pragma once

/**
 * @file grid.hpp
 * @brief Rectilinear vertex-centered meshes on box domains and their nested hierarchy.
 *
 * Vertices are numbered lexicographically, x fastest. The last axis is vertical
 * and points up; the "top face" is the face at hi[dim-1]. Each vertex owns the
 * box-shaped dual control volume spanned by the half-cells around it.
 */

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dduq/errors.hpp"

namespace dduq {

struct BoxDomain {
    int dim = 2;
    std::array<double, 3> lo{0.0, 0.0, 0.0};
    std::array<double, 3> hi{1.0, 1.0, 1.0};

    int vertical_axis() const noexcept { return dim - 1; }

    void validate() const {
        if (dim != 2 && dim != 3) throw ConfigError("domain: dim must be 2 or 3");
        for (int k = 0; k < dim; ++k)
            if (!(hi[k] > lo[k])) throw ConfigError("domain: hi must exceed lo on every axis");
    }

    double measure() const noexcept {
        double v = 1.0;
        for (int k = 0; k < dim; ++k) v *= hi[k] - lo[k];
        return v;
    }
};

/// Salt boundary classification. Pressure pins are tracked separately because
/// the pinned vertices also sit on the top face and carry a salt Dirichlet tag.
enum class BoundaryTag : std::uint8_t { Interior, NoFlux, DirichletFresh, DirichletBrine };

enum class PressurePinMode : std::uint8_t { TopPerimeter, TopFace };

/// Brine inflow region on the top face, expressed in the horizontal coordinates.
/// In 2D only the first horizontal coordinate is used (a disk becomes an interval).
struct DirichletPatch {
    struct Rectangle {
        std::array<double, 2> lo{0.0, 0.0};
        std::array<double, 2> hi{0.0, 0.0};
    };
    struct Disk {
        std::array<double, 2> center{0.0, 0.0};
        double radius = 0.0;
    };
    std::variant<Rectangle, Disk> shape = Rectangle{};

    bool contains(std::span<const double> horizontal, int n_horizontal, double tol) const {
        if (const auto* r = std::get_if<Rectangle>(&shape)) {
            for (int k = 0; k < n_horizontal; ++k)
                if (horizontal[k] < r->lo[k] - tol || horizontal[k] > r->hi[k] + tol) return false;
            return true;
        }
        const auto& d = std::get<Disk>(shape);
        double r2 = 0.0;
        for (int k = 0; k < n_horizontal; ++k) {
            const double dx = horizontal[k] - d.center[k];
            r2 += dx * dx;
        }
        return std::sqrt(r2) <= d.radius + tol;
    }

    /// Throws ConfigError when the patch does not lie within the top face.
    void validate(const BoxDomain& dom) const {
        const int nh = dom.dim - 1;
        if (const auto* r = std::get_if<Rectangle>(&shape)) {
            for (int k = 0; k < nh; ++k) {
                if (!(r->hi[k] >= r->lo[k]))
                    throw ConfigError("patch: rectangle hi must not be below lo");
                if (r->lo[k] < dom.lo[k] || r->hi[k] > dom.hi[k])
                    throw ConfigError("patch: rectangle leaves the top face");
            }
            return;
        }
        const auto& d = std::get<Disk>(shape);
        if (!(d.radius > 0.0)) throw ConfigError("patch: disk radius must be positive");
        for (int k = 0; k < nh; ++k)
            if (d.center[k] - d.radius < dom.lo[k] || d.center[k] + d.radius > dom.hi[k])
                throw ConfigError("patch: disk leaves the top face");
    }

    /// Central box of half the side length on each horizontal axis.
    static DirichletPatch central_half(const BoxDomain& dom) {
        Rectangle r;
        for (int k = 0; k < dom.dim - 1; ++k) {
            const double c = 0.5 * (dom.lo[k] + dom.hi[k]);
            const double q = 0.25 * (dom.hi[k] - dom.lo[k]);
            r.lo[k] = c - q;
            r.hi[k] = c + q;
        }
        return DirichletPatch{r};
    }
};

class StructuredGrid {
public:
    StructuredGrid() = default;

    StructuredGrid(BoxDomain domain, std::array<int, 3> n, int level)
        : domain_(domain), n_(n), level_(level) {
        domain_.validate();
        for (int k = 0; k < 3; ++k) {
            if (k >= domain_.dim) {
                n_[k] = 1;
                spacing_[k] = 0.0;
                continue;
            }
            if (n_[k] < 2) throw ConfigError("grid: need at least 2 vertices per axis");
            spacing_[k] = (domain_.hi[k] - domain_.lo[k]) / (n_[k] - 1);
        }
        tags_.assign(num_vertices(), BoundaryTag::Interior);
        pin_.assign(num_vertices(), 0);
        for (std::size_t v = 0; v < num_vertices(); ++v)
            if (on_boundary(v)) tags_[v] = BoundaryTag::NoFlux;
    }

    const BoxDomain& domain() const noexcept { return domain_; }
    int dim() const noexcept { return domain_.dim; }
    int level() const noexcept { return level_; }
    const std::array<int, 3>& n() const noexcept { return n_; }
    const std::array<double, 3>& spacing() const noexcept { return spacing_; }
    int vertical_axis() const noexcept { return domain_.dim - 1; }

    std::size_t num_vertices() const noexcept {
        return static_cast<std::size_t>(n_[0]) * n_[1] * n_[2];
    }

    std::size_t index(int i, int j, int k = 0) const noexcept {
        return static_cast<std::size_t>(i) + static_cast<std::size_t>(n_[0]) * (j + static_cast<std::size_t>(n_[1]) * k);
    }

    std::array<int, 3> ijk(std::size_t v) const noexcept {
        const int i = static_cast<int>(v % n_[0]);
        const std::size_t r = v / n_[0];
        return {i, static_cast<int>(r % n_[1]), static_cast<int>(r / n_[1])};
    }

    double coord(int axis, int i) const noexcept {
        // Last vertex snaps to hi so nested levels agree exactly at the far corner.
        if (i == n_[axis] - 1) return domain_.hi[axis];
        return domain_.lo[axis] + i * spacing_[axis];
    }

    std::array<double, 3> coords(std::size_t v) const noexcept {
        const auto id = ijk(v);
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (int k = 0; k < dim(); ++k) x[k] = coord(k, id[k]);
        return x;
    }

    bool on_boundary(std::size_t v) const noexcept {
        const auto id = ijk(v);
        for (int k = 0; k < dim(); ++k)
            if (id[k] == 0 || id[k] == n_[k] - 1) return true;
        return false;
    }

    bool on_top(std::size_t v) const noexcept {
        const int a = vertical_axis();
        return ijk(v)[a] == n_[a] - 1;
    }

    /// Extent of the dual cell of index i along an axis (half-cell at the ends).
    double dual_extent(int axis, int i) const noexcept {
        if (axis >= dim()) return 1.0;
        return (i == 0 || i == n_[axis] - 1) ? 0.5 * spacing_[axis] : spacing_[axis];
    }

    const std::vector<BoundaryTag>& tags() const noexcept { return tags_; }
    BoundaryTag tag(std::size_t v) const noexcept { return tags_[v]; }
    bool pressure_pinned(std::size_t v) const noexcept { return pin_[v] != 0; }
    const std::vector<std::uint8_t>& pressure_pins() const noexcept { return pin_; }

    void apply_patch(const DirichletPatch& patch, PressurePinMode pins) {
        patch.validate(domain_);
        const int nh = dim() - 1;
        const double tol = 1e-9 * (domain_.hi[0] - domain_.lo[0]);
        for (std::size_t v = 0; v < num_vertices(); ++v) {
            if (!on_top(v)) continue;
            const auto x = coords(v);
            const std::array<double, 2> hz{x[0], nh > 1 ? x[1] : 0.0};
            tags_[v] = patch.contains(hz, nh, tol) ? BoundaryTag::DirichletBrine
                                                   : BoundaryTag::DirichletFresh;
            bool pin = pins == PressurePinMode::TopFace;
            if (!pin) {
                const auto id = ijk(v);
                for (int k = 0; k < nh; ++k)
                    if (id[k] == 0 || id[k] == n_[k] - 1) pin = true;
            }
            pin_[v] = pin ? 1 : 0;
        }
    }

    /// Compact descriptor used in file headers.
    std::string descriptor() const {
        std::string s = "dim=" + std::to_string(dim()) + " n=";
        for (int k = 0; k < dim(); ++k) s += (k ? "x" : "") + std::to_string(n_[k]);
        return s;
    }

private:
    BoxDomain domain_{};
    std::array<int, 3> n_{1, 1, 1};
    std::array<double, 3> spacing_{0.0, 0.0, 0.0};
    int level_ = 0;
    std::vector<BoundaryTag> tags_;
    std::vector<std::uint8_t> pin_;
};

inline double dual_volume(const StructuredGrid& g, std::size_t v) {
    const auto id = g.ijk(v);
    double vol = 1.0;
    for (int k = 0; k < g.dim(); ++k) vol *= g.dual_extent(k, id[k]);
    return vol;
}

inline std::vector<double> dual_volumes(const StructuredGrid& g) {
    std::vector<double> out(g.num_vertices());
    for (std::size_t v = 0; v < out.size(); ++v) out[v] = dual_volume(g, v);
    return out;
}

/// Nested hierarchy, finest grid first. Level indices count up from the coarsest (0).
using GridHierarchy = std::vector<StructuredGrid>;

inline GridHierarchy build_grid(const BoxDomain& domain, std::array<int, 3> coarse_n, int levels,
                                const std::optional<DirichletPatch>& patch,
                                PressurePinMode pins = PressurePinMode::TopPerimeter) {
    domain.validate();
    if (levels < 1) throw ConfigError("grid: levels must be >= 1");
    for (int k = 0; k < domain.dim; ++k)
        if (coarse_n[k] < 2) throw ConfigError("grid: coarse_n must be >= 2 on every axis");
    if (patch) patch->validate(domain);

    GridHierarchy h;
    h.reserve(levels);
    for (int l = levels - 1; l >= 0; --l) {
        std::array<int, 3> n{1, 1, 1};
        for (int k = 0; k < domain.dim; ++k) n[k] = (coarse_n[k] - 1) * (1 << l) + 1;
        StructuredGrid g(domain, n, l);
        if (patch) g.apply_patch(*patch, pins);
        h.push_back(std::move(g));
    }
    return h;
}

namespace detail {

struct AxisStencil {
    int idx[2];
    double w[2];
    int count;
};

inline AxisStencil coarse_parents(int fine_i) {
    if (fine_i % 2 == 0) return {{fine_i / 2, 0}, {1.0, 0.0}, 1};
    return {{fine_i / 2, fine_i / 2 + 1}, {0.5, 0.5}, 2};
}

inline void check_pair(const StructuredGrid& fine, const StructuredGrid& coarse) {
    if (fine.dim() != coarse.dim()) throw UsageError("transfer: dimension mismatch");
    for (int k = 0; k < fine.dim(); ++k)
        if (fine.n()[k] != 2 * (coarse.n()[k] - 1) + 1)
            throw UsageError("transfer: grids are not consecutive hierarchy levels");
}

/// Visits the (coarse vertex, weight) pairs of the multilinear interpolant at a fine vertex.
template <class F>
void for_each_parent(const StructuredGrid& fine, const StructuredGrid& coarse, std::size_t fv, F&& f) {
    const auto id = fine.ijk(fv);
    AxisStencil s[3];
    for (int k = 0; k < 3; ++k) s[k] = k < fine.dim() ? coarse_parents(id[k]) : AxisStencil{{0, 0}, {1.0, 0.0}, 1};
    for (int c = 0; c < s[2].count; ++c)
        for (int b = 0; b < s[1].count; ++b)
            for (int a = 0; a < s[0].count; ++a)
                f(coarse.index(s[0].idx[a], s[1].idx[b], s[2].idx[c]), s[0].w[a] * s[1].w[b] * s[2].w[c]);
}

}  // namespace detail

/// Multilinear interpolation from the coarse level onto the next finer one.
/// Fields may be interleaved with `components` values per vertex.
inline std::vector<double> prolong(const StructuredGrid& fine, const StructuredGrid& coarse,
                                   std::span<const double> coarse_field, int components = 1) {
    detail::check_pair(fine, coarse);
    if (coarse_field.size() != coarse.num_vertices() * components)
        throw UsageError("prolong: field length does not match coarse grid");
    std::vector<double> out(fine.num_vertices() * components, 0.0);
    for (std::size_t fv = 0; fv < fine.num_vertices(); ++fv)
        detail::for_each_parent(fine, coarse, fv, [&](std::size_t cv, double w) {
            for (int q = 0; q < components; ++q) out[fv * components + q] += w * coarse_field[cv * components + q];
        });
    return out;
}

/// Plain transpose of prolongation. Maps control-volume-integrated quantities
/// (finite-volume residuals) to the coarse level.
inline std::vector<double> prolong_transpose(const StructuredGrid& fine, const StructuredGrid& coarse,
                                             std::span<const double> fine_field, int components = 1) {
    detail::check_pair(fine, coarse);
    if (fine_field.size() != fine.num_vertices() * components)
        throw UsageError("restrict: field length does not match fine grid");
    std::vector<double> out(coarse.num_vertices() * components, 0.0);
    for (std::size_t fv = 0; fv < fine.num_vertices(); ++fv)
        detail::for_each_parent(fine, coarse, fv, [&](std::size_t cv, double w) {
            for (int q = 0; q < components; ++q) out[cv * components + q] += w * fine_field[fv * components + q];
        });
    return out;
}

/// Full weighting: V_c^{-1} P^T V_f. Preserves constants on every vertex, including
/// the boundary, and is the adjoint of prolong in the dual-volume inner products.
inline std::vector<double> restrict_field(const StructuredGrid& fine, const StructuredGrid& coarse,
                                          std::span<const double> fine_field, int components = 1) {
    detail::check_pair(fine, coarse);
    if (fine_field.size() != fine.num_vertices() * components)
        throw UsageError("restrict: field length does not match fine grid");
    std::vector<double> weighted(fine_field.begin(), fine_field.end());
    for (std::size_t fv = 0; fv < fine.num_vertices(); ++fv) {
        const double vol = dual_volume(fine, fv);
        for (int q = 0; q < components; ++q) weighted[fv * components + q] *= vol;
    }
    auto out = prolong_transpose(fine, coarse, weighted, components);
    for (std::size_t cv = 0; cv < coarse.num_vertices(); ++cv) {
        const double vol = dual_volume(coarse, cv);
        for (int q = 0; q < components; ++q) out[cv * components + q] /= vol;
    }
    return out;
}

/// Pointwise injection onto the coincident coarse vertices.
inline std::vector<double> inject(const StructuredGrid& fine, const StructuredGrid& coarse,
                                  std::span<const double> fine_field, int components = 1) {
    detail::check_pair(fine, coarse);
    if (fine_field.size() != fine.num_vertices() * components)
        throw UsageError("inject: field length does not match fine grid");
    std::vector<double> out(coarse.num_vertices() * components);
    for (std::size_t cv = 0; cv < coarse.num_vertices(); ++cv) {
        const auto id = coarse.ijk(cv);
        const std::size_t fv = fine.index(2 * id[0], fine.dim() > 1 ? 2 * id[1] : 0, fine.dim() > 2 ? 2 * id[2] : 0);
        for (int q = 0; q < components; ++q) out[cv * components + q] = fine_field[fv * components + q];
    }
    return out;
}

}  // namespace dduq
