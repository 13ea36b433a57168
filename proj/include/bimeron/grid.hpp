#pragma once

/**
 * @file grid.hpp
 * @brief Lattice domains and the S^2 / S^1 valued fields living on them.
 *
 * Two domains are supported:
 * - Disk: the unit disk, discretized as a masked square lattice over [-1,1]^2
 *   with n nodes per side (h = 2/(n-1)). Nodes with |x| <= 1 are active; active
 *   nodes that touch an inactive node, or sit within h of the unit circle, form
 *   the Dirichlet rim.
 * - Torus: the flat torus [0,1)^2 with n nodes per side (h = 1/n) and periodic
 *   neighbors.
 *
 * Fields store one value per lattice node (n*n entries). On the disk the
 * inactive nodes carry the rim value so that stencils touching the staircase
 * rim read the Dirichlet data.
 */

#include "bimeron/error.hpp"
#include "bimeron/vec.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace bimeron {

enum class DomainKind { Disk, Torus };

inline std::string to_string(DomainKind kind) { return kind == DomainKind::Disk ? "disk" : "torus"; }

inline DomainKind parse_domain_kind(const std::string& s) {
    if (s == "disk") return DomainKind::Disk;
    if (s == "torus") return DomainKind::Torus;
    throw Error("unknown domain kind '" + s + "' (expected disk or torus)");
}

class DomainGrid {
public:
    static constexpr int kMinNodes = 8;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    DomainGrid(DomainKind kind, int n) : kind_(kind), n_(n) {
        if (n < kMinNodes) throw Error("grid too coarse");
        h_ = kind == DomainKind::Disk ? 2.0 / (n - 1) : 1.0 / n;
        const std::size_t total = static_cast<std::size_t>(n) * n;
        active_.assign(total, 0);
        boundary_.assign(total, 0);
        if (kind == DomainKind::Torus) {
            active_.assign(total, 1);
            active_count_ = total;
            return;
        }
        // Integer lattice coordinates u = 2i - (n-1) make the masks exactly
        // symmetric under the dihedral group of the square.
        const long long m = n - 1;
        auto r2 = [&](int i, int j) {
            const long long u = 2LL * i - m;
            const long long v = 2LL * j - m;
            return u * u + v * v;
        };
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i)
                if (r2(i, j) <= m * m) {
                    active_[index(i, j)] = 1;
                    ++active_count_;
                }
        constexpr int di[4] = {1, -1, 0, 0};
        constexpr int dj[4] = {0, 0, 1, -1};
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const std::size_t k = index(i, j);
                if (!active_[k]) continue;
                // |x| >= 1 - h  <=>  u^2 + v^2 >= (n-3)^2
                bool rim = r2(i, j) >= (m - 2) * (m - 2);
                for (int d = 0; d < 4 && !rim; ++d) {
                    const std::size_t nb = neighbor(i, j, di[d], dj[d]);
                    rim = nb == npos || !active_[nb];
                }
                boundary_[k] = rim ? 1 : 0;
            }
    }

    DomainKind kind() const { return kind_; }
    int n() const { return n_; }
    double h() const { return h_; }
    std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
    std::size_t active_count() const { return active_count_; }

    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * n_ + i; }
    int col(std::size_t k) const { return static_cast<int>(k % n_); }
    int row(std::size_t k) const { return static_cast<int>(k / n_); }

    double x(int i) const { return kind_ == DomainKind::Disk ? double(2 * i - (n_ - 1)) / (n_ - 1) : i * h_; }
    double y(int j) const { return x(j); }
    Vec2 position(int i, int j) const { return {x(i), y(j)}; }
    Vec2 position(std::size_t k) const { return position(col(k), row(k)); }

    bool active(std::size_t k) const { return active_[k] != 0; }
    bool boundary(std::size_t k) const { return boundary_[k] != 0; }
    /// Active and not pinned: the nodes that carry unknowns.
    bool interior(std::size_t k) const { return active_[k] != 0 && boundary_[k] == 0; }

    /// Neighbor of (i,j) shifted by (di,dj); wraps on the torus, npos outside the disk's square.
    std::size_t neighbor(int i, int j, int di, int dj) const {
        int a = i + di;
        int b = j + dj;
        if (kind_ == DomainKind::Torus) {
            a = ((a % n_) + n_) % n_;
            b = ((b % n_) + n_) % n_;
        } else if (a < 0 || a >= n_ || b < 0 || b >= n_) {
            return npos;
        }
        return index(a, b);
    }

    /// Geometric center and inradius of the domain.
    Vec2 center() const { return kind_ == DomainKind::Disk ? Vec2{0.0, 0.0} : Vec2{0.5, 0.5}; }
    double domain_radius() const { return kind_ == DomainKind::Disk ? 1.0 : 0.5; }

    /// Displacement to - from; minimum image on the torus.
    Vec2 displacement(const Vec2& from, const Vec2& to) const {
        Vec2 d = to - from;
        if (kind_ == DomainKind::Torus) {
            d.x -= std::round(d.x);
            d.y -= std::round(d.y);
        }
        return d;
    }

    /// Visits every lattice edge (a, b) with both endpoints active, each unordered edge once.
    template <class F>
    void for_each_edge(F&& f) const {
        for (int j = 0; j < n_; ++j)
            for (int i = 0; i < n_; ++i) {
                const std::size_t a = index(i, j);
                if (!active_[a]) continue;
                const std::size_t bx = neighbor(i, j, 1, 0);
                if (bx != npos && active_[bx]) f(a, bx);
                const std::size_t by = neighbor(i, j, 0, 1);
                if (by != npos && active_[by]) f(a, by);
            }
    }

    /// Same for the second-neighbor pairs (i,j)-(i+2,j) and (i,j)-(i,j+2).
    template <class F>
    void for_each_long_edge(F&& f) const {
        for (int j = 0; j < n_; ++j)
            for (int i = 0; i < n_; ++i) {
                const std::size_t a = index(i, j);
                if (!active_[a]) continue;
                const std::size_t bx = neighbor(i, j, 2, 0);
                if (bx != npos && active_[bx]) f(a, bx);
                const std::size_t by = neighbor(i, j, 0, 2);
                if (by != npos && active_[by]) f(a, by);
            }
    }

    std::size_t edge_count() const {
        std::size_t count = 0;
        for_each_edge([&](std::size_t, std::size_t) { ++count; });
        return count;
    }

private:
    DomainKind kind_;
    int n_;
    double h_ = 0.0;
    std::vector<std::uint8_t> active_;
    std::vector<std::uint8_t> boundary_;
    std::size_t active_count_ = 0;
};

using GridPtr = std::shared_ptr<const DomainGrid>;

inline GridPtr make_grid(DomainKind kind, int n) { return std::make_shared<const DomainGrid>(kind, n); }

/// In-plane unit vector for a boundary phase angle.
inline Vec2 phase_vector(double phase) { return {std::cos(phase), std::sin(phase)}; }
inline Vec3 rim_value(double phase) { return {std::cos(phase), std::sin(phase), 0.0}; }

/**
 * Unit-vector field on a lattice. `V` is Vec3 for S^2-valued magnetizations
 * and Vec2 for S^1-valued (easy-plane) fields.
 */
template <class V>
class Field {
public:
    using value_type = V;

    Field() = default;
    Field(GridPtr grid, std::vector<V> values, std::optional<double> boundary_phase = std::nullopt)
        : grid_(std::move(grid)), values_(std::move(values)), boundary_phase_(boundary_phase) {
        if (!grid_) throw Error("field without grid");
        if (values_.size() != grid_->size()) throw Error("field size does not match grid");
    }

    const DomainGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::size_t size() const { return values_.size(); }

    const V& operator[](std::size_t k) const { return values_[k]; }
    V& operator[](std::size_t k) { return values_[k]; }
    const std::vector<V>& values() const { return values_; }
    std::vector<V>& values() { return values_; }

    /// Dirichlet phase c_phase for disk fields; empty when no rim value was imposed.
    std::optional<double> boundary_phase() const { return boundary_phase_; }
    void set_boundary_phase(std::optional<double> phase) { boundary_phase_ = phase; }

    /// Largest deviation of |m| from one over the active nodes.
    double max_norm_defect() const {
        double worst = 0.0;
        for (std::size_t k = 0; k < values_.size(); ++k)
            if (grid_->active(k)) worst = std::max(worst, std::abs(norm(values_[k]) - 1.0));
        return worst;
    }

    void renormalize() {
        for (auto& v : values_) {
            const double len = norm(v);
            if (len > 0.0) v *= 1.0 / len;
        }
    }

private:
    GridPtr grid_;
    std::vector<V> values_;
    std::optional<double> boundary_phase_;
};

using SphereField = Field<Vec3>;
using CircleField = Field<Vec2>;

using SphereMap = std::function<Vec3(const Vec2&)>;
using CircleMap = std::function<Vec2(const Vec2&)>;

namespace detail {

template <class V>
V normalized_or_throw(const V& v, bool must_be_defined) {
    const double len = norm(v);
    if (!(len > 0.0) || !std::isfinite(len)) {
        if (must_be_defined) throw Error("undefined direction at node");
        V fallback{};
        fallback.x = 1.0;
        return fallback;
    }
    return (1.0 / len) * v;
}

} // namespace detail

/**
 * Evaluates `map` on every lattice node and renormalizes. On the disk, when a
 * boundary phase is supplied, the rim and the inactive exterior are overwritten
 * with (cos c, sin c, 0).
 */
inline SphereField sample_field(const GridPtr& grid, const SphereMap& map,
                                std::optional<double> boundary_phase = std::nullopt) {
    std::vector<Vec3> values(grid->size());
    const bool pin = grid->kind() == DomainKind::Disk && boundary_phase.has_value();
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (pin && (grid->boundary(k) || !grid->active(k))) {
            values[k] = rim_value(*boundary_phase);
            continue;
        }
        values[k] = detail::normalized_or_throw(map(grid->position(k)), grid->active(k));
    }
    return SphereField(grid, std::move(values), pin ? boundary_phase : std::nullopt);
}

inline CircleField sample_circle_field(const GridPtr& grid, const CircleMap& map) {
    if (grid->kind() != DomainKind::Torus) throw Error("circle fields live on the torus");
    std::vector<Vec2> values(grid->size());
    for (std::size_t k = 0; k < values.size(); ++k)
        values[k] = detail::normalized_or_throw(map(grid->position(k)), true);
    return CircleField(grid, std::move(values));
}

/// In-plane (m1, m2) part of a sphere field, embedded with m3 = 0.
inline SphereField embed_circle_field(const CircleField& field) {
    std::vector<Vec3> values(field.size());
    for (std::size_t k = 0; k < values.size(); ++k) values[k] = {field[k].x, field[k].y, 0.0};
    return SphereField(field.grid_ptr(), std::move(values));
}

} // namespace bimeron
