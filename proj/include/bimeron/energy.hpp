#pragma once

/**
 * @file energy.hpp
 * @brief Discrete chiral easy-plane energies, exact gradients and diagnostics.
 *
 * Discrete S^2 energy on a lattice of spacing h:
 *
 *     exchange   = 1/2 sum (1 - 4 beta) |m_b - m_a|^2 over nearest pairs
 *                + 1/2 sum beta |m_b - m_a|^2 over pairs two sites apart
 *     dmi        = (lambda/eps) h^2 sum_{k in K} D_k m3_k,   D_k = centered divergence
 *     anisotropy = h^2/(2 eps^2) sum_{active} m3^2
 *
 * K is the set of free (non-rim) nodes on the disk and all nodes on the torus.
 * beta = kExchangeBeta = -1/6 (an over-improved stencil: its O(h^2) error has
 * the opposite sign to the nearest-neighbor one, so lattice solitons do not
 * shrink through the grid). Gradients are the exact derivatives of these sums, projected onto the
 * tangent spaces. Dividing them by h^2 gives the nodal Euler-Lagrange operator
 * -Lap m + (lambda/eps)(-grad m3, div m) + (m3/eps^2) e3.
 */

#include "bimeron/error.hpp"
#include "bimeron/grid.hpp"
#include "bimeron/vec.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace bimeron {

/// Weight of the two-site exchange pairs.
inline constexpr double kExchangeBeta = -1.0 / 6.0;

enum class Functional { FullS2, EasyPlaneS1 };

struct EnergyParams {
    double lambda = 0.0;
    double eps = 1.0;
    Functional functional = Functional::FullS2;
    std::optional<DomainKind> domain;  ///< when set, must match the field's grid

    void validate() const {
        if (!(std::abs(lambda) < 1.0)) throw Error("loss of coercivity");
        if (functional == Functional::FullS2 && !(eps > 0.0 && std::isfinite(eps)))
            throw Error("invalid parameter: eps must be positive and finite");
    }
};

struct EnergyBreakdown {
    double exchange = 0.0;
    double dmi = 0.0;
    double anisotropy = 0.0;
    double total = 0.0;
    int degree = 0;
    double degree_real = 0.0;
    bool degree_defined = true;  ///< false when a lattice triangle was exceptional
    double grad_sup = 0.0;       ///< max_i |P grad_i| / h^2 over free nodes
};

struct DegreeResult {
    int degree = 0;
    double real = 0.0;
};

namespace detail {

constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};

/// Free nodes: where the DMI stencil is evaluated and gradients are nonzero.
inline bool free_node(const DomainGrid& g, std::size_t k) { return g.interior(k); }

inline void check_s2(const SphereField& field, const EnergyParams& p) {
    if (p.functional != Functional::FullS2) throw Error("domain mismatch");
    if (p.domain && *p.domain != field.grid().kind()) throw Error("domain mismatch");
    p.validate();
}

/// Centered-difference divergence times 2h: m1(k+x) - m1(k-x) + m2(k+y) - m2(k-y).
template <class V>
double divergence_2h(const DomainGrid& g, const std::vector<V>& m, int i, int j) {
    const std::size_t xp = g.neighbor(i, j, 1, 0);
    const std::size_t xm = g.neighbor(i, j, -1, 0);
    const std::size_t yp = g.neighbor(i, j, 0, 1);
    const std::size_t ym = g.neighbor(i, j, 0, -1);
    return m[xp].x - m[xm].x + m[yp].y - m[ym].y;
}

/**
 * Exchange 1/2 sum [(1 - 4 beta) |m_b - m_a|^2 over nearest pairs
 * + beta |m_b - m_a|^2 over second-neighbor pairs]; adds its gradient to `grad`.
 */
template <class V>
double exchange_kernel(const DomainGrid& g, const std::vector<V>& m, std::vector<V>* grad) {
    constexpr double beta = kExchangeBeta;
    double e = 0.0;
    auto pair = [&](double w) {
        return [&, w](std::size_t a, std::size_t b) {
            const V d = m[b] - m[a];
            e += 0.5 * w * norm2(d);
            if (grad) {
                (*grad)[a] -= w * d;
                (*grad)[b] += w * d;
            }
        };
    };
    g.for_each_edge(pair(1.0 - 4.0 * beta));
    g.for_each_long_edge(pair(beta));
    return e;
}

struct S2Terms {
    double exchange = 0.0;
    double dmi = 0.0;
    double anisotropy = 0.0;
};

/**
 * Energy terms and, if `grad` is non-null, the unprojected gradient of their
 * sum (zero outside the free nodes).
 */
inline S2Terms evaluate_s2(const SphereField& field, double lambda, double eps, std::vector<Vec3>* grad) {
    const DomainGrid& g = field.grid();
    const auto& m = field.values();
    const double h = g.h();
    S2Terms t;
    if (grad) grad->assign(g.size(), Vec3{});

    t.exchange = exchange_kernel(g, m, grad);

    const double dmi_scale = lambda * h / (2.0 * eps);
    const double an_scale = h * h / (2.0 * eps * eps);
    const int n = g.n();
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const std::size_t k = g.index(i, j);
            if (!g.active(k)) continue;
            t.anisotropy += an_scale * m[k].z * m[k].z;
            if (grad) (*grad)[k].z += 2.0 * an_scale * m[k].z;
            const bool in_k = g.kind() == DomainKind::Torus || free_node(g, k);
            if (!in_k || lambda == 0.0) continue;
            const double div = divergence_2h(g, m, i, j);
            t.dmi += dmi_scale * div * m[k].z;
            if (grad) {
                (*grad)[k].z += dmi_scale * div;
                const double c = dmi_scale * m[k].z;
                (*grad)[g.neighbor(i, j, 1, 0)].x += c;
                (*grad)[g.neighbor(i, j, -1, 0)].x -= c;
                (*grad)[g.neighbor(i, j, 0, 1)].y += c;
                (*grad)[g.neighbor(i, j, 0, -1)].y -= c;
            }
        }
    return t;
}

inline void project_and_pin(const SphereField& field, std::vector<Vec3>& grad) {
    const DomainGrid& g = field.grid();
    for (std::size_t k = 0; k < grad.size(); ++k) {
        if (g.kind() == DomainKind::Torus || free_node(g, k)) grad[k] = tangent_part(field[k], grad[k]);
        else grad[k] = Vec3{};
    }
}

inline double sup_norm(const std::vector<Vec3>& v) {
    double s = 0.0;
    for (const auto& x : v) s = std::max(s, norm(x));
    return s;
}

/// Solid angle of the spherical triangle (A,B,C), signed by orientation.
inline double solid_angle(const Vec3& A, const Vec3& B, const Vec3& C) {
    const double den = 1.0 + dot(A, B) + dot(B, C) + dot(C, A);
    if (den <= 1e-12) throw Error("exceptional configuration");
    return 2.0 * std::atan2(dot(A, cross(B, C)), den);
}

} // namespace detail

/**
 * Lattice topological charge: the signed solid angles of the two triangles
 * (i,j)(i+1,j)(i+1,j+1) and (i,j)(i+1,j+1)(i,j+1) of every cell, summed and
 * divided by 4 pi. On the disk only cells with four active corners count; with
 * constant rim data the rest of the sphere cover is trivial.
 */
inline DegreeResult lattice_degree(const SphereField& field) {
    const DomainGrid& g = field.grid();
    const auto& m = field.values();
    const int n = g.n();
    const int cells = g.kind() == DomainKind::Torus ? n : n - 1;
    double total = 0.0;
    for (int j = 0; j < cells; ++j)
        for (int i = 0; i < cells; ++i) {
            const std::size_t a = g.index(i, j);
            const std::size_t b = g.neighbor(i, j, 1, 0);
            const std::size_t c = g.neighbor(i, j, 1, 1);
            const std::size_t d = g.neighbor(i, j, 0, 1);
            if (!(g.active(a) && g.active(b) && g.active(c) && g.active(d))) continue;
            total += detail::solid_angle(m[a], m[b], m[c]) + detail::solid_angle(m[a], m[c], m[d]);
        }
    const double q = total / (4.0 * std::numbers::pi);
    return {static_cast<int>(std::lround(q)), q};
}

/// Projected gradient of energy_s2, zero on rim nodes.
inline std::vector<Vec3> grad_s2(const SphereField& field, const EnergyParams& p) {
    detail::check_s2(field, p);
    std::vector<Vec3> grad;
    detail::evaluate_s2(field, p.lambda, p.eps, &grad);
    detail::project_and_pin(field, grad);
    return grad;
}

inline EnergyBreakdown energy_s2(const SphereField& field, const EnergyParams& p) {
    detail::check_s2(field, p);
    std::vector<Vec3> grad;
    const auto t = detail::evaluate_s2(field, p.lambda, p.eps, &grad);
    detail::project_and_pin(field, grad);
    EnergyBreakdown e;
    e.exchange = t.exchange;
    e.dmi = t.dmi;
    e.anisotropy = t.anisotropy;
    e.total = t.exchange + t.dmi + t.anisotropy;
    const double h = field.grid().h();
    e.grad_sup = detail::sup_norm(grad) / (h * h);
    try {
        const auto q = lattice_degree(field);
        e.degree = q.degree;
        e.degree_real = q.real;
    } catch (const Error&) {
        e.degree_defined = false;
        e.degree_real = std::numeric_limits<double>::quiet_NaN();
    }
    return e;
}

struct Residual {
    std::vector<double> nodal;  ///< |r| per node, zero off the free nodes
    double l2 = 0.0;            ///< sqrt(h^2 sum |r|^2)
    double sup = 0.0;
};

namespace detail {

inline Residual residual_from_gradient(const DomainGrid& g, const std::vector<Vec3>& grad) {
    Residual r;
    r.nodal.assign(g.size(), 0.0);
    const double h2 = g.h() * g.h();
    double acc = 0.0;
    for (std::size_t k = 0; k < grad.size(); ++k) {
        const double v = norm(grad[k]) / h2;
        r.nodal[k] = v;
        acc += v * v;
        r.sup = std::max(r.sup, v);
    }
    r.l2 = std::sqrt(h2 * acc);
    return r;
}

} // namespace detail

/// Tangential part of the discrete Euler-Lagrange operator at the free nodes.
inline Residual el_residual(const SphereField& field, const EnergyParams& p) {
    return detail::residual_from_gradient(field.grid(), grad_s2(field, p));
}

/// Harmonic-map tension residual (lambda = 0, eps = infinity): -(Lap_h m)^tangent.
inline Residual tension_residual(const SphereField& field) {
    std::vector<Vec3> grad;
    detail::evaluate_s2(field, 0.0, std::numeric_limits<double>::infinity(), &grad);
    detail::project_and_pin(field, grad);
    return detail::residual_from_gradient(field.grid(), grad);
}

struct S1Energy {
    double energy = 0.0;
    double exchange = 0.0;        ///< 1/2 int |grad m|^2
    double divergence = 0.0;      ///< -lambda^2/2 int (div m)^2
    std::vector<Vec2> gradient;   ///< tangential, per node
    double dirichlet() const { return 2.0 * exchange; }
};

/**
 * Easy-plane energy 1/2 int (|grad m|^2 - lambda^2 (div m)^2) of a torus
 * circle field with its exact projected gradient.
 */
inline S1Energy energy_s1(const CircleField& field, double lambda) {
    const DomainGrid& g = field.grid();
    if (g.kind() != DomainKind::Torus) throw Error("circle fields live on the torus");
    if (!(std::abs(lambda) < 1.0)) throw Error("loss of coercivity");
    const auto& m = field.values();
    const double h = g.h();
    const int n = g.n();
    S1Energy out;
    out.gradient.assign(g.size(), Vec2{});
    auto& grad = out.gradient;

    out.exchange = detail::exchange_kernel(g, m, &grad);

    if (lambda != 0.0) {
        std::vector<double> div(g.size());
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) div[g.index(i, j)] = detail::divergence_2h(g, m, i, j) / (2.0 * h);
        const double l2 = lambda * lambda;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const std::size_t k = g.index(i, j);
                out.divergence -= 0.5 * l2 * h * h * div[k] * div[k];
                grad[k].x -= 0.5 * l2 * h * (div[g.neighbor(i, j, -1, 0)] - div[g.neighbor(i, j, 1, 0)]);
                grad[k].y -= 0.5 * l2 * h * (div[g.neighbor(i, j, 0, -1)] - div[g.neighbor(i, j, 0, 1)]);
            }
    }
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] = tangent_part(m[k], grad[k]);
    out.energy = out.exchange + out.divergence;
    return out;
}

// ---------------------------------------------------------------------------
// Pohozaev diagnostics

namespace detail {

/// Bilinear interpolation of nodal data at a physical point.
template <class T>
T interpolate(const DomainGrid& g, const std::vector<T>& data, const Vec2& z) {
    const double h = g.h();
    double u, v;
    if (g.kind() == DomainKind::Disk) {
        u = (z.x + 1.0) / h;
        v = (z.y + 1.0) / h;
    } else {
        u = z.x / h;
        v = z.y / h;
    }
    const double fu = std::floor(u);
    const double fv = std::floor(v);
    const double s = u - fu;
    const double t = v - fv;
    const int i = static_cast<int>(fu);
    const int j = static_cast<int>(fv);
    auto at = [&](int di, int dj) {
        const std::size_t k = g.neighbor(i, j, di, dj);
        if (k == DomainGrid::npos) throw Error("circle out of range");
        return data[k];
    };
    return (1.0 - t) * ((1.0 - s) * at(0, 0) + s * at(1, 0)) + t * ((1.0 - s) * at(0, 1) + s * at(1, 1));
}

/// Centered-difference nodal gradient (d/dx, d/dy) of a field; zero where a neighbor is missing.
template <class V>
void nodal_gradient(const DomainGrid& g, const std::vector<V>& m, std::vector<V>& dx, std::vector<V>& dy) {
    dx.assign(g.size(), V{});
    dy.assign(g.size(), V{});
    const double inv = 1.0 / (2.0 * g.h());
    const int n = g.n();
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const std::size_t k = g.index(i, j);
            const std::size_t xp = g.neighbor(i, j, 1, 0), xm = g.neighbor(i, j, -1, 0);
            const std::size_t yp = g.neighbor(i, j, 0, 1), ym = g.neighbor(i, j, 0, -1);
            if (xp != DomainGrid::npos && xm != DomainGrid::npos) dx[k] = inv * (m[xp] - m[xm]);
            if (yp != DomainGrid::npos && ym != DomainGrid::npos) dy[k] = inv * (m[yp] - m[ym]);
        }
}

inline int circle_samples(const DomainGrid& g, double radius) {
    return std::max(64, 8 * static_cast<int>(std::ceil(2.0 * std::numbers::pi * radius / g.h())));
}

} // namespace detail

/**
 * Rim Pohozaev residual on the unit disk:
 *
 *     | int (m3/eps)^2 + (lambda/eps) int (div m) m3
 *       - 1/2 oint (|d_tau m|^2 - |d_nu m|^2 + (m3/eps)^2) - (lambda/eps) oint m3 (d_tau m . tau) |
 *
 * which vanishes for critical points; at lambda = 0 it is the classical
 * identity. Bulk terms reuse the discrete energy; the rim value is the
 * Dirichlet data and d_nu m uses the one-sided stencil
 * (3 m(1) - 4 m(1-h) + m(1-2h)) / 2h with bilinear interpolation.
 */
inline double pohozaev_residual_disk(const SphereField& field, double eps, double lambda = 0.0) {
    const DomainGrid& g = field.grid();
    if (g.kind() != DomainKind::Disk) throw Error("disk only");
    EnergyParams p{lambda, eps, Functional::FullS2, DomainKind::Disk};
    p.validate();
    const auto t = detail::evaluate_s2(field, lambda, eps, nullptr);
    const double bulk = 2.0 * t.anisotropy + t.dmi;

    const auto& m = field.values();
    const double h = g.h();
    const int samples = detail::circle_samples(g, 1.0);
    const double dtheta = 2.0 * std::numbers::pi / samples;
    std::vector<Vec3> rim(samples), inner1(samples), inner2(samples);
    for (int s = 0; s < samples; ++s) {
        const double th = s * dtheta;
        const Vec2 nu{std::cos(th), std::sin(th)};
        rim[s] = field.boundary_phase() ? rim_value(*field.boundary_phase()) : detail::interpolate(g, m, nu);
        inner1[s] = detail::interpolate(g, m, (1.0 - h) * nu);
        inner2[s] = detail::interpolate(g, m, (1.0 - 2.0 * h) * nu);
    }
    double ring = 0.0;
    for (int s = 0; s < samples; ++s) {
        const double th = s * dtheta;
        const Vec3 tau{-std::sin(th), std::cos(th), 0.0};
        const Vec3 d_tau = (1.0 / (2.0 * dtheta)) * (rim[(s + 1) % samples] - rim[(s + samples - 1) % samples]);
        const Vec3 d_nu = (1.0 / (2.0 * h)) * (3.0 * rim[s] - 4.0 * inner1[s] + inner2[s]);
        const double m3 = rim[s].z / eps;
        ring += 0.5 * (norm2(d_tau) - norm2(d_nu) + m3 * m3) + (lambda / eps) * rim[s].z * dot(d_tau, tau);
    }
    return std::abs(bulk - ring * dtheta);
}

/**
 * Nodal trace of the easy-plane stress tensor
 * T = e delta - dm.dm + lambda^2 (div m) dm_beta^alpha, which vanishes
 * identically; returned per node to expose rounding.
 */
inline std::vector<double> stress_trace(const CircleField& field, double lambda) {
    const DomainGrid& g = field.grid();
    std::vector<Vec2> dx, dy;
    detail::nodal_gradient(g, field.values(), dx, dy);
    std::vector<double> tr(g.size());
    const double l2 = lambda * lambda;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double grad_sq = norm2(dx[k]) + norm2(dy[k]);
        const double div = dx[k].x + dy[k].y;
        const double e = 0.5 * (grad_sq - l2 * div * div);
        const double t11 = e - norm2(dx[k]) + l2 * div * dx[k].x;
        const double t22 = e - norm2(dy[k]) + l2 * div * dy[k].y;
        tr[k] = t11 + t22;
    }
    return tr;
}

/**
 * Planar Pohozaev residual |oint_{dD_R(c)} T(x - c, nu) ds| for the easy-plane
 * stress tensor, i.e. R |oint (1/2)(|d_tau m|^2 - |d_nu m|^2)
 * + (lambda^2/2)(div m)(d_nu m . nu - d_tau m . tau) ds|. Gradients are
 * centered nodal differences interpolated bilinearly onto the circle.
 */
inline double pohozaev_residual_annulus(const CircleField& field, double lambda, double R,
                                        std::optional<Vec2> center = std::nullopt) {
    const DomainGrid& g = field.grid();
    const Vec2 c = center.value_or(g.center());
    if (!(R > 0.0)) throw Error("circle out of range");
    if (g.kind() == DomainKind::Torus) {
        if (R >= 0.5) throw Error("circle out of range");
    } else if (norm(c) + R > 1.0 - 2.0 * g.h()) {
        throw Error("circle out of range");
    }
    std::vector<Vec2> dx, dy;
    detail::nodal_gradient(g, field.values(), dx, dy);
    const int samples = detail::circle_samples(g, R);
    const double dtheta = 2.0 * std::numbers::pi / samples;
    const double l2 = lambda * lambda;
    double acc = 0.0;
    for (int s = 0; s < samples; ++s) {
        const double th = s * dtheta;
        const Vec2 nu{std::cos(th), std::sin(th)};
        const Vec2 tau{-nu.y, nu.x};
        Vec2 z = c + R * nu;
        if (g.kind() == DomainKind::Torus) {
            z.x -= std::floor(z.x);
            z.y -= std::floor(z.y);
        }
        const Vec2 mx = detail::interpolate(g, dx, z);
        const Vec2 my = detail::interpolate(g, dy, z);
        const Vec2 d_nu = nu.x * mx + nu.y * my;
        const Vec2 d_tau = tau.x * mx + tau.y * my;
        const double div = mx.x + my.y;
        acc += 0.5 * (norm2(d_tau) - norm2(d_nu)) + 0.5 * l2 * div * (dot(d_nu, nu) - dot(d_tau, tau));
    }
    // ds = R dtheta, and (x - c) . nu = R
    return std::abs(R * R * acc * dtheta);
}

/// In-plane projection of a sphere field, normalized; nodes with m1 = m2 = 0 keep (1,0).
inline CircleField in_plane_part(const SphereField& field) {
    std::vector<Vec2> values(field.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        const Vec2 v{field[k].x, field[k].y};
        const double len = norm(v);
        values[k] = len > 0.0 ? (1.0 / len) * v : Vec2{1.0, 0.0};
    }
    return CircleField(field.grid_ptr(), std::move(values));
}

/// Annulus residual of a sphere field through its in-plane projection.
inline double pohozaev_residual_annulus(const SphereField& field, double lambda, double R,
                                        std::optional<Vec2> center = std::nullopt) {
    return pohozaev_residual_annulus(in_plane_part(field), lambda, R, center);
}

} // namespace bimeron
