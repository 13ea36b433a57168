#pragma once

/**
 * @file ansatz.hpp
 * @brief Analytic bimeron trial fields and their closed-form energies.
 *
 * Everything here is a pure function of its arguments. The trial field is the
 * stereographic lift of the rational map f(w) = c (w - a)/(w + a), which has a
 * vortex (south pole) at w = a and an antivortex (north pole) at w = -a and
 * carries lattice degree -1. The cut-off version agrees with it on D_R and is
 * the constant rim value outside D_2R.
 */

#include "bimeron/error.hpp"
#include "bimeron/grid.hpp"
#include "bimeron/vec.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/trapezoidal.hpp>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <utility>

namespace bimeron {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kFourPi = 4.0 * std::numbers::pi;
/// Stand-in for an infinite anisotropy length in the closed-form evaluators.
inline constexpr double kInfiniteEps = std::numeric_limits<double>::infinity();

/// Inverse stereographic lift y -> ((2y, |y|^2 - 1) / (|y|^2 + 1)); the origin maps to the south pole.
inline Vec3 stereographic(const Vec2& y) {
    const double r2 = norm2(y);
    if (!std::isfinite(r2) || r2 > 1e300) return {0.0, 0.0, 1.0};
    const double inv = 1.0 / (r2 + 1.0);
    return {2.0 * y.x * inv, 2.0 * y.y * inv, (r2 - 1.0) * inv};
}

/// Lift of the quotient num/den without forming it, exact at den = 0 (north pole).
inline Vec3 stereographic_quotient(cplx num, cplx den) {
    const double nn = std::norm(num);
    const double dd = std::norm(den);
    const double inv = 1.0 / (nn + dd);
    const cplx in_plane = 2.0 * num * std::conj(den) * inv;
    return {in_plane.real(), in_plane.imag(), (nn - dd) * inv};
}

struct AnsatzParams {
    double a = 0.05;       ///< vortex half-separation
    double R_cut = 0.25;   ///< cut-off radius; transition annulus is [R_cut, 2 R_cut]
    double c_phase = 0.0;  ///< boundary phase, c = exp(i c_phase)
    Vec2 z0{};             ///< center of the pair

    /// Throws on parameters outside the admissible set; `for_disk` adds R_cut < 1/2.
    void validate(bool for_disk) const {
        if (!(a > 0.0) || !std::isfinite(a)) throw Error("invalid parameter: a must be positive");
        if (!(R_cut > 0.0) || !std::isfinite(R_cut)) throw Error("invalid parameter: R_cut must be positive");
        if (for_disk && !(R_cut < 0.5)) throw Error("invalid parameter: R_cut must be below 1/2 on the disk");
        if (!(c_phase >= 0.0 && c_phase < 2.0 * kPi)) throw Error("invalid parameter: c_phase must lie in [0, 2pi)");
    }
};

/**
 * Smooth cut-off profile g with g(s) = ln(1+s^2) on [0,2] and g constant on
 * [4,inf). On [2,4], g' is the quartic (4-s)^3 (1/10 + 3(s-2)/25), which matches
 * g' and g'' of ln(1+s^2) at s = 2 and vanishes to third order at s = 4; g is
 * therefore a quintic there and C^2 overall.
 */
struct CutoffProfile {
    static constexpr double kInner = 2.0;
    static constexpr double kOuter = 4.0;

    static double g(double s) {
        if (s <= kInner) return std::log1p(s * s);
        const double t = std::min(s, kOuter) - kInner;
        // integral of g' from 2 to s, expanded in t = s - 2
        const double tail = t * (0.8 + t * (-0.12 + t * (-0.28 + t * (0.155 + t * (-0.024)))));
        return std::log(5.0) + tail;
    }

    static double g_prime(double s) {
        if (s <= kInner) return 2.0 * s / (1.0 + s * s);
        if (s >= kOuter) return 0.0;
        const double t = s - kInner;
        const double w = 2.0 - t;
        return w * w * w * (0.1 + 0.12 * t);
    }

    static double g_double_prime(double s) {
        if (s <= kInner) {
            const double q = 1.0 + s * s;
            return 2.0 * (1.0 - s * s) / (q * q);
        }
        if (s >= kOuter) return 0.0;
        const double t = s - kInner;
        const double w = 2.0 - t;
        return w * w * (-0.06 - 0.48 * t);
    }

    /// Radius function r(s) = g'/(1 - sgn(s^2-1) sqrt(1-g'^2)); identity on [0,2], infinite from 4 on.
    static double r(double s) {
        if (s <= kInner) return s;
        if (s >= kOuter) return std::numeric_limits<double>::infinity();
        const double gp = g_prime(s);
        return (1.0 + std::sqrt(1.0 - gp * gp)) / gp;
    }

    static double r_prime(double s) {
        if (s <= kInner) return 1.0;
        if (s >= kOuter) return std::numeric_limits<double>::infinity();
        const double gp = g_prime(s);
        const double root = std::sqrt(1.0 - gp * gp);
        return -(1.0 + root) / (root * gp * gp) * g_double_prime(s);
    }
};

namespace detail {

inline cplx to_complex(const Vec2& v) { return {v.x, v.y}; }

/// Radius map of the cut-off field: identity on [0,R], infinite from 2R on.
inline double cutoff_radius(double s, double R) { return 0.5 * R * CutoffProfile::r(2.0 * s / R); }
inline double cutoff_radius_prime(double s, double R) { return CutoffProfile::r_prime(2.0 * s / R); }

} // namespace detail

/// Phi(f(z - z0)) with f(w) = exp(i c_phase) (w - a)/(w + a); the antivortex w = -a maps to (0,0,1).
inline Vec3 bimeron_prototype(const Vec2& z, const AnsatzParams& p) {
    const cplx w = detail::to_complex(z - p.z0);
    const cplx c = std::polar(1.0, p.c_phase);
    return stereographic_quotient(c * (w - p.a), w + p.a);
}

/**
 * Cut-off bimeron: identical to bimeron_prototype for |z - z0| <= R_cut, equal to
 * (cos c_phase, sin c_phase, 0) for |z - z0| >= 2 R_cut, and in between the
 * prototype composed with the radial reparametrization r_R.
 */
inline Vec3 cutoff_field(const Vec2& z, const AnsatzParams& p) {
    const Vec2 d = z - p.z0;
    const double s = norm(d);
    if (s <= p.R_cut) return bimeron_prototype(z, p);
    if (s >= 2.0 * p.R_cut) return rim_value(p.c_phase);
    const double rho = detail::cutoff_radius(s, p.R_cut);
    const cplx psi = (rho / s) * detail::to_complex(d);
    const cplx c = std::polar(1.0, p.c_phase);
    return stereographic_quotient(c * (psi - p.a), psi + p.a);
}

/// Exchange / DMI / anisotropy split of a continuum energy.
struct EnergyParts {
    double exchange = 0.0;
    double dmi = 0.0;
    double anisotropy = 0.0;
    double total() const { return exchange + dmi + anisotropy; }
};

namespace detail {

inline void require_positive(double v) {
    if (!(v > 0.0)) throw Error("invalid parameter");
}

} // namespace detail

/**
 * Closed-form energy of the (c = 1) prototype on the centered disk D_R, split
 * into its three terms. `eps` may be kInfiniteEps for the pure Dirichlet case.
 */
inline EnergyParts disk_energy_parts(double R, double a, double lambda, double eps) {
    detail::require_positive(R);
    detail::require_positive(a);
    detail::require_positive(eps);
    const double R2 = R * R;
    const double a2 = a * a;
    const double frac = R2 / (R2 + a2);
    const double a_over_eps = std::isinf(eps) ? 0.0 : a / eps;
    EnergyParts parts;
    parts.exchange = kFourPi * frac;
    parts.dmi = -kFourPi * lambda * a_over_eps * 0.5 * frac;
    parts.anisotropy = kPi * a_over_eps * a_over_eps * (std::log1p(R2 / a2) - frac);
    return parts;
}

/// 4 pi (1 - lambda a/(2 eps)) R^2/(R^2+a^2) + pi (a/eps)^2 (ln((R^2+a^2)/a^2) - R^2/(R^2+a^2)).
inline double disk_energy_closed_form(double R, double a, double lambda, double eps) {
    return disk_energy_parts(R, a, lambda, eps).total();
}

/// Dirichlet energy of the harmonic bimeron on the off-center disk D_r(z0), |z0| = z0_mag.
inline double offset_disk_energy(double r, double z0_mag, double a) {
    detail::require_positive(r);
    detail::require_positive(a);
    if (!(z0_mag >= 0.0)) throw Error("invalid parameter");
    const double a2 = a * a;
    const double dm = r - z0_mag;
    const double dp = r + z0_mag;
    return 2.0 * kPi * (1.0 + (r * r - z0_mag * z0_mag - a2) / std::sqrt((a2 + dm * dm) * (a2 + dp * dp)));
}

/**
 * Reduced energy density terms of the cut-off field at distance s from its
 * center and polar angle theta, from the chain rule through the radius map.
 * Valid in the open transition annulus R_cut < s < 2 R_cut.
 */
inline EnergyParts cutoff_density_parts(double s, double theta, const AnsatzParams& p, double lambda, double eps) {
    const double R = p.R_cut;
    const double rho = detail::cutoff_radius(s, R);
    const double rho_p = detail::cutoff_radius_prime(s, R);
    if (!std::isfinite(rho)) return {};
    const cplx e_theta = std::polar(1.0, theta);
    const cplx psi = rho * e_theta;
    const cplx c = std::polar(1.0, p.c_phase);
    const cplx u = c * (psi - p.a) / (psi + p.a);
    const cplx du = c * (2.0 * p.a) / ((psi + p.a) * (psi + p.a));
    const double grad_sq = std::norm(du) * (rho_p * rho_p + (rho / s) * (rho / s));
    const double div = du.real() * (rho_p + rho / s);
    const double u2 = std::norm(u);
    const double q = u2 + 1.0;
    EnergyParts e;
    e.exchange = 2.0 * grad_sq / (q * q);
    if (!std::isinf(eps)) {
        e.dmi = -2.0 * (lambda / eps) * div / (q * q);
        e.anisotropy = (u2 - 1.0) * (u2 - 1.0) / (2.0 * eps * eps * q * q);
    }
    return e;
}

/// Energy of the cut-off field in the transition annulus D_2R \ D_R by adaptive quadrature.
inline EnergyParts annulus_energy(const AnsatzParams& p, double lambda, double eps, double tol = 1e-11) {
    using boost::math::quadrature::gauss_kronrod;
    using boost::math::quadrature::trapezoidal;
    EnergyParts total;
    auto integrate = [&](auto pick) {
        auto radial = [&](double s) {
            auto angular = [&](double theta) { return pick(cutoff_density_parts(s, theta, p, lambda, eps)); };
            return s * trapezoidal(angular, 0.0, 2.0 * kPi, tol);
        };
        return gauss_kronrod<double, 61>::integrate(radial, p.R_cut, 2.0 * p.R_cut, 12, tol);
    };
    total.exchange = integrate([](const EnergyParts& e) { return e.exchange; });
    if (!std::isinf(eps)) {
        total.dmi = integrate([](const EnergyParts& e) { return e.dmi; });
        total.anisotropy = integrate([](const EnergyParts& e) { return e.anisotropy; });
    }
    return total;
}

/**
 * Full-plane energy of the cut-off field with c_phase = 0: closed form on D_R
 * plus the annulus quadrature. The divergence part of the DMI density
 * integrates to zero because the field is constant outside D_2R.
 */
inline EnergyParts cutoff_field_energy(const AnsatzParams& p, double lambda, double eps) {
    EnergyParts inner = disk_energy_parts(p.R_cut, p.a, lambda, eps);
    const EnergyParts ring = annulus_energy(p, lambda, eps);
    inner.exchange += ring.exchange;
    inner.dmi += ring.dmi;
    inner.anisotropy += ring.anisotropy;
    return inner;
}

/**
 * Energy density of Phi(f) for holomorphic f, from f and f':
 * 4|f'|^2/(1+|f|^2)^2 - 4 (lambda/eps) Re f'/(1+|f|^2)^2 + (|f|^2-1)^2/(2 eps^2 (1+|f|^2)^2).
 * The DMI entry is the reduced density whose integral differs from
 * int (div m) m3 by a boundary term.
 */
inline EnergyParts holomorphic_density_parts(cplx f, cplx fp, double lambda, double eps) {
    const double f2 = std::norm(f);
    const double q = 1.0 + f2;
    EnergyParts e;
    e.exchange = 4.0 * std::norm(fp) / (q * q);
    if (!std::isinf(eps)) {
        e.dmi = -4.0 * (lambda / eps) * fp.real() / (q * q);
        e.anisotropy = (f2 - 1.0) * (f2 - 1.0) / (2.0 * eps * eps * q * q);
    }
    return e;
}

/// Polar adaptive quadrature of the prototype's density over D_R (c_phase = 0).
inline double quadrature_disk_energy(double R, double a, double lambda, double eps, double tol = 1e-10) {
    using boost::math::quadrature::gauss_kronrod;
    using boost::math::quadrature::trapezoidal;
    auto radial = [&](double r) {
        auto angular = [&](double th) {
            const cplx w = std::polar(r, th);
            const auto e = holomorphic_density_parts((w - a) / (w + a), 2.0 * a / ((w + a) * (w + a)), lambda, eps);
            return e.total();
        };
        return r * trapezoidal(angular, 0.0, 2.0 * kPi, tol);
    };
    // split at r = a where the angular profile is sharpest
    const double mid = std::min(a, R);
    double total = gauss_kronrod<double, 61>::integrate(radial, 0.0, mid, 15, tol);
    if (R > mid) total += gauss_kronrod<double, 61>::integrate(radial, mid, R, 15, tol);
    return total;
}

/// Polar adaptive quadrature of 4a^2/(|z|^2+a^2)^2 over D_r(z0) with z0 = (z0_mag, 0).
inline double quadrature_offset_disk_energy(double r, double z0_mag, double a, double tol = 1e-10) {
    using boost::math::quadrature::gauss_kronrod;
    using boost::math::quadrature::trapezoidal;
    auto radial = [&](double rho) {
        auto angular = [&](double th) {
            const double x = z0_mag + rho * std::cos(th);
            const double y = rho * std::sin(th);
            const double q = x * x + y * y + a * a;
            return 4.0 * a * a / (q * q);
        };
        return rho * trapezoidal(angular, 0.0, 2.0 * kPi, tol);
    };
    return gauss_kronrod<double, 61>::integrate(radial, 0.0, r, 15, tol);
}

/// Empirical constants of the annulus decay bounds |grad m|^2 <= C a^2/|x|^4 and m3^2 <= C a^2/|x|^2.
struct AnnulusBoundReport {
    double grad_constant = 0.0;
    double m3_constant = 0.0;
    std::size_t samples = 0;
};

/**
 * Maxima of |grad m|^2 |x|^4 / a^2 and m3^2 |x|^2 / a^2 over sample points in
 * the transition annulus (x measured from z0). Gradients come from central
 * differences of the analytic map with step 1e-5 R_cut.
 */
inline AnnulusBoundReport annulus_bound_check(const AnsatzParams& p, std::span<const Vec2> samples) {
    AnnulusBoundReport rep;
    const double step = 1e-5 * p.R_cut;
    const double a2 = p.a * p.a;
    for (const Vec2& z : samples) {
        const Vec2 x = z - p.z0;
        const double s = norm(x);
        if (s < p.R_cut || s > 2.0 * p.R_cut) throw Error("out of annulus");
        const Vec3 dx = (1.0 / (2.0 * step)) * (cutoff_field(z + Vec2{step, 0.0}, p) - cutoff_field(z - Vec2{step, 0.0}, p));
        const Vec3 dy = (1.0 / (2.0 * step)) * (cutoff_field(z + Vec2{0.0, step}, p) - cutoff_field(z - Vec2{0.0, step}, p));
        const double grad_sq = norm2(dx) + norm2(dy);
        const double m3 = cutoff_field(z, p).z;
        rep.grad_constant = std::max(rep.grad_constant, grad_sq * s * s * s * s / a2);
        rep.m3_constant = std::max(rep.m3_constant, m3 * m3 * s * s / a2);
        ++rep.samples;
    }
    return rep;
}

struct UpperBound {
    double a_over_eps = 0.0;
    double bound = 0.0;
};

/// Optimal scale a/eps = lambda/(2|ln lambda|) and the bound 4 pi (1 - lambda^2/(8 |ln lambda|)).
inline UpperBound optimal_upper_bound(double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw Error("invalid λ");
    const double L = std::abs(std::log(lambda));
    return {lambda / (2.0 * L), kFourPi * (1.0 - lambda * lambda / (8.0 * L))};
}

} // namespace bimeron
