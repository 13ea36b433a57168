#pragma once

/**
 * @file experiments.hpp
 * @brief Core radius, parameter sweeps, neck profiles and bound audits.
 */

#include "bimeron/ansatz.hpp"
#include "bimeron/energy.hpp"
#include "bimeron/error.hpp"
#include "bimeron/grid.hpp"
#include "bimeron/minimize.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/trapezoidal.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace bimeron {

/// Core energy threshold; a disk around the analytic bubble reaches delta0^2 = 4 at radius 0.68 a.
inline constexpr double kDefaultDelta0 = 2.0;

struct CoreReport {
    double R_core = 0.0;
    Vec2 x_core{};
    double core_energy = 0.0;  ///< energy of D_{R_core}(x_core)
    double delta0 = kDefaultDelta0;
};

/**
 * Nodal energy masses of e_eps = 1/2 |grad m|^2 + 1/2 (m3/eps)^2: each
 * nearest-neighbor edge term 1/2 |m_b - m_a|^2 is split evenly between its ends.
 * `eps` may be infinite (pure Dirichlet density).
 */
inline std::vector<double> nodal_energy_density(const SphereField& field, double eps) {
    const DomainGrid& g = field.grid();
    std::vector<double> w(g.size(), 0.0);
    g.for_each_edge([&](std::size_t a, std::size_t b) {
        const double e = 0.25 * norm2(field[b] - field[a]);
        w[a] += e;
        w[b] += e;
    });
    if (!std::isinf(eps)) {
        const double s = g.h() * g.h() / (2.0 * eps * eps);
        for (std::size_t k = 0; k < g.size(); ++k)
            if (g.active(k)) w[k] += s * field[k].z * field[k].z;
    }
    return w;
}

namespace detail {

/// Row prefix sums with one period of padding on the torus.
class WindowSums {
public:
    WindowSums(const DomainGrid& g, const std::vector<double>& w) : g_(g) {
        const int n = g.n();
        width_ = g.kind() == DomainKind::Torus ? 2 * n : n;
        prefix_.assign(static_cast<std::size_t>(n) * (width_ + 1), 0.0);
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int c = 0; c < width_; ++c) {
                acc += w[g.index(c % n, j)];
                prefix_[static_cast<std::size_t>(j) * (width_ + 1) + c + 1] = acc;
            }
        }
    }

    /// Mass of the lattice disk {(di,dj): di^2 + dj^2 <= r2} around node (i,j).
    double disk(int i, int j, long long r2) const {
        const int n = g_.n();
        const bool torus = g_.kind() == DomainKind::Torus;
        const int reach = static_cast<int>(std::floor(std::sqrt(static_cast<double>(r2))));
        double total = 0.0;
        for (int dj = -reach; dj <= reach; ++dj) {
            int row = j + dj;
            if (torus) row = ((row % n) + n) % n;
            else if (row < 0 || row >= n) continue;
            const long long rem = r2 - static_cast<long long>(dj) * dj;
            int half = static_cast<int>(std::floor(std::sqrt(static_cast<double>(rem))));
            while (static_cast<long long>(half + 1) * (half + 1) <= rem) ++half;
            while (static_cast<long long>(half) * half > rem) --half;
            int lo = i - half, hi = i + half;
            if (torus) {
                if (hi - lo + 1 >= n) {
                    lo = 0;
                    hi = n - 1;
                } else {
                    lo = ((lo % n) + n) % n;
                    hi = lo + 2 * half;
                }
            } else {
                lo = std::max(lo, 0);
                hi = std::min(hi, n - 1);
            }
            const std::size_t base = static_cast<std::size_t>(row) * (width_ + 1);
            total += prefix_[base + hi + 1] - prefix_[base + lo];
        }
        return total;
    }

private:
    const DomainGrid& g_;
    int width_ = 0;
    std::vector<double> prefix_;
};

struct WindowMax {
    double value = 0.0;
    std::size_t node = 0;
};

inline WindowMax max_window(const DomainGrid& g, const WindowSums& sums, long long r2) {
    WindowMax best{-1.0, 0};
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!g.active(k)) continue;
        const double v = sums.disk(g.col(k), g.row(k), r2);
        if (v > best.value) best = {v, k};
    }
    return best;
}

} // namespace detail

/**
 * Discrete core radius: the largest lattice radius rho = sqrt(k) h such that
 * every node-centered disk of radius rho carries e_eps-energy below delta0^2.
 * The radius search is dyadic in k and then bisects; x_core is the center of
 * the heaviest window at R_core.
 */
inline CoreReport core_radius(const SphereField& field, double eps, double delta0 = kDefaultDelta0) {
    if (!(delta0 > 0.0)) throw Error("invalid parameter: delta0 must be positive");
    const DomainGrid& g = field.grid();
    const auto w = nodal_energy_density(field, eps);
    double total = 0.0;
    for (double v : w) total += v;
    const double threshold = delta0 * delta0;
    if (total < threshold) throw Error("no core");

    const detail::WindowSums sums(g, w);
    const long long n = g.n();
    const long long k_max = g.kind() == DomainKind::Torus ? (n / 2) * (n / 2) : 2 * n * n;
    auto below = [&](long long k) { return detail::max_window(g, sums, k).value < threshold; };

    long long lo = -1;  // largest k known to be below (-1: none)
    long long hi = -1;  // smallest k known to reach the threshold
    if (!below(0)) {
        hi = 0;
    } else {
        lo = 0;
        long long k = 1;
        while (k <= k_max) {
            if (below(k)) {
                lo = k;
                k *= 2;
            } else {
                hi = k;
                break;
            }
        }
        if (hi < 0) {
            hi = k_max + 1;
            if (lo < k_max && below(k_max)) lo = k_max;
        }
        while (hi - lo > 1) {
            const long long mid = lo + (hi - lo) / 2;
            if (below(mid)) lo = mid;
            else hi = mid;
        }
    }
    CoreReport rep;
    rep.delta0 = delta0;
    const long long k_core = std::max<long long>(lo, 0);
    rep.R_core = lo < 0 ? 0.0 : std::sqrt(static_cast<double>(k_core)) * g.h();
    const auto best = detail::max_window(g, sums, k_core);
    rep.x_core = g.position(best.node);
    rep.core_energy = best.value;
    return rep;
}

// ---------------------------------------------------------------------------
// Sweeps

inline constexpr const char* kSweepSchema = "bimeron-sweep v1";

struct SweepRow {
    double lambda = 0.0;
    double eps = 0.0;
    std::string domain;
    int n = 0;
    double h = 0.0;
    double total = 0.0;
    double exchange = 0.0;
    double dmi = 0.0;
    double anisotropy = 0.0;
    double m3_sq = 0.0;  ///< int m3^2
    double R_core = 0.0;
    double R_core_over_eps = 0.0;
    int degree = 0;
    bool converged = false;
    bool sector_escape = false;
    bool under_resolved = false;
    double grad_sup = 0.0;
    int iters = 0;
    double wall_time = 0.0;
    std::string error;  ///< empty unless the row failed
    std::optional<SphereField> field;  ///< final field, not serialized
    std::optional<CoreReport> core;
};

struct SweepOptions {
    DomainKind domain = DomainKind::Disk;
    int n = 128;
    SolveConfig solve{};
    double delta0 = kDefaultDelta0;
    int threads = 0;        ///< 0: BIMERON_THREADS or 1
    double r_cut = 0.25;    ///< cut-off radius of the initial ansatz
    bool keep_fields = false;
};

/// Thread count from the BIMERON_THREADS environment variable, default 1.
inline int default_threads() {
    if (const char* env = std::getenv("BIMERON_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    return 1;
}

/// Cells per anisotropy length below which a row is not minimized.
inline constexpr double kMinCellsPerEps = 8.0;

inline bool under_resolved(double eps, const DomainGrid& g) {
    return eps / g.h() < kMinCellsPerEps;
}

/// Half-separation used to seed minimizations: a = eps lambda / (2|ln lambda|), at least 2h.
inline double initial_half_separation(double lambda, double eps, double h) {
    return std::max(optimal_upper_bound(lambda).a_over_eps * eps, 2.0 * h);
}

inline double m3_squared_integral(const SphereField& f) {
    const DomainGrid& g = f.grid();
    double s = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
        if (g.active(k)) s += f[k].z * f[k].z;
    return s * g.h() * g.h();
}

namespace detail {

template <class Job>
void run_parallel(std::size_t count, int threads, Job&& job) {
    const int t = std::max(1, std::min<int>(threads, static_cast<int>(count)));
    if (t == 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < t; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) job(i);
        });
    for (auto& th : pool) th.join();
}

inline SweepRow run_row(double lambda, double eps, const SweepOptions& opt) {
    SweepRow row;
    row.lambda = lambda;
    row.eps = eps;
    row.domain = to_string(opt.domain);
    row.n = opt.n;
    const auto start = std::chrono::steady_clock::now();
    try {
        auto grid = make_grid(opt.domain, opt.n);
        row.h = grid->h();
        if (under_resolved(eps, *grid)) {
            row.under_resolved = true;
            return row;
        }
        AnsatzParams ap;
        ap.a = initial_half_separation(lambda, eps, grid->h());
        ap.R_cut = std::min(opt.r_cut, 0.45 * grid->domain_radius());
        ap.z0 = grid->center();
        const std::optional<double> phase = opt.domain == DomainKind::Disk ? std::optional<double>(0.0) : std::nullopt;
        const auto init = sample_field(grid, [&](const Vec2& z) { return cutoff_field(z, ap); }, phase);
        const EnergyParams p{lambda, eps, Functional::FullS2, opt.domain};
        auto [field, rep] = minimize_s2(init, p, opt.solve);
        row.total = rep.final.total;
        row.exchange = rep.final.exchange;
        row.dmi = rep.final.dmi;
        row.anisotropy = rep.final.anisotropy;
        row.degree = rep.final.degree;
        row.converged = rep.converged;
        row.sector_escape = rep.sector_escape;
        row.grad_sup = rep.final.grad_sup;
        row.iters = rep.iters;
        row.m3_sq = m3_squared_integral(field);
        try {
            row.core = core_radius(field, eps, opt.delta0);
            row.R_core = row.core->R_core;
            row.R_core_over_eps = row.R_core / eps;
        } catch (const Error&) {
            row.R_core = 0.0;
        }
        if (opt.keep_fields) row.field = std::move(field);
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
}

} // namespace detail

/// One minimization per lambda at fixed eps, each started from the cut-off ansatz.
inline std::vector<SweepRow> conformal_sweep(const std::vector<double>& lambdas, double eps, const SweepOptions& opt) {
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        if (!(lambdas[i] > 0.0 && lambdas[i] < 1.0)) throw Error("invalid λ");
        if (i > 0 && !(lambdas[i] < lambdas[i - 1])) throw Error("λ list must be decreasing");
    }
    std::vector<SweepRow> rows(lambdas.size());
    const int threads = opt.threads > 0 ? opt.threads : default_threads();
    detail::run_parallel(lambdas.size(), threads, [&](std::size_t i) { rows[i] = detail::run_row(lambdas[i], eps, opt); });
    return rows;
}

/// One torus minimization per eps at fixed lambda; rows with eps/h < 8 are flagged and skipped.
inline std::vector<SweepRow> large_domain_sweep(double lambda, const std::vector<double>& eps_list, SweepOptions opt) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw Error("invalid λ");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0)) throw Error("invalid parameter: eps must be positive");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw Error("eps list must be decreasing");
    }
    opt.domain = DomainKind::Torus;
    std::vector<SweepRow> rows(eps_list.size());
    const int threads = opt.threads > 0 ? opt.threads : default_threads();
    detail::run_parallel(eps_list.size(), threads, [&](std::size_t i) { rows[i] = detail::run_row(lambda, eps_list[i], opt); });
    return rows;
}

/// Min and max of R_core/eps over the rows that produced a core.
inline std::pair<double, double> core_ratio_range(const std::vector<SweepRow>& rows) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& r : rows) {
        if (r.under_resolved || !r.error.empty() || !(r.R_core > 0.0)) continue;
        lo = std::min(lo, r.R_core_over_eps);
        hi = std::max(hi, r.R_core_over_eps);
    }
    return {lo, hi};
}

namespace detail {

inline Vec3 sample_unit(const SphereField& f, Vec2 z) {
    const DomainGrid& g = f.grid();
    if (g.kind() == DomainKind::Torus) {
        z.x -= std::floor(z.x);
        z.y -= std::floor(z.y);
    } else if (norm(z) >= 1.0) {
        return f.boundary_phase() ? rim_value(*f.boundary_phase()) : interpolate(g, f.values(), (0.999999 / norm(z)) * z);
    }
    const Vec3 v = interpolate(g, f.values(), z);
    const double len = norm(v);
    return len > 0.0 ? (1.0 / len) * v : Vec3{1.0, 0.0, 0.0};
}

inline Vec3 far_field(const SphereField& f) {
    Vec3 mean{};
    const DomainGrid& g = f.grid();
    for (std::size_t k = 0; k < g.size(); ++k)
        if (g.active(k)) mean += f[k];
    const double len = norm(mean);
    return len > 0.0 ? (1.0 / len) * mean : Vec3{1.0, 0.0, 0.0};
}

} // namespace detail

/**
 * Relative L^2 distance of two cores after blow-up: both fields are sampled at
 * x_core + R_core y for y on a uniform grid in [-extent, extent]^2 and compared
 * as ||mA - mB|| / ||mA - mA_far||, with mA_far the normalized mean of field A.
 */
inline double core_profile_distance(const SphereField& a, const CoreReport& ca, const SphereField& b,
                                    const CoreReport& cb, double extent = 3.0, int samples = 121) {
    if (!(ca.R_core > 0.0 && cb.R_core > 0.0)) throw Error("no core");
    const Vec3 far = detail::far_field(a);
    double num = 0.0, den = 0.0;
    for (int j = 0; j < samples; ++j)
        for (int i = 0; i < samples; ++i) {
            const Vec2 y{-extent + 2.0 * extent * i / (samples - 1), -extent + 2.0 * extent * j / (samples - 1)};
            const Vec3 va = detail::sample_unit(a, ca.x_core + ca.R_core * y);
            const Vec3 vb = detail::sample_unit(b, cb.x_core + cb.R_core * y);
            num += norm2(va - vb);
            den += norm2(va - far);
        }
    if (!(den > 0.0)) throw Error("no core");
    return std::sqrt(num / den);
}

// ---------------------------------------------------------------------------
// Neck energy

struct NeckRow {
    double r_in = 0.0;
    double r_out = 0.0;
    double energy = 0.0;       ///< int |grad m|^2 over r_in <= |x - x_core| < r_out
    double oscillation = 0.0;  ///< max pairwise geodesic distance of m over the annulus
};

namespace detail {

inline void check_radii(const std::vector<double>& radii, double limit) {
    if (radii.size() < 2) throw Error("radii out of range");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] >= 0.0) || radii[i] > limit) throw Error("radii out of range");
        if (i > 0 && !(radii[i] > radii[i - 1])) throw Error("radii out of range");
    }
}

} // namespace detail

/**
 * Annular Dirichlet energies around x_core from the nodal density (edge terms
 * split between endpoints), so consecutive annuli telescope exactly.
 */
inline std::vector<NeckRow> neck_energy_profile(const SphereField& field, const Vec2& x_core,
                                                const std::vector<double>& radii) {
    const DomainGrid& g = field.grid();
    const double limit = g.kind() == DomainKind::Torus ? 0.5 : 1.0 - norm(x_core);
    detail::check_radii(radii, limit);
    const auto w = nodal_energy_density(field, std::numeric_limits<double>::infinity());
    std::vector<NeckRow> rows(radii.size() - 1);
    std::vector<std::vector<Vec3>> members(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = {radii[i], radii[i + 1], 0.0, 0.0};
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!g.active(k)) continue;
        const double r = norm(g.displacement(x_core, g.position(k)));
        const auto it = std::upper_bound(radii.begin(), radii.end(), r);
        if (it == radii.begin() || it == radii.end()) continue;
        const std::size_t idx = static_cast<std::size_t>(it - radii.begin()) - 1;
        rows[idx].energy += 2.0 * w[k];
        members[idx].push_back(field[k]);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& m = members[i];
        double worst = 0.0;
        for (std::size_t a = 0; a < m.size(); ++a)
            for (std::size_t b = a + 1; b < m.size(); ++b) worst = std::max(worst, geodesic(m[a], m[b]));
        rows[i].oscillation = worst;
    }
    return rows;
}

/**
 * Same profile for an analytic map, by adaptive quadrature in polar
 * coordinates around `center`; gradients use fourth-order central differences
 * with spacing `step`, which should be about 1e-3 of the smallest length scale of
 * the map. Oscillations are taken over a fixed 8 x 64 polar sample.
 */
inline std::vector<NeckRow> neck_energy_profile(const SphereMap& map, const Vec2& center,
                                                const std::vector<double>& radii, double step,
                                                double tol = 1e-10) {
    detail::check_radii(radii, std::numeric_limits<double>::infinity());
    using boost::math::quadrature::gauss_kronrod;
    using boost::math::quadrature::trapezoidal;
    if (!(step > 0.0)) throw Error("invalid parameter: step must be positive");
    auto density = [&](const Vec2& z) {
        auto diff = [&](const Vec2& e) {
            return (1.0 / (12.0 * step)) * (8.0 * (map(z + step * e) - map(z - step * e)) -
                                            (map(z + 2.0 * step * e) - map(z - 2.0 * step * e)));
        };
        return norm2(diff({1.0, 0.0})) + norm2(diff({0.0, 1.0}));
    };
    std::vector<NeckRow> rows(radii.size() - 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double r0 = radii[i], r1 = radii[i + 1];
        auto radial = [&](double r) {
            auto angular = [&](double th) { return density(center + r * Vec2{std::cos(th), std::sin(th)}); };
            return r * trapezoidal(angular, 0.0, 2.0 * kPi, tol);
        };
        rows[i].r_in = r0;
        rows[i].r_out = r1;
        rows[i].energy = gauss_kronrod<double, 61>::integrate(radial, r0, r1, 15, tol);
        std::vector<Vec3> pts;
        for (int a = 0; a < 8; ++a)
            for (int s = 0; s < 64; ++s) {
                const double r = r0 + (r1 - r0) * a / 7.0;
                const double th = 2.0 * kPi * s / 64.0;
                pts.push_back(map(center + r * Vec2{std::cos(th), std::sin(th)}));
            }
        for (std::size_t a = 0; a < pts.size(); ++a)
            for (std::size_t b = a + 1; b < pts.size(); ++b)
                rows[i].oscillation = std::max(rows[i].oscillation, geodesic(pts[a], pts[b]));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Bound audit

struct AuditEntry {
    double lambda = 0.0;
    double eps = 0.0;
    bool skipped = false;  ///< under-resolved or failed row
    bool topological_lower = true;
    bool coercive_lower = true;
    std::optional<bool> upper;  ///< only for lambda <= 0.2
    double upper_bound = 0.0;
    double slack = 0.0;
    bool pass() const { return skipped || (topological_lower && coercive_lower && upper.value_or(true)); }
};

struct Audit {
    std::vector<AuditEntry> entries;
    bool pass() const {
        return std::all_of(entries.begin(), entries.end(), [](const AuditEntry& e) { return e.pass(); });
    }
};

inline constexpr double kUpperAuditMaxLambda = 0.2;

/// Slack of the finite-size upper-bound audit: 0.05 lambda^2/|ln lambda| + 10 h^2.
inline double upper_bound_slack(double lambda, double h) {
    return 0.05 * lambda * lambda / std::abs(std::log(lambda)) + 10.0 * h * h;
}

inline Audit bound_audit(const std::vector<SweepRow>& rows) {
    Audit audit;
    for (const auto& r : rows) {
        AuditEntry e;
        e.lambda = r.lambda;
        e.eps = r.eps;
        if (r.under_resolved || !r.error.empty()) {
            e.skipped = true;
            audit.entries.push_back(e);
            continue;
        }
        const double l = std::abs(r.lambda);
        e.topological_lower = r.total >= 4.0 * kPi * (1.0 - l * l) * std::abs(r.degree);
        e.coercive_lower = r.total >= (1.0 - l) * (r.exchange + r.anisotropy);
        if (l > 0.0 && l <= kUpperAuditMaxLambda) {
            e.upper_bound = optimal_upper_bound(l).bound;
            e.slack = upper_bound_slack(l, r.h);
            e.upper = r.total <= e.upper_bound + e.slack;
        }
        audit.entries.push_back(e);
    }
    return audit;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "# " << kSweepSchema << '\n';
    out << "lambda,eps,domain,n,h,total,exchange,dmi,anisotropy,m3_sq,R_core,R_core_over_eps,degree,converged,"
           "sector_escape,under_resolved,grad_sup,iters,wall_time,error\n";
    out.precision(17);
    for (const auto& r : rows) {
        out << r.lambda << ',' << r.eps << ',' << r.domain << ',' << r.n << ',' << r.h << ',' << r.total << ','
            << r.exchange << ',' << r.dmi << ',' << r.anisotropy << ',' << r.m3_sq << ',' << r.R_core << ','
            << r.R_core_over_eps << ',' << r.degree << ',' << r.converged << ',' << r.sector_escape << ','
            << r.under_resolved << ',' << r.grad_sup << ',' << r.iters << ',' << r.wall_time << ",\"" << r.error
            << "\"\n";
    }
    return out.str();
}

} // namespace bimeron
