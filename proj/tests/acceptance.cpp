// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [--only 1,4,7]

#include "bimeron/ansatz.hpp"
#include "bimeron/energy.hpp"
#include "bimeron/experiments.hpp"
#include "bimeron/minimize.hpp"

#include <CLI11.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/trapezoidal.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

using namespace bimeron;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---------------------------------------------------------------------------
// shared minimizations

struct Solved {
    SphereField field;
    MinimizeReport rep;
};

/// Disk or torus minimizer from the cut-off ansatz, cached by (domain, n, lambda, eps).
const Solved& solve(DomainKind kind, int n, double lambda, double eps) {
    static std::map<std::tuple<int, int, double, double>, Solved> cache;
    const auto key = std::make_tuple(static_cast<int>(kind), n, lambda, eps);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    auto grid = make_grid(kind, n);
    AnsatzParams ap;
    ap.a = lambda > 0.0 ? initial_half_separation(lambda, eps, grid->h()) : 0.05;
    ap.R_cut = kind == DomainKind::Disk ? 0.25 : 0.2;
    ap.z0 = grid->center();
    const std::optional<double> phase = kind == DomainKind::Disk ? std::optional<double>(0.0) : std::nullopt;
    const auto init = sample_field(grid, [&](const Vec2& z) { return cutoff_field(z, ap); }, phase);
    SolveConfig cfg;
    cfg.tol = 1e-6;
    cfg.max_iters = 400000;
    auto [field, rep] = minimize_s2(init, {lambda, eps, Functional::FullS2, kind}, cfg);
    return cache.emplace(key, Solved{std::move(field), std::move(rep)}).first->second;
}

/// Easy-plane minimizer from a perturbed winding-(1,0) phase on the torus.
const std::pair<CircleField, S1Report>& solve_winding(int n, double lambda) {
    static std::map<std::pair<int, double>, std::pair<CircleField, S1Report>> cache;
    const auto key = std::make_pair(n, lambda);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    auto g = make_grid(DomainKind::Torus, n);
    const auto init = sample_circle_field(g, [](const Vec2& z) {
        return phase_vector(kTwoPi * z.x + 0.3 * std::sin(kTwoPi * z.y) + 0.2 * std::cos(kTwoPi * (z.x + z.y)));
    });
    SolveConfig cfg;
    cfg.tol = 1e-9;
    cfg.max_iters = 400000;
    return cache.emplace(key, minimize_s1(init, lambda, cfg)).first->second;
}

// ---------------------------------------------------------------------------
// 1. closed forms against 2-D quadrature

/**
 * Reduced density of f(w) = (w - a)/(w + a) written out independently:
 * 4|f'|^2/q^2 - 4 (lambda/eps) Re f'/q^2 + (|f|^2 - 1)^2/(2 eps^2 q^2), q = 1 + |f|^2.
 */
double reduced_density(Vec2 z, double a, double lambda, double eps) {
    const std::complex<double> w{z.x, z.y};
    const auto f = (w - a) / (w + a);
    const auto fp = 2.0 * a / ((w + a) * (w + a));
    const double q = 1.0 + std::norm(f);
    double e = 4.0 * std::norm(fp) / (q * q);
    if (lambda != 0.0) e -= 4.0 * (lambda / eps) * fp.real() / (q * q);
    if (std::isfinite(eps)) e += (std::norm(f) - 1.0) * (std::norm(f) - 1.0) / (2.0 * eps * eps * q * q);
    return e;
}

/// Polar quadrature over the disk of radius R centered at (cx, 0), radial breaks where the circle meets a pole.
double polar_disk(double R, double cx, double a, double lambda, double eps) {
    using boost::math::quadrature::gauss_kronrod;
    using boost::math::quadrature::trapezoidal;
    auto radial = [&](double r) {
        auto angular = [&](double th) { return reduced_density({cx + r * std::cos(th), r * std::sin(th)}, a, lambda, eps); };
        return r * trapezoidal(angular, 0.0, kTwoPi, 1e-12, 24);
    };
    std::vector<double> pts{0.0, R};
    for (double p : {std::abs(a - cx), std::abs(a + cx)})
        if (p > 0.0 && p < R) pts.push_back(p);
    std::sort(pts.begin(), pts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        total += gauss_kronrod<double, 61>::integrate(radial, pts[i], pts[i + 1], 12, 1e-11);
    return total;
}

Outcome criterion1() {
    double worst = 0.0;
    int points = 0;
    auto rel = [&](double closed, double quad) {
        worst = std::max(worst, std::abs(closed - quad) / std::abs(quad));
        ++points;
    };
    for (double R : {0.1, 0.5, 1.0})
        for (double a : {0.01, 0.05, 0.2})
            for (double lambda : {0.0, 0.3, 0.7})
                for (double eps : {0.05, 0.2, kInfiniteEps})
                    rel(disk_energy_closed_form(R, a, lambda, eps), polar_disk(R, 0.0, a, lambda, eps));
    for (double r : {0.05, 0.2, 0.5})
        for (double z0 : {0.0, 0.03, 0.3})
            for (double a : {0.01, 0.1}) rel(offset_disk_energy(r, z0, a), polar_disk(r, z0, a, 0.0, kInfiniteEps));
    return {points >= 20 && worst <= 1e-6, fmt("%d points, max rel error %.2e (<= 1e-6)", points, worst)};
}

// ---------------------------------------------------------------------------
// 2. discrete consistency order

Outcome criterion2() {
    AnsatzParams p;
    p.a = 0.08;
    p.R_cut = 0.2;
    p.z0 = {0.5, 0.5};
    const double lambda = 0.3, eps = 0.2;
    const double exact = cutoff_field_energy(p, lambda, eps).total();
    std::vector<double> err;
    for (int n : {64, 128, 256}) {
        auto g = make_grid(DomainKind::Torus, n);
        const auto f = sample_field(g, [&](const Vec2& z) { return cutoff_field(z, p); });
        err.push_back(std::abs(energy_s2(f, {lambda, eps, Functional::FullS2, DomainKind::Torus}).total - exact));
    }
    const double o1 = std::log2(err[0] / err[1]), o2 = std::log2(err[1] / err[2]);
    const bool pass = o1 >= 1.7 && o1 <= 2.3 && o2 >= 1.7 && o2 <= 2.3;
    return {pass, fmt("errors %.2e %.2e %.2e, orders %.3f %.3f (in [1.7, 2.3])", err[0], err[1], err[2], o1, o2)};
}

// ---------------------------------------------------------------------------
// 3. degree quantization

Outcome criterion3() {
    bool pass = true;
    double drift = 0.0;
    for (auto kind : {DomainKind::Disk, DomainKind::Torus})
        for (int n : {128, 256}) {
            auto g = make_grid(kind, n);
            AnsatzParams p;
            p.a = 0.06;
            p.R_cut = kind == DomainKind::Disk ? 0.25 : 0.2;
            p.z0 = g->center();
            const std::optional<double> phase = kind == DomainKind::Disk ? std::optional<double>(0.0) : std::nullopt;
            const auto f = sample_field(g, [&](const Vec2& z) { return cutoff_field(z, p); }, phase);
            const auto q = lattice_degree(f);
            drift = std::max(drift, std::abs(q.real + 1.0));
            pass = pass && q.degree == -1 && std::abs(q.real + 1.0) <= 1e-3;
            const Vec2 c = g->center();
            const auto r = sample_field(g, [&](const Vec2& z) {
                const Vec3 m = cutoff_field(c - (z - c), p);
                return Vec3{m.x, m.y, -m.z};
            }, phase);
            pass = pass && lattice_degree(r).degree == 1;
        }
    return {pass, fmt("degree -1 on disk and torus at n = 128, 256; max |Q + 1| = %.2e; reflection gives +1", drift)};
}

// ---------------------------------------------------------------------------
// 4. existence bracket

Outcome criterion4() {
    bool pass = true;
    std::string detail;
    for (double lambda : {0.3, 0.5}) {
        const auto& s = solve(DomainKind::Disk, 128, lambda, 0.2);
        const double E = s.rep.final.total, lower = kFourPi * (1.0 - lambda * lambda);
        const bool ok = s.rep.converged && s.rep.final.grad_sup <= 1e-6 && E >= lower && E < kFourPi;
        pass = pass && ok;
        detail += fmt("lambda %.1f: E %.5f in [%.4f, %.4f)? %s, grad_sup %.1e; ", lambda, E, lower, kFourPi,
                      ok ? "yes" : "no", s.rep.final.grad_sup);
    }
    return {pass, detail};
}

// ---------------------------------------------------------------------------
// 5. lambda = 0 collapse

Outcome criterion5() {
    const auto& s = solve(DomainKind::Disk, 128, 0.0, 0.2);
    const Vec3 c = rim_value(0.0);
    double dist = 0.0;
    const auto& g = s.field.grid();
    for (std::size_t k = 0; k < g.size(); ++k)
        if (g.active(k)) dist = std::max(dist, geodesic(s.field[k], c));
    const bool pass = dist <= 1e-3 || s.rep.sector_escape;
    return {pass, fmt("sup distance to constant %.2e, sector escape %s, final degree %d", dist,
                      s.rep.sector_escape ? "yes" : "no", s.rep.final.degree)};
}

// ---------------------------------------------------------------------------
// 6. conformal trend

Outcome criterion6() {
    const double eps = 0.2;
    std::vector<double> E, ratio;
    bool converged = true;
    for (double lambda : {0.4, 0.3, 0.2}) {
        const auto& s = solve(DomainKind::Disk, 128, lambda, eps);
        converged = converged && s.rep.converged && s.rep.final.degree == -1;
        E.push_back(s.rep.final.total);
        ratio.push_back(m3_squared_integral(s.field) / (lambda * lambda));
    }
    const bool increasing = E[0] < E[1] && E[1] < E[2];
    const bool below = E[2] < kFourPi;
    const double spread = *std::max_element(ratio.begin(), ratio.end()) / *std::min_element(ratio.begin(), ratio.end());
    const bool pass = converged && increasing && below && spread < 3.0;
    return {pass, fmt("E %.4f %.4f %.4f (increasing %s, below 4pi %s); int m3^2/lambda^2 %.3f %.3f %.3f, factor %.2f (< 3)",
                      E[0], E[1], E[2], increasing ? "yes" : "no", below ? "yes" : "no", ratio[0], ratio[1], ratio[2],
                      spread)};
}

// ---------------------------------------------------------------------------
// 7. core scaling

Outcome criterion7() {
    SweepOptions opt;
    opt.n = 256;
    opt.r_cut = 0.2;
    opt.solve.tol = 1e-6;
    opt.solve.max_iters = 400000;
    const auto rows = large_domain_sweep(0.3, {0.1, 0.07, 0.05}, opt);
    bool ok = true;
    std::string detail;
    for (const auto& r : rows) {
        ok = ok && r.error.empty() && !r.under_resolved && r.converged && r.degree == -1 && r.R_core > 0.0;
        detail += fmt("eps %.2f: R_core/eps %.3f; ", r.eps, r.R_core_over_eps);
    }
    const auto [lo, hi] = core_ratio_range(rows);
    const double spread = hi > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    return {ok && spread <= 2.0, detail + fmt("max/min %.3f (<= 2), delta0 %.1f", spread, kDefaultDelta0)};
}

// ---------------------------------------------------------------------------
// 8. neck decay

Outcome criterion8() {
    const double eps = 0.2;
    const std::vector<double> lambdas{0.3, 0.2, 0.1};
    std::vector<double> neck;
    bool ok = true;
    std::string detail;
    for (double lambda : lambdas) {
        const auto& s = solve(DomainKind::Disk, 128, lambda, eps);
        ok = ok && s.rep.converged && s.rep.final.degree == -1;
        const auto core = core_radius(s.field, eps);
        const double r_in = 10.0 * core.R_core, r_out = 0.25 * s.field.grid().domain_radius();
        if (!(core.R_core > 0.0) || r_in >= r_out) {
            detail += fmt("lambda %.1f: empty annulus (R_core %.4f); ", lambda, core.R_core);
            ok = false;
            neck.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const double e = 0.5 * neck_energy_profile(s.field, core.x_core, {r_in, r_out})[0].energy;
        neck.push_back(e);
        detail += fmt("lambda %.1f: [%.3f, %.3f] exchange %.3e; ", lambda, r_in, r_out, e);
    }
    if (!ok) return {false, detail};
    // C is the least-squares fit of neck = C lambda^2; every row must stay below it up to 25%
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        num += neck[i] * lambdas[i] * lambdas[i];
        den += std::pow(lambdas[i], 4);
    }
    const double C = num / den;
    bool bounded = true;
    for (std::size_t i = 0; i < lambdas.size(); ++i) bounded = bounded && neck[i] <= 1.25 * C * lambdas[i] * lambdas[i];
    const bool decreasing = neck[0] > neck[1] && neck[1] > neck[2];
    return {decreasing && bounded,
            detail + fmt("decreasing %s, fitted C %.3f, within 1.25 C lambda^2 %s", decreasing ? "yes" : "no", C,
                         bounded ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// 9. energy gap probe

Outcome criterion9() {
    const double lambda = 0.1;
    const int n = 64;
    auto g = make_grid(DomainKind::Torus, n);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    double worst = 0.0, max_init = 0.0;
    int converged = 0;
    for (int trial = 0; trial < 20; ++trial) {
        // random low-mode phase, rescaled to a target Dirichlet energy in (0, 0.25]
        std::vector<std::array<double, 4>> modes;
        for (int k = 0; k < 6; ++k) modes.push_back({unit(rng), std::round(2.0 * unit(rng)), std::round(2.0 * unit(rng)), unit(rng)});
        auto phase = [&](const Vec2& z, double s) {
            double phi = 0.0;
            for (const auto& m : modes) phi += s * m[0] * std::sin(kTwoPi * (m[1] * z.x + m[2] * z.y) + 3.0 * m[3]);
            return phi;
        };
        auto dirichlet = [&](double s) {
            const auto f = sample_circle_field(g, [&](const Vec2& z) { return phase_vector(phase(z, s)); });
            return 2.0 * energy_s1(f, 0.0).energy;
        };
        const double target = 0.05 + 0.2 * (0.5 + 0.5 * unit(rng));
        double s = std::sqrt(target / std::max(dirichlet(1.0), 1e-12));
        while (dirichlet(s) > 0.25) s *= 0.95;
        max_init = std::max(max_init, dirichlet(s));
        const auto init = sample_circle_field(g, [&](const Vec2& z) { return phase_vector(phase(z, s)); });
        SolveConfig cfg;
        cfg.max_iters = 100000;
        const auto [out, rep] = minimize_s1(init, lambda, cfg);
        converged += rep.converged ? 1 : 0;
        worst = std::max(worst, rep.distance_to_constant);
    }
    const auto& [wf, wrep] = solve_winding(n, lambda);
    const double floor = 4.0 * std::numbers::pi * std::numbers::pi - 0.5;
    const bool pass = converged == 20 && worst <= 1e-6 && wrep.dirichlet >= floor && wrep.distance_to_constant > 1e-6;
    return {pass, fmt("20 inits with Dirichlet <= %.3f: %d converged, max distance to constant %.2e (<= 1e-6); "
                      "winding (1,0) keeps Dirichlet %.4f (>= %.4f)",
                      max_init, converged, worst, wrep.dirichlet, floor)};
}

// ---------------------------------------------------------------------------
// 10. gradient correctness

template <class V>
std::vector<V> random_tangent(const Field<V>& f, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    const auto& g = f.grid();
    std::vector<V> v(f.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        V r{};
        r.x = nd(rng);
        r.y = nd(rng);
        if constexpr (std::is_same_v<V, Vec3>) r.z = nd(rng);
        if (g.kind() == DomainKind::Disk && !g.interior(k)) continue;
        v[k] = tangent_part(f[k], r);
    }
    return v;
}

template <class V>
Field<V> moved(const Field<V>& f, const std::vector<V>& v, double t) {
    Field<V> out = f;
    for (std::size_t k = 0; k < f.size(); ++k) out[k] = f[k] + t * v[k];
    return out;
}

Outcome criterion10() {
    std::mt19937_64 rng(10);
    std::normal_distribution<double> nd;
    double worst_rel = 0.0, worst_dot = 0.0, worst_pin = 0.0;
    const double t = 1e-6;
    for (int trial = 0; trial < 10; ++trial) {
        const auto kind = trial % 2 == 0 ? DomainKind::Disk : DomainKind::Torus;
        auto g = make_grid(kind, 16 + trial);
        const std::optional<double> phase = kind == DomainKind::Disk ? std::optional<double>(0.1 * trial) : std::nullopt;
        const auto f = sample_field(g, [&](const Vec2&) { return Vec3{nd(rng), nd(rng), nd(rng)}; }, phase);
        const EnergyParams p{0.1 * trial - 0.4, 0.2 + 0.1 * trial, Functional::FullS2, kind};
        const auto grad = grad_s2(f, p);
        for (std::size_t k = 0; k < f.size(); ++k) {
            worst_dot = std::max(worst_dot, std::abs(dot(grad[k], f[k])));
            if (kind == DomainKind::Disk && !g->interior(k)) worst_pin = std::max(worst_pin, norm(grad[k]));
        }
        const auto v = random_tangent(f, rng);
        auto total = [&](const SphereField& s) {
            const auto e = detail::evaluate_s2(s, p.lambda, p.eps, nullptr);
            return e.exchange + e.dmi + e.anisotropy;
        };
        const double fd = (total(moved(f, v, t)) - total(moved(f, v, -t))) / (2.0 * t);
        double an = 0.0;
        for (std::size_t k = 0; k < f.size(); ++k) an += dot(grad[k], v[k]);
        worst_rel = std::max(worst_rel, std::abs(fd - an) / std::abs(an));
    }
    for (int trial = 0; trial < 10; ++trial) {
        auto g = make_grid(DomainKind::Torus, 16 + trial);
        const auto f = sample_circle_field(g, [&](const Vec2&) { return Vec2{nd(rng), nd(rng)}; });
        const double lambda = 0.09 * trial;
        const auto e = energy_s1(f, lambda);
        for (std::size_t k = 0; k < f.size(); ++k) worst_dot = std::max(worst_dot, std::abs(dot(e.gradient[k], f[k])));
        const auto v = random_tangent(f, rng);
        const double fd = (energy_s1(moved(f, v, t), lambda).energy - energy_s1(moved(f, v, -t), lambda).energy) / (2.0 * t);
        double an = 0.0;
        for (std::size_t k = 0; k < f.size(); ++k) an += dot(e.gradient[k], v[k]);
        worst_rel = std::max(worst_rel, std::abs(fd - an) / std::abs(an));
    }
    const bool pass = worst_rel <= 1e-6 && worst_dot <= 1e-12 && worst_pin == 0.0;
    return {pass, fmt("10 S2 + 10 S1 fields: max rel error %.2e (<= 1e-6), max |<grad, m>| %.1e (<= 1e-12), "
                      "rim gradient %.1e",
                      worst_rel, worst_dot, worst_pin)};
}

// ---------------------------------------------------------------------------
// 11. Pohozaev diagnostics

Outcome criterion11() {
    const double lambda = 0.5, eps = 0.2;
    const auto& d128 = solve(DomainKind::Disk, 128, lambda, eps);
    const auto& d256 = solve(DomainKind::Disk, 256, lambda, eps);
    const double rim128 = pohozaev_residual_disk(d128.field, eps, lambda);
    const double rim256 = pohozaev_residual_disk(d256.field, eps, lambda);
    const Vec2 c{0.37, 0.55};
    const auto& s128 = solve_winding(128, lambda);
    const auto& s256 = solve_winding(256, lambda);
    const double ann128 = pohozaev_residual_annulus(s128.first, lambda, 0.2, c);
    const double ann256 = pohozaev_residual_annulus(s256.first, lambda, 0.2, c);
    double trace = 0.0;
    for (const auto* s : {&s128.first, &s256.first})
        for (double v : stress_trace(*s, lambda)) trace = std::max(trace, std::abs(v));
    const bool converged = d128.rep.converged && d256.rep.converged && s128.second.converged && s256.second.converged;
    const bool pass = converged && rim128 >= 1.5 * rim256 && ann128 >= 1.5 * ann256 && trace <= 1e-12;
    return {pass, fmt("rim %.3e -> %.3e (x%.2f), annulus %.3e -> %.3e (x%.2f), both >= 1.5; max |tr T| %.1e",
                      rim128, rim256, rim128 / rim256, ann128, ann256, ann128 / ann256, trace)};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"bimeron acceptance criteria"};
    std::vector<int> only;
    app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 11));
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                         criterion5, criterion6, criterion7, criterion8,
                                                         criterion9, criterion10, criterion11};
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i]();
        } catch (const std::exception& e) {
            out = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %2d: %s  %s [%.0f s]\n", id, out.pass ? "PASS" : "FAIL", out.detail.c_str(), secs);
        std::fflush(stdout);
        failed += out.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
