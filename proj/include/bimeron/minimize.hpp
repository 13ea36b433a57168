#pragma once

/**
 * @file minimize.hpp
 * @brief Sphere-constrained projected gradient descent for the S^2 and S^1 energies.
 *
 * Update m <- normalize(m + t d) with d a descent direction built from the
 * projected exact gradient; rim nodes are never touched. Step rules: fixed
 * step along -g, alternating Barzilai-Borwein steps along -g, or limited-memory
 * BFGS directions (default). The latter two backtrack until an Armijo decrease
 * holds, and every step is capped so no node rotates by more than 0.1 rad.
 */

#include "bimeron/energy.hpp"
#include "bimeron/error.hpp"
#include "bimeron/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <type_traits>
#include <utility>
#include <vector>

namespace bimeron {

enum class StepRule { Fixed, BarzilaiBorwein, LBFGS };

struct SolveConfig {
    int max_iters = 20000;
    std::optional<double> tol;  ///< grad_sup threshold; default 1e-8 max(1, initial grad_sup)
    StepRule step_rule = StepRule::LBFGS;
    double tau = 0.1;            ///< fixed step, or the first trial step under BB
    int degree_check_every = 50;
    std::uint64_t seed = 0;
    int snapshot_every = 0;      ///< 0 disables the snapshot callback

    void validate() const {
        if (max_iters < 1) throw Error("invalid parameter: max_iters must be at least 1");
        if (tol && !(*tol > 0.0)) throw Error("invalid parameter: tol must be positive");
        if (!(tau > 0.0)) throw Error("invalid parameter: tau must be positive");
        if (degree_check_every < 1) throw Error("invalid parameter: degree_check_every must be at least 1");
    }
};

struct MinimizeReport {
    EnergyBreakdown final;
    int iters = 0;
    bool converged = false;
    bool sector_escape = false;
    double tol = 0.0;
    double initial_grad_sup = 0.0;
    std::vector<double> energy_history;
    std::vector<int> degree_history;
};

struct S1Report {
    double energy = 0.0;
    double dirichlet = 0.0;             ///< int |grad m|^2
    double distance_to_constant = 0.0;  ///< max geodesic distance to the normalized mean
    double grad_sup = 0.0;
    int iters = 0;
    bool converged = false;
    double tol = 0.0;
    std::vector<double> energy_history;
};

namespace detail {

template <class V>
struct Evaluation {
    double energy = 0.0;
    std::vector<V> grad;  ///< projected, zero on fixed nodes
};

template <class V>
double dot_all(const std::vector<V>& a, const std::vector<V>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += dot(a[k], b[k]);
    return s;
}

template <class V>
double grad_sup_scaled(const std::vector<V>& g, double h) {
    double s = 0.0;
    for (const auto& v : g) s = std::max(s, norm(v));
    return s / (h * h);
}

struct DescentTrace {
    int iters = 0;
    bool converged = false;
    double tol = 0.0;
    double initial_grad_sup = 0.0;
    double grad_sup = 0.0;
    std::vector<double> energy_history;
};

/**
 * Generic projected descent. `evaluate` returns energy and projected gradient,
 * `movable(k)` marks nodes that may be updated, `on_iter(field, iter)` runs
 * after each accepted step.
 */
template <class V, class Eval, class Movable, class OnIter>
DescentTrace descend(Field<V>& field, const SolveConfig& cfg, Eval&& evaluate, Movable&& movable, OnIter&& on_iter) {
    cfg.validate();
    const double h = field.grid().h();
    const std::size_t size = field.size();
    DescentTrace trace;

    Evaluation<V> cur = evaluate(field);
    if (!std::isfinite(cur.energy)) throw Error("numerical blowup");
    trace.initial_grad_sup = grad_sup_scaled(cur.grad, h);
    trace.tol = cfg.tol.value_or(1e-8 * std::max(1.0, trace.initial_grad_sup));
    trace.energy_history.push_back(cur.energy);

    constexpr double kArmijo = 1e-4;
    constexpr double kMinStep = 1e-14;
    constexpr double kMaxStep = 1e6;
    // Largest nodal rotation per step; keeps long steps from jumping across sectors.
    constexpr double kMaxMove = 0.1;
    constexpr std::size_t kMemory = 12;

    double tau = cfg.tau;
    std::vector<V> prev_x, prev_g, dir(size), trial(size);
    std::vector<std::vector<V>> mem_s, mem_y;
    std::vector<double> mem_rho;

    auto lbfgs_direction = [&]() {
        for (std::size_t k = 0; k < size; ++k) dir[k] = -cur.grad[k];
        const std::size_t m = mem_s.size();
        std::vector<double> alpha(m);
        for (std::size_t i = m; i-- > 0;) {
            alpha[i] = mem_rho[i] * dot_all(mem_s[i], dir);
            for (std::size_t k = 0; k < size; ++k) dir[k] -= alpha[i] * mem_y[i][k];
        }
        if (m > 0) {
            const double gamma = dot_all(mem_s[m - 1], mem_y[m - 1]) / dot_all(mem_y[m - 1], mem_y[m - 1]);
            for (auto& v : dir) v *= gamma;
        }
        for (std::size_t i = 0; i < m; ++i) {
            const double beta = mem_rho[i] * dot_all(mem_y[i], dir);
            for (std::size_t k = 0; k < size; ++k) dir[k] += (alpha[i] - beta) * mem_s[i][k];
        }
        for (std::size_t k = 0; k < size; ++k)
            dir[k] = movable(k) ? tangent_part(field[k], dir[k]) : V{};
    };

    for (int it = 0; it < cfg.max_iters; ++it) {
        trace.grad_sup = grad_sup_scaled(cur.grad, h);
        if (trace.grad_sup <= trace.tol) {
            trace.converged = true;
            break;
        }

        double step = 1.0;
        if (cfg.step_rule == StepRule::LBFGS && !mem_s.empty()) {
            lbfgs_direction();
            if (!(dot_all(dir, cur.grad) < 0.0)) {
                mem_s.clear();
                mem_y.clear();
                mem_rho.clear();
            }
        }
        if (cfg.step_rule != StepRule::LBFGS || mem_s.empty()) {
            for (std::size_t k = 0; k < size; ++k) dir[k] = -cur.grad[k];
            if (cfg.step_rule == StepRule::BarzilaiBorwein && !prev_x.empty()) {
                double ss = 0.0, sy = 0.0, yy = 0.0;
                for (std::size_t k = 0; k < size; ++k) {
                    const V s = field[k] - prev_x[k];
                    const V y = cur.grad[k] - prev_g[k];
                    ss += dot(s, s);
                    sy += dot(s, y);
                    yy += dot(y, y);
                }
                if (sy > 0.0) tau = (it % 2 == 0) ? ss / sy : sy / yy;
                else tau = std::min(2.0 * tau, kMaxStep);
                tau = std::clamp(tau, kMinStep, kMaxStep);
            } else if (cfg.step_rule != StepRule::BarzilaiBorwein) {
                tau = cfg.tau;
            }
            step = tau;
        }

        const double slope = dot_all(cur.grad, dir);
        const double d_max = grad_sup_scaled(dir, 1.0);
        if (d_max > 0.0) step = std::min(step, kMaxMove / d_max);
        const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(cur.energy));
        Evaluation<V> next;
        for (;;) {
            for (std::size_t k = 0; k < size; ++k) {
                if (!movable(k)) {
                    trial[k] = field[k];
                    continue;
                }
                const V v = field[k] + step * dir[k];
                trial[k] = (1.0 / norm(v)) * v;
            }
            std::swap(field.values(), trial);
            next = evaluate(field);
            std::swap(field.values(), trial);
            if (!std::isfinite(next.energy)) {
                if (cfg.step_rule == StepRule::Fixed) throw Error("numerical blowup");
                step *= 0.25;
                if (step < kMinStep) throw Error("numerical blowup");
                continue;
            }
            if (cfg.step_rule == StepRule::Fixed) break;
            const double decrease = cur.energy - next.energy;
            const double wanted = -kArmijo * step * slope;
            if (decrease >= wanted || wanted < roundoff) break;
            step *= 0.5;
            if (step < kMinStep) break;
        }
        if (cfg.step_rule != StepRule::LBFGS) {
            tau = cfg.step_rule == StepRule::Fixed ? tau : step;
            prev_x = field.values();
            prev_g = std::move(cur.grad);
        } else {
            std::vector<V> s_vec(size), y_vec(size);
            for (std::size_t k = 0; k < size; ++k) {
                s_vec[k] = trial[k] - field[k];
                y_vec[k] = next.grad[k] - cur.grad[k];
            }
            const double sy = dot_all(s_vec, y_vec);
            if (sy > 1e-12 * std::sqrt(dot_all(s_vec, s_vec) * dot_all(y_vec, y_vec))) {
                if (mem_s.size() == kMemory) {
                    mem_s.erase(mem_s.begin());
                    mem_y.erase(mem_y.begin());
                    mem_rho.erase(mem_rho.begin());
                }
                mem_s.push_back(std::move(s_vec));
                mem_y.push_back(std::move(y_vec));
                mem_rho.push_back(1.0 / sy);
            }
        }
        std::swap(field.values(), trial);
        cur = std::move(next);
        trace.iters = it + 1;
        trace.energy_history.push_back(cur.energy);
        on_iter(field, trace.iters);
    }
    trace.grad_sup = grad_sup_scaled(cur.grad, h);
    if (!trace.converged && trace.grad_sup <= trace.tol) trace.converged = true;
    return trace;
}

} // namespace detail

using SnapshotFn = std::function<void(const SphereField&, int)>;

/**
 * Minimizes energy_s2 from `init`. A change of lattice degree (or an
 * exceptional lattice triangle) sets `sector_escape` but does not stop the run.
 */
inline std::pair<SphereField, MinimizeReport> minimize_s2(const SphereField& init, const EnergyParams& p,
                                                          const SolveConfig& cfg, const SnapshotFn& snapshot = {}) {
    detail::check_s2(init, p);
    SphereField field = init;
    const DomainGrid& g = field.grid();
    MinimizeReport rep;

    auto degree_or_escape = [&](const SphereField& f) -> std::optional<int> {
        try {
            return lattice_degree(f).degree;
        } catch (const Error&) {
            return std::nullopt;
        }
    };
    const auto initial_degree = degree_or_escape(field);
    if (initial_degree) rep.degree_history.push_back(*initial_degree);

    auto evaluate = [&](const SphereField& f) {
        detail::Evaluation<Vec3> e;
        const auto t = detail::evaluate_s2(f, p.lambda, p.eps, &e.grad);
        detail::project_and_pin(f, e.grad);
        e.energy = t.exchange + t.dmi + t.anisotropy;
        return e;
    };
    auto movable = [&](std::size_t k) { return g.kind() == DomainKind::Torus || g.interior(k); };
    auto on_iter = [&](const SphereField& f, int iter) {
        if (iter % cfg.degree_check_every == 0) {
            const auto d = degree_or_escape(f);
            if (d) rep.degree_history.push_back(*d);
            if (!d || !initial_degree || *d != *initial_degree) rep.sector_escape = true;
        }
        if (snapshot && cfg.snapshot_every > 0 && iter % cfg.snapshot_every == 0) snapshot(f, iter);
    };

    auto trace = detail::descend(field, cfg, evaluate, movable, on_iter);
    rep.final = energy_s2(field, p);
    if (!rep.final.degree_defined || !initial_degree || rep.final.degree != *initial_degree) rep.sector_escape = true;
    if (rep.final.degree_defined) rep.degree_history.push_back(rep.final.degree);
    rep.iters = trace.iters;
    rep.converged = trace.converged;
    rep.tol = trace.tol;
    rep.initial_grad_sup = trace.initial_grad_sup;
    rep.energy_history = std::move(trace.energy_history);
    return {std::move(field), std::move(rep)};
}

/// Normalized mean of a circle field and the largest geodesic distance from it.
inline std::pair<Vec2, double> best_fit_constant(const CircleField& field) {
    Vec2 mean{};
    for (const auto& v : field.values()) mean += v;
    const double len = norm(mean);
    if (!(len > 0.0)) return {Vec2{1.0, 0.0}, std::numbers::pi};
    mean *= 1.0 / len;
    double worst = 0.0;
    for (const auto& v : field.values()) worst = std::max(worst, geodesic(mean, v));
    return {mean, worst};
}

inline std::pair<CircleField, S1Report> minimize_s1(const CircleField& init, double lambda, const SolveConfig& cfg) {
    if (init.grid().kind() != DomainKind::Torus) throw Error("circle fields live on the torus");
    if (!(std::abs(lambda) < 1.0)) throw Error("loss of coercivity");
    CircleField field = init;
    auto evaluate = [&](const CircleField& f) {
        auto e = energy_s1(f, lambda);
        return detail::Evaluation<Vec2>{e.energy, std::move(e.gradient)};
    };
    auto trace = detail::descend(field, cfg, evaluate, [](std::size_t) { return true; },
                                 [](const CircleField&, int) {});
    S1Report rep;
    const auto e = energy_s1(field, lambda);
    rep.energy = e.energy;
    rep.dirichlet = e.dirichlet();
    rep.distance_to_constant = best_fit_constant(field).second;
    rep.grad_sup = trace.grad_sup;
    rep.iters = trace.iters;
    rep.converged = trace.converged;
    rep.tol = trace.tol;
    rep.energy_history = std::move(trace.energy_history);
    return {std::move(field), std::move(rep)};
}

/**
 * Adds independent tangent noise of sup-norm at most `magnitude` to every
 * movable node and renormalizes. Each node moves by less than `magnitude` in
 * angle, so the lattice degree is kept as long as `magnitude` stays well below
 * the smallest neighbor angle gap; callers check with lattice_degree.
 */
template <class V>
Field<V> perturb(const Field<V>& field, double magnitude, std::uint64_t seed) {
    if (!(magnitude >= 0.0)) throw Error("invalid parameter: magnitude must be non-negative");
    Field<V> out = field;
    if (magnitude == 0.0) return out;
    const DomainGrid& g = field.grid();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (!(g.kind() == DomainKind::Torus || g.interior(k))) continue;
        V r{};
        r.x = normal(rng);
        r.y = normal(rng);
        if constexpr (std::is_same_v<V, Vec3>) r.z = normal(rng);
        V t = tangent_part(out[k], r);
        const double len = norm(t);
        const double amp = magnitude * unit(rng);
        if (len > 0.0) t *= amp / len;
        const V v = out[k] + t;
        out[k] = (1.0 / norm(v)) * v;
    }
    return out;
}

} // namespace bimeron
