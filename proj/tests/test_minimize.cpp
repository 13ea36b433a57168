#include "bimeron/ansatz.hpp"
#include "bimeron/energy.hpp"
#include "bimeron/minimize.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace bimeron;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

SphereField disk_ansatz(int n, double a) {
    AnsatzParams p;
    p.a = a;
    p.R_cut = 0.3;
    return sample_field(make_grid(DomainKind::Disk, n), [&](const Vec2& z) { return cutoff_field(z, p); }, 0.0);
}

/// Up to the roundoff allowance of the line search.
bool non_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[i - 1] + 1e-13 * std::max(1.0, std::abs(v[i - 1]))) return false;
    return true;
}

} // namespace

TEST(Minimize, DescentKeepsRimAndLowersEnergy) {
    const auto init = disk_ansatz(40, 0.2);
    const EnergyParams p{0.5, 0.4, Functional::FullS2, DomainKind::Disk};
    for (auto rule : {StepRule::LBFGS, StepRule::BarzilaiBorwein, StepRule::Fixed}) {
        SolveConfig cfg;
        cfg.step_rule = rule;
        cfg.max_iters = 300;
        cfg.tau = 0.02;
        const auto [out, rep] = minimize_s2(init, p, cfg);
        EXPECT_TRUE(non_increasing(rep.energy_history)) << static_cast<int>(rule);
        EXPECT_LT(rep.final.total, energy_s2(init, p).total);
        EXPECT_LE(out.max_norm_defect(), 1e-12);
        const auto& g = out.grid();
        for (std::size_t k = 0; k < g.size(); ++k)
            if (!g.interior(k)) {
                EXPECT_EQ(out[k], init[k]);
            }
    }
}

TEST(Minimize, ConvergesAndKeepsDegree) {
    const auto init = disk_ansatz(48, 0.25);
    const EnergyParams p{0.5, 0.5, Functional::FullS2, DomainKind::Disk};
    SolveConfig cfg;
    cfg.tol = 1e-6;
    cfg.max_iters = 20000;
    const auto [out, rep] = minimize_s2(init, p, cfg);
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(rep.final.grad_sup, 1e-6);
    EXPECT_FALSE(rep.sector_escape);
    EXPECT_EQ(rep.final.degree, -1);
    EXPECT_LE(el_residual(out, p).sup, 1e-6);
}

TEST(Minimize, IsDeterministic) {
    const auto init = perturb(disk_ansatz(32, 0.2), 0.05, 42);
    const EnergyParams p{0.3, 0.3, Functional::FullS2, DomainKind::Disk};
    SolveConfig cfg;
    cfg.max_iters = 200;
    const auto a = minimize_s2(init, p, cfg);
    const auto b = minimize_s2(init, p, cfg);
    EXPECT_EQ(a.first.values(), b.first.values());
    EXPECT_EQ(a.second.energy_history, b.second.energy_history);
}

TEST(Minimize, SnapshotsAndDegreeHistory) {
    const auto init = disk_ansatz(32, 0.2);
    const EnergyParams p{0.3, 0.3, Functional::FullS2, DomainKind::Disk};
    SolveConfig cfg;
    cfg.max_iters = 100;
    cfg.snapshot_every = 25;
    cfg.degree_check_every = 10;
    std::vector<int> seen;
    const auto [out, rep] = minimize_s2(init, p, cfg, [&](const SphereField&, int it) { seen.push_back(it); });
    EXPECT_EQ(seen, (std::vector<int>{25, 50, 75, 100}));
    EXPECT_GE(rep.degree_history.size(), 10u);
}

TEST(Minimize, PerturbIsSeededAndSmall) {
    const auto f = disk_ansatz(32, 0.2);
    const auto a = perturb(f, 0.01, 3);
    const auto b = perturb(f, 0.01, 3);
    const auto c = perturb(f, 0.01, 4);
    EXPECT_EQ(a.values(), b.values());
    EXPECT_NE(a.values(), c.values());
    const auto& g = f.grid();
    for (std::size_t k = 0; k < f.size(); ++k) {
        EXPECT_LE(geodesic(a[k], f[k]), 0.01 + 1e-12);
        if (!g.interior(k)) {
            EXPECT_EQ(a[k], f[k]);
        }
    }
    EXPECT_THROW(perturb(f, -1.0, 0), Error);
}

TEST(Minimize, ConfigValidation) {
    const auto f = disk_ansatz(16, 0.2);
    const EnergyParams p{0.3, 0.3, Functional::FullS2, DomainKind::Disk};
    SolveConfig cfg;
    cfg.max_iters = 0;
    EXPECT_THROW(minimize_s2(f, p, cfg), Error);
    cfg = {};
    cfg.tol = -1.0;
    EXPECT_THROW(minimize_s2(f, p, cfg), Error);
    cfg = {};
    cfg.degree_check_every = 0;
    EXPECT_THROW(minimize_s2(f, p, cfg), Error);
}

TEST(Minimize, S1SmallEnergyRelaxesToConstant) {
    auto g = make_grid(DomainKind::Torus, 32);
    const auto init = sample_circle_field(g, [](const Vec2& z) {
        return phase_vector(0.05 * std::sin(kTwoPi * z.x) + 0.03 * std::cos(kTwoPi * (z.x + 2.0 * z.y)));
    });
    SolveConfig cfg;
    cfg.max_iters = 20000;
    const auto [out, rep] = minimize_s1(init, 0.1, cfg);
    EXPECT_TRUE(rep.converged);
    EXPECT_LT(rep.distance_to_constant, 1e-6);
    EXPECT_TRUE(non_increasing(rep.energy_history));
}

TEST(Minimize, S1WindingIsRetained) {
    auto g = make_grid(DomainKind::Torus, 32);
    const auto init = sample_circle_field(g, [](const Vec2& z) { return phase_vector(kTwoPi * z.x + 0.2 * std::sin(kTwoPi * z.y)); });
    SolveConfig cfg;
    cfg.max_iters = 5000;
    const auto [out, rep] = minimize_s1(init, 0.1, cfg);
    EXPECT_GT(rep.distance_to_constant, 1.0);
    EXPECT_GE(rep.dirichlet, 4.0 * std::numbers::pi * std::numbers::pi - 0.5);
    EXPECT_THROW(minimize_s1(init, 1.0, cfg), Error);
}
