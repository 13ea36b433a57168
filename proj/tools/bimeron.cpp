// bimeron: command-line driver for ansatz, energy, minimization, sweeps and checks.

#include "bimeron/ansatz.hpp"
#include "bimeron/energy.hpp"
#include "bimeron/experiments.hpp"
#include "bimeron/field_io.hpp"
#include "bimeron/minimize.hpp"
#include "bimeron/run_config.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bimeron;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitAudit = 2;

/// Relative error threshold of the `verify` suite.
constexpr double kVerifyTol = 1e-8;

struct Context {
    RunConfig cfg;
    KeyValues kv;
    fs::path out;
};

json breakdown_json(const EnergyBreakdown& e) {
    json j;
    j["exchange"] = e.exchange;
    j["dmi"] = e.dmi;
    j["anisotropy"] = e.anisotropy;
    j["total"] = e.total;
    j["degree_defined"] = e.degree_defined;
    if (e.degree_defined) {
        j["degree"] = e.degree;
        j["degree_real"] = e.degree_real;
    }
    j["grad_sup"] = e.grad_sup;
    return j;
}

json params_json(const EnergyParams& p, DomainKind kind) {
    return {{"lambda", p.lambda},
            {"eps", p.eps},
            {"functional", p.functional == Functional::FullS2 ? "full_s2" : "easy_plane_s1"},
            {"domain", to_string(kind)}};
}

json audit_json(const Audit& audit) {
    json entries = json::array();
    for (const auto& e : audit.entries) {
        json j{{"lambda", e.lambda},
               {"eps", e.eps},
               {"skipped", e.skipped},
               {"topological_lower", e.topological_lower},
               {"coercive_lower", e.coercive_lower},
               {"pass", e.pass()}};
        if (e.upper) {
            j["upper"] = *e.upper;
            j["upper_bound"] = e.upper_bound;
            j["slack"] = e.slack;
        }
        entries.push_back(j);
    }
    return {{"pass", audit.pass()}, {"entries", entries}};
}

void save_snapshot(const Context& ctx, const std::string& name, const SphereField& f, const json& extra = {}) {
    const std::string path = (ctx.out / name).string();
    save_field(path, f);
    json side{{"format", kFieldMagic},
              {"params", params_json(ctx.cfg.params, f.grid().kind())},
              {"config", ctx.cfg.to_json()}};
    if (f.boundary_phase()) side["boundary_phase"] = *f.boundary_phase();
    if (!extra.is_null()) side.update(extra);
    write_json(sidecar_path(path), side);
}

/// Ansatz parameters with the domain-dependent defaults filled in.
AnsatzParams resolved_ansatz(RunConfig& cfg, const DomainGrid& g) {
    AnsatzParams ap = cfg.ansatz;
    if (!cfg.a_given) ap.a = initial_half_separation(cfg.params.lambda, cfg.params.eps, g.h());
    if (!cfg.r_cut_given) ap.R_cut = g.kind() == DomainKind::Disk ? 0.25 : 0.2;
    if (!cfg.z0_given) ap.z0 = g.center();
    ap.validate(g.kind() == DomainKind::Disk);
    cfg.ansatz = ap;
    return ap;
}

SphereField ansatz_field(RunConfig& cfg) {
    auto grid = make_grid(cfg.domain, cfg.n);
    const AnsatzParams ap = resolved_ansatz(cfg, *grid);
    const std::optional<double> phase =
        cfg.domain == DomainKind::Disk ? std::optional<double>(ap.c_phase) : std::nullopt;
    return sample_field(grid, [&](const Vec2& z) { return cutoff_field(z, ap); }, phase);
}

/// The input snapshot when given, otherwise the cut-off ansatz on the configured grid.
SphereField initial_field(Context& ctx) {
    if (ctx.cfg.input.empty()) return ansatz_field(ctx.cfg);
    auto f = load_field<Vec3>(ctx.cfg.input);
    const bool domain_set = ctx.kv.count("domain") > 0;
    const bool n_set = ctx.kv.count("n") > 0;
    if ((domain_set && f.grid().kind() != ctx.cfg.domain) || (n_set && f.grid().n() != ctx.cfg.n))
        throw Error("domain mismatch: " + ctx.cfg.input + " is " + to_string(f.grid().kind()) + " n=" +
                    std::to_string(f.grid().n()));
    ctx.cfg.domain = f.grid().kind();
    ctx.cfg.n = f.grid().n();
    return f;
}

EnergyParams energy_params(const Context& ctx) {
    EnergyParams p = ctx.cfg.params;
    p.domain = ctx.cfg.domain;
    p.validate();
    return p;
}

int cmd_ansatz(Context& ctx) {
    const auto f = ansatz_field(ctx.cfg);
    const auto p = energy_params(ctx);
    const auto e = energy_s2(f, p);
    const auto& ap = ctx.cfg.ansatz;
    json report{{"config", ctx.cfg.to_json()}, {"lattice", breakdown_json(e)}};
    if (ap.c_phase == 0.0) {
        const auto parts = cutoff_field_energy(ap, p.lambda, p.eps);
        report["continuum"] = {{"exchange", parts.exchange},
                               {"dmi", parts.dmi},
                               {"anisotropy", parts.anisotropy},
                               {"total", parts.total()}};
    }
    save_snapshot(ctx, "ansatz.field", f);
    write_json((ctx.out / "ansatz.json").string(), report);
    std::printf("ansatz: %s n=%d a=%.6g R_cut=%.6g E=%.10g degree=%d\n", to_string(ctx.cfg.domain).c_str(),
                ctx.cfg.n, ap.a, ap.R_cut, e.total, e.degree);
    return kExitOk;
}

int cmd_energy(Context& ctx) {
    const auto f = initial_field(ctx);
    const auto p = energy_params(ctx);
    const auto e = energy_s2(f, p);
    json report{{"config", ctx.cfg.to_json()}, {"params", params_json(p, ctx.cfg.domain)}, {"energy", breakdown_json(e)}};
    write_json((ctx.out / "energy.json").string(), report);
    std::printf("energy: total=%.10g exchange=%.10g dmi=%.10g anisotropy=%.10g degree=%s\n", e.total, e.exchange,
                e.dmi, e.anisotropy, e.degree_defined ? std::to_string(e.degree).c_str() : "undefined");
    return kExitOk;
}

int cmd_minimize(Context& ctx) {
    auto init = initial_field(ctx);
    if (ctx.cfg.perturb > 0.0) init = perturb(init, ctx.cfg.perturb, ctx.cfg.seed);
    const auto p = energy_params(ctx);
    auto snapshot = [&](const SphereField& f, int iter) {
        char name[64];
        std::snprintf(name, sizeof name, "snap_%07d.field", iter);
        save_snapshot(ctx, name, f, json{{"iter", iter}});
    };
    auto [field, rep] = minimize_s2(init, p, ctx.cfg.solve, snapshot);

    SweepRow row;
    row.lambda = p.lambda;
    row.eps = p.eps;
    row.h = field.grid().h();
    row.total = rep.final.total;
    row.exchange = rep.final.exchange;
    row.dmi = rep.final.dmi;
    row.anisotropy = rep.final.anisotropy;
    row.degree = rep.final.degree;
    const Audit audit = bound_audit({row});

    json report{{"config", ctx.cfg.to_json()},
                {"params", params_json(p, ctx.cfg.domain)},
                {"final", breakdown_json(rep.final)},
                {"iters", rep.iters},
                {"converged", rep.converged},
                {"sector_escape", rep.sector_escape},
                {"tol", rep.tol},
                {"initial_grad_sup", rep.initial_grad_sup},
                {"m3_sq", m3_squared_integral(field)},
                {"energy_history", rep.energy_history},
                {"degree_history", rep.degree_history},
                {"audit", audit_json(audit)}};
    save_snapshot(ctx, "minimized.field", field, json{{"energy", breakdown_json(rep.final)}});
    write_json((ctx.out / "minimize.json").string(), report);
    std::printf("minimize: E=%.10g degree=%d iters=%d converged=%d sector_escape=%d audit=%s\n", rep.final.total,
                rep.final.degree, rep.iters, rep.converged ? 1 : 0, rep.sector_escape ? 1 : 0,
                audit.pass() ? "pass" : "FAIL");
    return audit.pass() ? kExitOk : kExitAudit;
}

int finish_sweep(Context& ctx, const std::vector<SweepRow>& rows, const char* label) {
    {
        std::ofstream csv(ctx.out / "sweep.csv");
        if (!csv) throw Error("cannot write " + (ctx.out / "sweep.csv").string());
        csv << "# config " << ctx.cfg.to_json().dump() << '\n' << sweep_csv(rows);
    }
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].field) save_snapshot(ctx, "row_" + std::to_string(i) + ".field", *rows[i].field);
    const Audit audit = bound_audit(rows);
    json doc = audit_json(audit);
    doc["schema"] = kSweepSchema;
    doc["config"] = ctx.cfg.to_json();
    const auto [lo, hi] = core_ratio_range(rows);
    if (hi > 0.0) doc["core_ratio_range"] = {lo, hi};
    write_json((ctx.out / "audit.json").string(), doc);
    int failed = 0;
    for (const auto& r : rows) failed += r.error.empty() ? 0 : 1;
    std::printf("%s: %zu rows, %d errors, audit=%s\n", label, rows.size(), failed, audit.pass() ? "pass" : "FAIL");
    if (failed > 0) return kExitError;
    return audit.pass() ? kExitOk : kExitAudit;
}

SweepOptions sweep_options(const RunConfig& cfg) {
    SweepOptions opt;
    opt.domain = cfg.domain;
    opt.n = cfg.n;
    opt.solve = cfg.solve;
    opt.delta0 = cfg.delta0;
    opt.threads = cfg.threads;
    opt.keep_fields = true;
    if (cfg.r_cut_given) opt.r_cut = cfg.ansatz.R_cut;
    else if (cfg.domain == DomainKind::Torus) opt.r_cut = 0.2;
    return opt;
}

int cmd_sweep_conformal(Context& ctx) {
    const auto rows = conformal_sweep(ctx.cfg.lambdas, ctx.cfg.params.eps, sweep_options(ctx.cfg));
    return finish_sweep(ctx, rows, "sweep-conformal");
}

int cmd_sweep_eps(Context& ctx) {
    ctx.cfg.domain = DomainKind::Torus;
    const auto rows = large_domain_sweep(ctx.cfg.params.lambda, ctx.cfg.eps_list, sweep_options(ctx.cfg));
    return finish_sweep(ctx, rows, "sweep-eps");
}

int cmd_verify(Context& ctx) {
    json cases = json::array();
    double worst = 0.0;
    auto record = [&](const std::string& name, json args, double closed, double quad) {
        const double rel = std::abs(closed - quad) / std::max(std::abs(quad), 1e-300);
        worst = std::max(worst, rel);
        args["check"] = name;
        args["closed_form"] = closed;
        args["quadrature"] = quad;
        args["rel_error"] = rel;
        cases.push_back(args);
    };
    for (double R : {0.1, 0.5, 1.0})
        for (double a : {0.01, 0.05, 0.2})
            for (double lambda : {0.0, 0.3, 0.7})
                for (double eps : {0.05, 0.2, kInfiniteEps}) {
                    record("disk", {{"R", R}, {"a", a}, {"lambda", lambda}, {"eps", std::isinf(eps) ? -1.0 : eps}},
                           disk_energy_closed_form(R, a, lambda, eps), quadrature_disk_energy(R, a, lambda, eps));
                }
    for (double r : {0.05, 0.2, 0.5})
        for (double z0 : {0.0, 0.03, 0.3})
            for (double a : {0.01, 0.1})
                record("offset_disk", {{"r", r}, {"z0", z0}, {"a", a}}, offset_disk_energy(r, z0, a),
                       quadrature_offset_disk_energy(r, z0, a));
    for (double a : {0.01, 0.05}) {
        AnsatzParams ap;
        ap.a = a;
        const std::vector<double> radii{0.0, 0.1, 0.2, 0.4};
        const auto rows = neck_energy_profile([&](const Vec2& z) { return bimeron_prototype(z, ap); }, Vec2{}, radii, 1e-3 * a);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double ro = rows[i].r_out, ri = rows[i].r_in;
            const double closed = 2.0 * (disk_energy_parts(ro, a, 0.0, kInfiniteEps).exchange -
                                         (ri > 0.0 ? disk_energy_parts(ri, a, 0.0, kInfiniteEps).exchange : 0.0));
            record("annulus_dirichlet", {{"a", a}, {"r_in", ri}, {"r_out", ro}}, closed, rows[i].energy);
        }
    }
    const bool pass = worst <= kVerifyTol;
    write_json((ctx.out / "verify.json").string(), {{"config", ctx.cfg.to_json()},
                                                     {"max_rel_error", worst},
                                                     {"threshold", kVerifyTol},
                                                     {"pass", pass},
                                                     {"cases", cases}});
    std::printf("verify: %zu cases, max relative error %.3e (%s)\n", cases.size(), worst, pass ? "pass" : "FAIL");
    return pass ? kExitOk : kExitAudit;
}

int cmd_neck(Context& ctx) {
    if (ctx.cfg.input.empty()) throw Error("neck needs an input field (input = path)");
    const auto f = initial_field(ctx);
    const auto core = core_radius(f, ctx.cfg.params.eps, ctx.cfg.delta0);
    const DomainGrid& g = f.grid();
    std::vector<double> radii = ctx.cfg.radii;
    if (radii.empty()) {
        const double lo = std::max(2.0 * core.R_core, 4.0 * g.h());
        const double hi = g.kind() == DomainKind::Torus ? 0.5 : 1.0 - norm(core.x_core);
        for (int i = 0; i <= 8; ++i) radii.push_back(lo * std::pow(hi / lo, i / 8.0));
        radii.back() = hi;
    }
    const auto rows = neck_energy_profile(f, core.x_core, radii);
    json out = json::array();
    for (const auto& r : rows)
        out.push_back({{"r_in", r.r_in}, {"r_out", r.r_out}, {"energy", r.energy}, {"oscillation", r.oscillation}});
    write_json((ctx.out / "neck.json").string(), {{"config", ctx.cfg.to_json()},
                                                   {"R_core", core.R_core},
                                                   {"x_core", {core.x_core.x, core.x_core.y}},
                                                   {"annuli", out}});
    double total = 0.0;
    for (const auto& r : rows) total += r.energy;
    std::printf("neck: %zu annuli, R_core=%.6g, total Dirichlet energy %.6g\n", rows.size(), core.R_core, total);
    return kExitOk;
}

int dispatch(Context& ctx) {
    const std::string& c = ctx.cfg.command;
    if (c == "ansatz") return cmd_ansatz(ctx);
    if (c == "energy") return cmd_energy(ctx);
    if (c == "minimize") return cmd_minimize(ctx);
    if (c == "sweep-conformal") return cmd_sweep_conformal(ctx);
    if (c == "sweep-eps") return cmd_sweep_eps(ctx);
    if (c == "verify") return cmd_verify(ctx);
    return cmd_neck(ctx);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chiral bimeron energies, minimizers and sweeps"};
    app.allow_extras();
    std::string command, config_path;
    app.add_option("command", command, "ansatz | energy | minimize | sweep-conformal | sweep-eps | verify | neck");
    app.add_option("--config", config_path, "key = value file; flags override it");
    std::map<std::string, std::string> flags;
    for (const auto& key : config_keys()) {
        if (key == "command") continue;
        app.add_option("--" + key, flags[key]);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitError;
    }
    try {
        for (const auto& extra : app.remaining()) {
            std::string key = extra;
            if (key.rfind("--", 0) == 0) key = key.substr(2);
            detail::check_key(key.substr(0, key.find('=')));
            throw Error("unexpected argument '" + extra + "'");
        }
        Context ctx;
        if (!config_path.empty()) ctx.kv = read_config_file(config_path);
        for (const auto& [key, value] : flags)
            if (app.count("--" + key) > 0) ctx.kv[key] = value;
        if (!command.empty()) ctx.kv["command"] = command;
        ctx.cfg = resolve_config(ctx.kv);
        ctx.out = ctx.cfg.out_dir;
        fs::create_directories(ctx.out);
        return dispatch(ctx);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "bimeron: error: %s\n", e.what());
        return kExitError;
    }
}
