#pragma once

/**
 * @file run_config.hpp
 * @brief Key-value run configuration shared by the CLI subcommands.
 *
 * File syntax: one `key = value` per line, `#` starts a comment. Lists are
 * comma separated. Command-line flags `--key value` override file entries.
 */

#include "bimeron/ansatz.hpp"
#include "bimeron/energy.hpp"
#include "bimeron/error.hpp"
#include "bimeron/experiments.hpp"
#include "bimeron/grid.hpp"
#include "bimeron/minimize.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace bimeron {

using KeyValues = std::map<std::string, std::string>;

inline const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "command", "domain", "n", "lambda", "eps", "a", "r_cut", "c_phase", "z0_x", "z0_y",
        "max_iters", "tol", "step_rule", "tau", "degree_check_every", "snapshot_every", "seed",
        "perturb", "out_dir", "threads", "lambdas", "eps_list", "delta0", "input", "radii"};
    return keys;
}

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> names = {"ansatz", "energy", "minimize", "sweep-conformal",
                                                   "sweep-eps", "verify", "neck"};
    return names;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
    return out;
}

inline void check_key(const std::string& key) {
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
        throw Error("unknown key '" + key + "'; valid keys: " + join(keys));
}

inline double to_double(const std::string& key, const std::string& v) {
    if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || *end != '\0') throw Error("bad value for " + key + ": '" + v + "'");
    return d;
}

inline long long to_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const long long i = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || *end != '\0') throw Error("bad value for " + key + ": '" + v + "'");
    return i;
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    return out;
}

} // namespace detail

inline KeyValues parse_config_text(const std::string& text, const std::string& source = "config") {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        detail::check_key(key);
        kv[key] = detail::trim(line.substr(eq + 1));
    }
    return kv;
}

inline KeyValues read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

struct RunConfig {
    std::string command;
    DomainKind domain = DomainKind::Disk;
    int n = 128;
    EnergyParams params{0.3, 0.2, Functional::FullS2, std::nullopt};
    AnsatzParams ansatz{};
    bool a_given = false;
    bool r_cut_given = false;
    bool z0_given = false;
    SolveConfig solve{};
    double perturb = 0.0;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    int threads = 0;
    std::vector<double> lambdas{0.4, 0.3, 0.2};
    std::vector<double> eps_list{0.1, 0.07, 0.05};
    double delta0 = kDefaultDelta0;
    std::string input;
    std::vector<double> radii;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["command"] = command;
        j["domain"] = to_string(domain);
        j["n"] = n;
        j["lambda"] = params.lambda;
        j["eps"] = params.eps;
        j["a"] = ansatz.a;
        j["r_cut"] = ansatz.R_cut;
        j["c_phase"] = ansatz.c_phase;
        j["z0"] = {ansatz.z0.x, ansatz.z0.y};
        j["max_iters"] = solve.max_iters;
        if (solve.tol) j["tol"] = *solve.tol;
        j["step_rule"] = solve.step_rule == StepRule::Fixed ? "fixed"
                         : solve.step_rule == StepRule::BarzilaiBorwein ? "bb" : "lbfgs";
        j["tau"] = solve.tau;
        j["degree_check_every"] = solve.degree_check_every;
        j["snapshot_every"] = solve.snapshot_every;
        j["seed"] = seed;
        j["perturb"] = perturb;
        j["out_dir"] = out_dir;
        j["threads"] = threads > 0 ? threads : default_threads();
        j["lambdas"] = lambdas;
        j["eps_list"] = eps_list;
        j["delta0"] = delta0;
        j["input"] = input;
        j["radii"] = radii;
        return j;
    }
};

/// Typed configuration from merged key-values; unset keys keep their defaults.
inline RunConfig resolve_config(const KeyValues& kv) {
    using namespace detail;
    RunConfig c;
    for (const auto& [key, v] : kv) {
        check_key(key);
        if (key == "command") c.command = v;
        else if (key == "domain") c.domain = parse_domain_kind(v);
        else if (key == "n") c.n = static_cast<int>(to_int(key, v));
        else if (key == "lambda") c.params.lambda = to_double(key, v);
        else if (key == "eps") c.params.eps = to_double(key, v);
        else if (key == "a") { c.ansatz.a = to_double(key, v); c.a_given = true; }
        else if (key == "r_cut") { c.ansatz.R_cut = to_double(key, v); c.r_cut_given = true; }
        else if (key == "c_phase") c.ansatz.c_phase = to_double(key, v);
        else if (key == "z0_x") { c.ansatz.z0.x = to_double(key, v); c.z0_given = true; }
        else if (key == "z0_y") { c.ansatz.z0.y = to_double(key, v); c.z0_given = true; }
        else if (key == "max_iters") c.solve.max_iters = static_cast<int>(to_int(key, v));
        else if (key == "tol") c.solve.tol = to_double(key, v);
        else if (key == "step_rule") {
            if (v == "fixed") c.solve.step_rule = StepRule::Fixed;
            else if (v == "bb") c.solve.step_rule = StepRule::BarzilaiBorwein;
            else if (v == "lbfgs") c.solve.step_rule = StepRule::LBFGS;
            else throw Error("bad value for step_rule: '" + v + "' (fixed, bb, lbfgs)");
        }
        else if (key == "tau") c.solve.tau = to_double(key, v);
        else if (key == "degree_check_every") c.solve.degree_check_every = static_cast<int>(to_int(key, v));
        else if (key == "snapshot_every") c.solve.snapshot_every = static_cast<int>(to_int(key, v));
        else if (key == "seed") c.seed = static_cast<std::uint64_t>(to_int(key, v));
        else if (key == "perturb") c.perturb = to_double(key, v);
        else if (key == "out_dir") c.out_dir = v;
        else if (key == "threads") c.threads = static_cast<int>(to_int(key, v));
        else if (key == "lambdas") c.lambdas = to_list(key, v);
        else if (key == "eps_list") c.eps_list = to_list(key, v);
        else if (key == "delta0") c.delta0 = to_double(key, v);
        else if (key == "input") c.input = v;
        else if (key == "radii") c.radii = to_list(key, v);
    }
    const auto& names = commands();
    if (std::find(names.begin(), names.end(), c.command) == names.end())
        throw Error("unknown command '" + c.command + "'; valid commands: " + join(names));
    c.solve.seed = c.seed;
    c.solve.validate();
    return c;
}

} // namespace bimeron
