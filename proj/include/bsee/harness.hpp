#pragma once

#include <cstdlib>
#include <iostream>

#include "scenarios.hpp"

namespace bsee {

//Run `run` exits 0 when every check passes, 1 on a failed check, 2 on a
//configuration error (unknown scenario or key, malformed value).
enum ExitCode { kExitPass = 0, kExitCheckFailed = 1, kExitConfigError = 2 };

inline const Scenario& require_scenario(const std::string& name) {
    const Scenario* sc = find_scenario(name);
    if (sc) return *sc;
    std::string best;
    int best_d = 1 << 20;
    for (const auto& s : scenario_registry()) {
        int d = detail::edit_distance(name, s.name);
        if (d < best_d) {
            best_d = d;
            best = s.name;
        }
    }
    std::string msg = "unknown scenario '" + name + "'";
    if (best_d <= 4) msg += " (did you mean '" + best + "'?)";
    throw ConfigError(msg + "; see 'list'");
}

//--out flag wins, then the BSEE_LAB_OUT environment variable, then ./runs.
inline std::filesystem::path resolve_out_root(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("BSEE_LAB_OUT"); env && *env) return env;
    return "runs";
}

inline Config load_cli_config(const std::string& config_file, const std::vector<std::string>& overrides) {
    Config user;
    if (!config_file.empty()) user = parse_config_file(config_file);
    user.merge_from(parse_overrides(overrides));
    return user;
}

struct RunOutcome {
    RunReport report;
    std::filesystem::path run_dir;
    double wall_seconds = 0.0;
};

//Deterministic per-configuration directory name: reruns overwrite in place.
inline RunOutcome execute_scenario(const Scenario& sc, const Config& user, const std::filesystem::path& out_root) {
    Config merged = scenario_config(sc, user);
    auto t0 = std::chrono::steady_clock::now();
    RunReport rep = sc.run(merged);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    RunOutcome out;
    out.run_dir = out_root / (sc.name + "_" + merged.without("n_workers").hash());
    out.wall_seconds = wall;
    write_report(rep, out.run_dir, wall, static_cast<int>(merged.get_int("n_workers", 1)));
    out.report = std::move(rep);
    return out;
}

inline void print_checks(std::ostream& os, const RunReport& rep) {
    for (const auto& c : rep.checks) {
        char line[256];
        std::snprintf(line, sizeof(line), "[%s] %-38s %.6e %s %.6e", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                      c.value, c.op.c_str(), c.threshold);
        os << line << "\n";
    }
}

inline int cmd_run(const std::string& name, const std::string& config_file,
                   const std::vector<std::string>& overrides, const std::string& out_flag) {
    const Scenario& sc = require_scenario(name);
    RunOutcome out = execute_scenario(sc, load_cli_config(config_file, overrides), resolve_out_root(out_flag));
    print_checks(std::cout, out.report);
    int n_pass = 0;
    for (const auto& c : out.report.checks) n_pass += c.pass ? 1 : 0;
    std::cout << (out.report.all_pass() ? "PASS" : "FAIL") << " " << sc.name << " (" << n_pass << "/"
              << out.report.checks.size() << " checks, " << out.wall_seconds << " s)\n"
              << "wrote " << out.run_dir.string() << "\n";
    return out.report.all_pass() ? kExitPass : kExitCheckFailed;
}

inline int cmd_list() {
    for (const auto& s : scenario_registry()) std::cout << s.name << " - " << s.summary << "\n";
    return kExitPass;
}

inline int cmd_describe(const std::string& name) {
    const Scenario& sc = require_scenario(name);
    std::cout << sc.name << " - " << sc.summary << "\n\n" << sc.details << "\n\ndefaults:\n";
    std::cout << Config{sc.defaults}.canonical();
    return kExitPass;
}

//Echoes the merged configuration and its hash without running anything.
inline int cmd_validate(const std::string& name, const std::string& config_file,
                        const std::vector<std::string>& overrides) {
    const Scenario& sc = require_scenario(name);
    Config merged = scenario_config(sc, load_cli_config(config_file, overrides));
    std::cout << merged.canonical() << "hash " << merged.hash() << "\nok\n";
    return kExitPass;
}

} // namespace bsee
