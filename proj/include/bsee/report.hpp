#pragma once

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>

#include "config.hpp"

namespace bsee {

//One named check with its pinned threshold.  op is the comparison applied as
//`value op threshold` ("<=", ">=", "<", ">").
struct CheckRow {
    std::string name;
    double value;
    std::string op;
    double threshold;
    bool pass;
};

inline CheckRow make_check(const std::string& name, double value, const std::string& op, double threshold) {
    bool pass = false;
    if (op == "<=") pass = value <= threshold;
    else if (op == ">=") pass = value >= threshold;
    else if (op == "<") pass = value < threshold;
    else if (op == ">") pass = value > threshold;
    else throw std::invalid_argument("make_check: unknown comparator '" + op + "'");
    return CheckRow{name, value, op, threshold, pass};
}

//Everything a scenario run produces.  Serialization is deterministic: the
//config is canonical-ordered, checks and metrics keep insertion order, and
//doubles round-trip through the shortest exact representation, so reruns
//with identical numbers give byte-identical files.
struct RunReport {
    std::string scenario;
    Config config;
    std::vector<CheckRow> checks;
    nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
    //Extra file writers (process CSV dumps and the like), invoked with the run directory.
    std::vector<std::function<void(const std::filesystem::path&)>> artifacts;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }

    void add_check(const std::string& name, double value, const std::string& op, double threshold) {
        checks.push_back(make_check(name, value, op, threshold));
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["scenario"] = scenario;
        //n_workers is an execution detail: the numbers may not depend on it,
        //so it lives in run_meta.json and stays out of the result identity.
        Config ident = config.without("n_workers");
        j["config_hash"] = ident.hash();
        j["config"] = nlohmann::ordered_json::object();
        for (const auto& [k, v] : ident.values()) j["config"][k] = v;
        j["checks"] = nlohmann::ordered_json::array();
        for (const auto& c : checks) {
            nlohmann::ordered_json row;
            row["name"] = c.name;
            row["value"] = c.value;
            row["comparator"] = c.op;
            row["threshold"] = c.threshold;
            row["pass"] = c.pass;
            j["checks"].push_back(row);
        }
        j["metrics"] = metrics;
        j["all_pass"] = all_pass();
        return j;
    }
};

//Writes results.json, checks.csv, and the canonical config echo into dir.
//Wall-clock and other machine-dependent facts go to run_meta.json only, so
//results.json stays reproducible.
inline void write_report(const RunReport& rep, const std::filesystem::path& dir, double wall_seconds,
                         int n_workers) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "results.json");
        out << rep.to_json().dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "checks.csv");
        out << "name,value,comparator,threshold,pass\n";
        char buf[64];
        for (const auto& c : rep.checks) {
            std::snprintf(buf, sizeof(buf), "%.17g", c.value);
            out << c.name << "," << buf << "," << c.op << ",";
            std::snprintf(buf, sizeof(buf), "%.17g", c.threshold);
            out << buf << "," << (c.pass ? "true" : "false") << "\n";
        }
    }
    {
        std::ofstream out(dir / "config_echo.cfg");
        out << rep.config.canonical();
    }
    for (const auto& writer : rep.artifacts) writer(dir);
    {
        nlohmann::ordered_json meta;
        auto now = std::chrono::system_clock::now().time_since_epoch();
        meta["wall_seconds"] = wall_seconds;
        meta["n_workers"] = n_workers;
        meta["finished_unix_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
        std::ofstream out(dir / "run_meta.json");
        out << meta.dump(2) << "\n";
    }
}

} // namespace bsee
