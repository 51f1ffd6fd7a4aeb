#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "process.hpp"

namespace bsee {

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

//CSV layout: one row per (path, step, component); component is the row-major
//flat index for operator-valued processes.  The JSON header carries everything
//needed to reconstruct the container, so write + read round-trips bit-exactly.
inline void write_process_csv(const VectorProcess& x, const std::string& csv_path,
                              const std::string& header_path, const std::string& name = "process") {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("write_process_csv: cannot open " + csv_path);
    csv << "path,step,component,value\n";
    for (int p = 0; p < x.n_paths(); ++p)
        for (int k = x.start_step(); k <= x.grid().n_steps(); ++k)
            for (int c = 0; c < x.dim(); ++c)
                csv << p << ',' << k << ',' << c << ',' << detail::format_double(x.at(p, k)(c)) << '\n';

    nlohmann::ordered_json h;
    h["name"] = name;
    h["kind"] = "vector";
    h["dim"] = x.dim();
    h["n_paths"] = x.n_paths();
    h["start_step"] = x.start_step();
    h["grid"] = {{"t_start", x.grid().t_start()}, {"t_end", x.grid().t_end()}, {"n_steps", x.grid().n_steps()}};
    std::ofstream hj(header_path);
    if (!hj) throw std::runtime_error("write_process_csv: cannot open " + header_path);
    hj << h.dump(2) << '\n';
}

inline VectorProcess read_process_csv(const std::string& csv_path, const std::string& header_path) {
    std::ifstream hj(header_path);
    if (!hj) throw std::runtime_error("read_process_csv: cannot open " + header_path);
    nlohmann::json h = nlohmann::json::parse(hj);
    if (h.at("kind") != "vector") throw std::runtime_error("read_process_csv: not a vector process header");
    TimeGrid grid(h.at("grid").at("t_start").get<double>(), h.at("grid").at("t_end").get<double>(),
                  h.at("grid").at("n_steps").get<int>());
    VectorProcess out(grid, h.at("n_paths").get<int>(), h.at("dim").get<int>(), h.at("start_step").get<int>());

    std::ifstream csv(csv_path);
    if (!csv) throw std::runtime_error("read_process_csv: cannot open " + csv_path);
    std::string line;
    std::getline(csv, line); // header row
    if (line != "path,step,component,value")
        throw std::runtime_error("read_process_csv: unexpected CSV header");
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok;
        int p, k, c;
        double v;
        std::getline(ss, tok, ','); p = std::stoi(tok);
        std::getline(ss, tok, ','); k = std::stoi(tok);
        std::getline(ss, tok, ','); c = std::stoi(tok);
        std::getline(ss, tok, ','); v = std::stod(tok);
        if (c < 0 || c >= out.dim()) throw std::runtime_error("read_process_csv: component out of range");
        out.at(p, k)(c) = v;
    }
    return out;
}

} // namespace bsee
