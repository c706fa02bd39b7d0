#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "kfp/diagnostics.hpp"

namespace kfp {

/// Atomic text write: the payload lands under a temporary name and is
/// renamed into place, so readers never observe partial files.
inline void write_file_atomic(const std::filesystem::path& path,
                              const std::string& payload) {
    std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << payload;
    }
    std::filesystem::rename(tmp, path);
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// CSV table with '#'-prefixed header comments (units and functional tags).
struct CsvTable {
    std::vector<std::string> comments;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::string render() const {
        std::string out;
        for (const std::string& c : comments) out += "# " + c + "\n";
        for (std::size_t i = 0; i < columns.size(); ++i)
            out += (i ? "," : "") + columns[i];
        out += "\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (!std::isfinite(row[i]))
                    throw std::runtime_error(
                        "refusing to write non-finite CSV value");
                out += (i ? "," : "") + format_double(row[i]);
            }
            out += "\n";
        }
        return out;
    }

    void write(const std::filesystem::path& path) const {
        write_file_atomic(path, render());
    }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    CsvTable t;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            t.comments.push_back(line.substr(line.size() > 1 ? 2 : 1));
            continue;
        }
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) comma = line.size();
            cells.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        if (!header_seen) {
            t.columns = cells;
            header_seen = true;
        } else {
            std::vector<double> row;
            for (const std::string& c : cells) row.push_back(std::stod(c));
            t.rows.push_back(std::move(row));
        }
    }
    return t;
}

/// Plain-text emission of a functional report: one column per series, plus
/// a recomputable fitted envelope for every series with stored fit
/// parameters ("<name>.rate" / "<name>.log0" for exponential envelopes,
/// "<name>.exponent" / "<name>.logc" for power laws).
inline void emit_plot_data(const FunctionalReport& report,
                           const std::filesystem::path& target) {
    if (report.times.empty())
        throw std::invalid_argument("emit_plot_data: empty report");
    CsvTable t;
    t.comments.push_back("time series of diagnostic functionals");
    t.columns.push_back("t");
    std::vector<std::string> names;
    for (const auto& [name, series] : report.series) {
        if (series.size() != report.times.size())
            throw std::invalid_argument("emit_plot_data: ragged series " +
                                        name);
        names.push_back(name);
        t.columns.push_back(name);
    }
    std::vector<std::string> envelopes;
    for (const std::string& name : names) {
        if (report.fits.count(name + ".rate") ||
            report.fits.count(name + ".exponent")) {
            envelopes.push_back(name);
            t.columns.push_back(name + "_fitted_envelope");
        }
    }
    for (std::size_t i = 0; i < report.times.size(); ++i) {
        std::vector<double> row{report.times[i]};
        for (const std::string& name : names)
            row.push_back(report.series.at(name)[i]);
        for (const std::string& name : envelopes) {
            double v;
            if (report.fits.count(name + ".rate"))
                v = std::exp(report.fits.at(name + ".log0") -
                             report.fits.at(name + ".rate") *
                                 report.times[i]);
            else
                v = std::exp(report.fits.at(name + ".logc")) *
                    std::pow(1.0 + report.times[i],
                             report.fits.at(name + ".exponent"));
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    t.write(target);
}

/// Run manifest: config snapshot, outputs, and named pass/fail checks.
struct RunManifest {
    nlohmann::json config;
    std::string version;
    double wall_time_s = 0.0;
    std::string timestamp;
    std::vector<std::string> outputs;
    nlohmann::json checks = nlohmann::json::object();
    nlohmann::json fits = nlohmann::json::object();

    bool all_pass() const {
        for (const auto& [name, c] : checks.items())
            if (!c.at("pass").get<bool>()) return false;
        return true;
    }

    void add_check(const std::string& name, bool pass, double value,
                   const std::string& requirement) {
        checks[name] = {{"pass", pass},
                        {"value", value},
                        {"requirement", requirement}};
    }

    void write(const std::filesystem::path& path) const {
        nlohmann::json j;
        j["config"] = config;
        j["version"] = version;
        j["wall_time_s"] = wall_time_s;
        j["timestamp"] = timestamp;
        j["outputs"] = outputs;
        j["checks"] = checks;
        j["fits"] = fits;
        write_file_atomic(path, j.dump(2) + "\n");
    }
};

}  // namespace kfp
