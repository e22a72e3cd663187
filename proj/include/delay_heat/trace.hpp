#pragma once

#include <cstddef>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "delay_heat/delay_flow.hpp"
#include "delay_heat/errors.hpp"
#include "delay_heat/spectral.hpp"

namespace delay_heat {

/// Shortest round-trippable form: 17 significant digits.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Time-indexed spectral fields produced by one solver.
struct SolutionTrace {
    std::vector<double> times;
    std::vector<SpectralField> fields;
    FlowParams params;
    std::string provenance;

    void validate() const {
        detail::require(times.size() == fields.size(), "trace needs one field per time");
        for (std::size_t i = 1; i < times.size(); ++i) {
            detail::require(times[i] > times[i - 1], "trace times must be strictly increasing");
        }
        for (const auto& f : fields) {
            detail::require(f.basis() == fields.front().basis(), "trace fields must share one basis");
        }
    }
};

/// Time-indexed nodal values on a spatial mesh (grid-based solvers).
struct GridTrace {
    std::vector<double> times;
    std::vector<double> x;
    std::vector<std::vector<double>> values;
    std::string provenance;
};

/// "t,k,coeff", one row per (time, mode). Returns the number of data rows.
inline std::size_t write_coeff_csv(std::ostream& os, const SolutionTrace& trace) {
    trace.validate();
    os << "t,k,coeff\n";
    std::size_t rows = 0;
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        const auto& f = trace.fields[i];
        for (std::size_t k = 1; k <= f.modes(); ++k) {
            os << format_double(trace.times[i]) << ',' << k << ',' << format_double(f.coeff(k)) << '\n';
            ++rows;
        }
    }
    return rows;
}

/// "t,x,value" on the given mesh. Returns the number of data rows.
inline std::size_t write_grid_csv(std::ostream& os, const SolutionTrace& trace, const std::vector<double>& mesh) {
    trace.validate();
    os << "t,x,value\n";
    std::size_t rows = 0;
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        for (double x : mesh) {
            os << format_double(trace.times[i]) << ',' << format_double(x) << ','
               << format_double(evaluate(trace.fields[i], x)) << '\n';
            ++rows;
        }
    }
    return rows;
}

inline std::size_t write_grid_csv(std::ostream& os, const GridTrace& trace) {
    os << "t,x,value\n";
    std::size_t rows = 0;
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        for (std::size_t j = 0; j < trace.x.size(); ++j) {
            os << format_double(trace.times[i]) << ',' << format_double(trace.x[j]) << ','
               << format_double(trace.values[i][j]) << '\n';
            ++rows;
        }
    }
    return rows;
}

/// Reads a "t,k,coeff" table back into (times, fields). Modes absent from a
/// time block are zero; k beyond the basis is an error.
inline std::pair<std::vector<double>, std::vector<SpectralField>> read_coeff_csv(std::istream& is,
                                                                                 const EigenBasis& basis) {
    std::string line;
    detail::require(static_cast<bool>(std::getline(is, line)), "empty coefficient table");
    detail::require(line.rfind("t,k,coeff", 0) == 0, "coefficient table must start with header t,k,coeff");
    std::map<double, SpectralField> blocks;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") {
            continue;
        }
        std::istringstream row(line);
        std::string ts, ks, cs;
        if (!std::getline(row, ts, ',') || !std::getline(row, ks, ',') || !std::getline(row, cs)) {
            throw InvalidArgument("malformed row " + std::to_string(lineno) + " in coefficient table");
        }
        double t = 0.0;
        double c = 0.0;
        long k = 0;
        try {
            t = std::stod(ts);
            k = std::stol(ks);
            c = std::stod(cs);
        } catch (const std::exception&) {
            throw InvalidArgument("unparsable row " + std::to_string(lineno) + " in coefficient table");
        }
        detail::require(k >= 1 && static_cast<std::size_t>(k) <= basis.modes(),
                        "mode index out of range at row " + std::to_string(lineno));
        auto it = blocks.try_emplace(t, basis).first;
        it->second.coeff(static_cast<std::size_t>(k)) = c;
    }
    std::pair<std::vector<double>, std::vector<SpectralField>> out;
    for (auto& [t, f] : blocks) {
        out.first.push_back(t);
        out.second.push_back(f);
    }
    return out;
}

}  // namespace delay_heat
