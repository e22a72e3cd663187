#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "delay_heat/delay_flow.hpp"
#include "delay_heat/errors.hpp"
#include "delay_heat/figure.hpp"
#include "delay_heat/history.hpp"
#include "delay_heat/quadrature.hpp"
#include "delay_heat/reference/hybrid.hpp"
#include "delay_heat/spectral.hpp"
#include "delay_heat/trace.hpp"

namespace delay_heat::cli {

/// Bad configuration: maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat key -> value table. Sections only group keys in the file; every key
/// is unique across sections.
class KeyValues {
public:
    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& all() const { return values_; }

    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

private:
    std::map<std::string, std::string> values_;
};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

/// Parses "key = value" lines; '#' and ';' start comments, "[name]" opens a section.
inline KeyValues parse_key_values(std::istream& is) {
    KeyValues kv;
    std::map<std::string, std::size_t> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        }
        if (seen.count(key) != 0) {
            throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "' (first on line " +
                              std::to_string(seen[key]) + ")");
        }
        seen[key] = lineno;
        kv.set(key, value);
    }
    return kv;
}

inline double parse_double(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (trim(text.substr(used)).empty() && std::isfinite(v)) {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
}

inline std::size_t parse_count(const std::string& key, const std::string& text) {
    const double v = parse_double(key, text);
    if (v < 0.0 || v != std::floor(v) || v > 1e9) {
        throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + text + "'");
    }
    return static_cast<std::size_t>(v);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string part;
    std::istringstream is(s);
    while (std::getline(is, part, sep)) {
        out.push_back(trim(part));
    }
    return out;
}

/// "0, 0.5, 1" or "start:stop:step" (inclusive of stop up to rounding).
inline std::vector<double> parse_times(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3) {
            throw ConfigError("key 'times': range form is start:stop:step");
        }
        const double a = parse_double("times", parts[0]);
        const double b = parse_double("times", parts[1]);
        const double h = parse_double("times", parts[2]);
        if (!(h > 0.0) || b < a) {
            throw ConfigError("key 'times': need step > 0 and stop >= start");
        }
        const auto n = static_cast<std::size_t>(std::floor((b - a) / h + 1e-9));
        for (std::size_t i = 0; i <= n; ++i) {
            out.push_back(a + h * static_cast<double>(i));
        }
    } else {
        for (const auto& p : split(text, ',')) {
            if (!p.empty()) {
                out.push_back(parse_double("times", p));
            }
        }
    }
    if (out.empty()) {
        throw ConfigError("key 'times': no time instants given");
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] < 0.0) {
            throw ConfigError("key 'times': instants must be non-negative");
        }
        if (i > 0 && out[i] <= out[i - 1]) {
            throw ConfigError("key 'times': instants must be strictly increasing");
        }
    }
    return out;
}

/// "dirac@x0", "modes:k=c,k=c,...", or "polynomial:c0,c1,..." (sum c_i x^i, projected).
inline SpectralField parse_field(const std::string& key, const std::string& text, const EigenBasis& basis,
                                 const QuadratureSpec& quad) {
    if (text.rfind("dirac@", 0) == 0) {
        const double x0 = parse_double(key, text.substr(6));
        if (!(x0 > 0.0 && x0 < basis.length())) {
            throw ConfigError("key '" + key + "': Dirac location must lie in (0, L)");
        }
        return dirac_coeffs(x0, basis);
    }
    if (text.rfind("modes:", 0) == 0) {
        SpectralField f(basis);
        for (const auto& item : split(text.substr(6), ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("key '" + key + "': mode entries are k=coeff");
            }
            const std::size_t k = parse_count(key, item.substr(0, eq));
            if (k < 1 || k > basis.modes()) {
                throw ConfigError("key '" + key + "': mode index " + std::to_string(k) + " outside 1..modes");
            }
            f.coeff(k) = parse_double(key, item.substr(eq + 1));
        }
        return f;
    }
    if (text.rfind("polynomial:", 0) == 0) {
        std::vector<double> c;
        for (const auto& item : split(text.substr(11), ',')) {
            c.push_back(parse_double(key, item));
        }
        if (c.empty()) {
            throw ConfigError("key '" + key + "': polynomial needs coefficients");
        }
        return project(
            [c](double x) {
                double v = 0.0;
                for (auto it = c.rbegin(); it != c.rend(); ++it) {
                    v = v * x + *it;
                }
                return v;
            },
            basis, quad);
    }
    throw ConfigError("key '" + key + "': expected dirac@x0, modes:k=c,..., or polynomial:c0,c1,...");
}

enum class HistoryKind { Zero, Constant, AnalyticExp, Characteristic, Grid };
enum class SolverKind { ClosedForm, Picard, Hybrid, Rk4Modes };

inline const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "L",           "modes",         "tau",          "a",          "max_terms",   "initial",      "history",
        "history_field", "history_rate", "history_file", "history_interp", "times",   "solver",       "output",
        "nx",          "ns",            "dt",           "picard_iterations", "quad_panels", "quad_nodes", "r",
        "tol",         "s",             "j_max",        "suite"};
    return keys;
}

/// Fully resolved experiment description.
struct ExperimentConfig {
    double L = 1.0;
    std::size_t modes = 60;
    FlowParams flow;
    std::string initial = "dirac@0.3";
    HistoryKind history = HistoryKind::Zero;
    std::string history_field;  ///< empty: same as initial
    double history_rate = 1.0;
    std::string history_file;
    Interpolation history_interp = Interpolation::Linear;
    std::vector<double> times;
    bool times_given = false;
    SolverKind solver = SolverKind::ClosedForm;
    std::string output = "out";
    std::size_t nx = 300;
    std::size_t ns = 400;
    double dt = 0.0;  ///< 0: tau / 800
    std::size_t picard_iterations = 8;
    QuadratureSpec quad;
    unsigned r = 2;
    double tol = 1e-9;
    double s = 0.0;
    std::size_t j_max = 4;
    std::string suite = "all";
    /// Directory against which relative history files resolve.
    std::filesystem::path base_dir = ".";
    /// Resolved key/value echo for the manifest.
    std::map<std::string, std::string> echo;

    EigenBasis basis() const { return EigenBasis(L, modes); }
    double step() const { return dt > 0.0 ? dt : flow.tau / 800.0; }
};

inline std::string history_name(HistoryKind k) {
    switch (k) {
        case HistoryKind::Zero:
            return "zero";
        case HistoryKind::Constant:
            return "constant";
        case HistoryKind::AnalyticExp:
            return "analytic-exp";
        case HistoryKind::Characteristic:
            return "characteristic";
        case HistoryKind::Grid:
            return "grid";
    }
    return "zero";
}

inline std::string solver_name(SolverKind k) {
    switch (k) {
        case SolverKind::ClosedForm:
            return "closed-form";
        case SolverKind::Picard:
            return "picard";
        case SolverKind::Hybrid:
            return "hybrid";
        case SolverKind::Rk4Modes:
            return "rk4-modes";
    }
    return "closed-form";
}

/// Builds a config from file values overridden by command-line values.
inline ExperimentConfig resolve_config(const KeyValues& file, const KeyValues& overrides,
                                       std::filesystem::path base_dir = ".") {
    KeyValues kv = file;
    for (const auto& [k, v] : overrides.all()) {
        kv.set(k, v);
    }
    const auto& keys = known_keys();
    for (const auto& [k, v] : kv.all()) {
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
            throw ConfigError("unknown key '" + k + "'");
        }
    }

    ExperimentConfig c;
    c.base_dir = std::move(base_dir);
    auto num = [&](const char* key, double fallback) {
        return kv.has(key) ? parse_double(key, kv.get(key, "")) : fallback;
    };
    auto count = [&](const char* key, std::size_t fallback) {
        return kv.has(key) ? parse_count(key, kv.get(key, "")) : fallback;
    };

    c.L = num("L", c.L);
    c.modes = count("modes", c.modes);
    c.flow.tau = num("tau", c.flow.tau);
    c.flow.a = num("a", c.flow.a);
    c.flow.max_terms = count("max_terms", c.flow.max_terms);
    if (!(c.L > 0.0)) {
        throw ConfigError("key 'L': domain length must be positive");
    }
    if (c.modes < 1) {
        throw ConfigError("key 'modes': need at least one mode");
    }
    if (!(c.flow.tau > 0.0)) {
        throw ConfigError("key 'tau': delay must be positive");
    }
    c.initial = kv.get("initial", c.initial);

    const std::string hist = kv.get("history", "zero");
    if (hist == "zero") {
        c.history = HistoryKind::Zero;
    } else if (hist == "constant") {
        c.history = HistoryKind::Constant;
    } else if (hist == "analytic-exp") {
        c.history = HistoryKind::AnalyticExp;
    } else if (hist == "characteristic") {
        c.history = HistoryKind::Characteristic;
    } else if (hist == "grid") {
        c.history = HistoryKind::Grid;
    } else {
        throw ConfigError("key 'history': expected zero, constant, analytic-exp, characteristic, or grid");
    }
    c.history_field = kv.get("history_field", "");
    c.history_rate = num("history_rate", c.history_rate);
    c.history_file = kv.get("history_file", "");
    const std::string interp = kv.get("history_interp", "linear");
    if (interp == "linear" || interp == "1") {
        c.history_interp = Interpolation::Linear;
    } else if (interp == "cubic" || interp == "3") {
        c.history_interp = Interpolation::Cubic;
    } else {
        throw ConfigError("key 'history_interp': expected linear or cubic");
    }
    if (c.history == HistoryKind::Grid && c.history_file.empty()) {
        throw ConfigError("history = grid requires history_file");
    }

    if (kv.has("times")) {
        c.times = parse_times(kv.get("times", ""));
        c.times_given = true;
    } else {
        c.times = default_panel_times(c.flow.tau);
    }

    const std::string solver = kv.get("solver", "closed-form");
    if (solver == "closed-form") {
        c.solver = SolverKind::ClosedForm;
    } else if (solver == "picard") {
        c.solver = SolverKind::Picard;
    } else if (solver == "hybrid") {
        c.solver = SolverKind::Hybrid;
    } else if (solver == "rk4-modes") {
        c.solver = SolverKind::Rk4Modes;
    } else {
        throw ConfigError("key 'solver': expected closed-form, picard, hybrid, or rk4-modes");
    }

    c.output = kv.get("output", c.output);
    if (const char* env = std::getenv("DELAY_HEAT_OUT"); env != nullptr && *env != '\0') {
        c.output = env;
    }
    c.nx = count("nx", c.nx);
    c.ns = count("ns", c.ns);
    if (c.nx < 2) {
        throw ConfigError("key 'nx': need at least 2 intervals");
    }
    if (c.ns < 1) {
        throw ConfigError("key 'ns': need at least 1 interval");
    }
    c.dt = num("dt", 0.0);
    if (c.dt < 0.0) {
        throw ConfigError("key 'dt': time step must be positive");
    }
    c.picard_iterations = count("picard_iterations", c.picard_iterations);
    if (c.picard_iterations < 1) {
        throw ConfigError("key 'picard_iterations': need at least 1");
    }
    c.quad.panels_per_unit = num("quad_panels", c.quad.panels_per_unit);
    c.quad.nodes = count("quad_nodes", c.quad.nodes);
    if (!(c.quad.panels_per_unit > 0.0) || c.quad.nodes < 2) {
        throw ConfigError("quadrature needs quad_panels > 0 and quad_nodes >= 2");
    }
    c.r = static_cast<unsigned>(count("r", c.r));
    c.tol = num("tol", c.tol);
    if (c.tol < 0.0) {
        throw ConfigError("key 'tol': tolerance must be non-negative");
    }
    c.s = num("s", c.s);
    c.j_max = count("j_max", c.j_max);
    c.suite = kv.get("suite", c.suite);

    c.echo = {
        {"L", format_double(c.L)},
        {"modes", std::to_string(c.modes)},
        {"tau", format_double(c.flow.tau)},
        {"a", format_double(c.flow.a)},
        {"max_terms", std::to_string(c.flow.max_terms)},
        {"initial", c.initial},
        {"history", history_name(c.history)},
        {"history_field", c.history_field},
        {"history_rate", format_double(c.history_rate)},
        {"history_file", c.history_file},
        {"history_interp", c.history_interp == Interpolation::Cubic ? "cubic" : "linear"},
        {"solver", solver_name(c.solver)},
        {"output", c.output},
        {"nx", std::to_string(c.nx)},
        {"ns", std::to_string(c.ns)},
        {"dt", format_double(c.step())},
        {"picard_iterations", std::to_string(c.picard_iterations)},
        {"quad_panels", format_double(c.quad.panels_per_unit)},
        {"quad_nodes", std::to_string(c.quad.nodes)},
        {"r", std::to_string(c.r)},
        {"tol", format_double(c.tol)},
        {"s", format_double(c.s)},
        {"j_max", std::to_string(c.j_max)},
        {"suite", c.suite},
    };
    std::string times;
    for (double t : c.times) {
        times += (times.empty() ? "" : ",") + format_double(t);
    }
    c.echo["times"] = times;
    return c;
}

/// Reads the config file (if any) and applies overrides.
inline ExperimentConfig load_config(const std::string& path, const KeyValues& overrides) {
    KeyValues file;
    std::filesystem::path base = ".";
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) {
            throw ConfigError("cannot open config file '" + path + "'");
        }
        file = parse_key_values(in);
        base = std::filesystem::path(path).parent_path();
        if (base.empty()) {
            base = ".";
        }
    }
    return resolve_config(file, overrides, base);
}

inline SpectralField initial_field(const ExperimentConfig& c) {
    return parse_field("initial", c.initial, c.basis(), c.quad);
}

/// Grid history from a "t,k,coeff" table sampled uniformly on [-tau, 0].
inline HistoryFunction read_grid_history(const ExperimentConfig& c) {
    std::filesystem::path file(c.history_file);
    if (file.is_relative()) {
        file = c.base_dir / file;
    }
    std::ifstream in(file);
    if (!in) {
        throw ConfigError("cannot open history_file '" + file.string() + "'");
    }
    std::pair<std::vector<double>, std::vector<SpectralField>> table;
    try {
        table = read_coeff_csv(in, c.basis());
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("history_file: ") + e.what());
    }
    const auto& times = table.first;
    const std::size_t n = times.size();
    if (n < 2) {
        throw ConfigError("history_file: need at least 2 time samples");
    }
    const double tau = c.flow.tau;
    for (std::size_t i = 0; i < n; ++i) {
        const double expect = -tau + tau * static_cast<double>(i) / static_cast<double>(n - 1);
        if (std::abs(times[i] - expect) > 1e-9 * tau) {
            throw ConfigError("history_file: samples must be uniform on [-tau, 0]");
        }
    }
    if (c.history_interp == Interpolation::Cubic && n < 4) {
        throw ConfigError("history_file: cubic interpolation needs at least 4 samples");
    }
    return HistoryFunction::grid(table.second, tau, c.history_interp);
}

inline HistoryFunction build_history(const ExperimentConfig& c, const SpectralField& y0) {
    const EigenBasis basis = c.basis();
    const double tau = c.flow.tau;
    auto field = [&]() {
        return c.history_field.empty() ? y0 : parse_field("history_field", c.history_field, basis, c.quad);
    };
    switch (c.history) {
        case HistoryKind::Zero:
            return HistoryFunction::zero(basis, tau);
        case HistoryKind::Constant:
            return HistoryFunction::constant(field(), tau);
        case HistoryKind::AnalyticExp:
            return HistoryFunction::exponential(field(), c.history_rate, tau);
        case HistoryKind::Characteristic:
            if (!(c.flow.a > 0.0)) {
                throw ConfigError("history = characteristic requires a > 0");
            }
            return characteristic_history(y0, c.flow);
        case HistoryKind::Grid:
            return read_grid_history(c);
    }
    return HistoryFunction::zero(basis, tau);
}

}  // namespace delay_heat::cli
