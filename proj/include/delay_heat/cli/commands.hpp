#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "delay_heat/cli/config.hpp"
#include "delay_heat/delay_flow.hpp"
#include "delay_heat/diagnostics/compatibility.hpp"
#include "delay_heat/diagnostics/jumps.hpp"
#include "delay_heat/errors.hpp"
#include "delay_heat/figure.hpp"
#include "delay_heat/picard.hpp"
#include "delay_heat/reference/hybrid.hpp"
#include "delay_heat/reference/rk4_dde.hpp"
#include "delay_heat/trace.hpp"
#include "delay_heat/validation.hpp"
#include "delay_heat/version.hpp"

namespace delay_heat::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitConfig = 2;

struct OutputFile {
    std::string path;  ///< relative to the output directory
    std::size_t rows = 0;
};

struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config;
    std::string version = kVersion;
    double wall_clock_seconds = 0.0;
    std::filesystem::path output_dir;
    std::vector<OutputFile> files;
    int exit_code = kExitOk;
    std::string summary;
};

namespace detail {

/// Opens `name` in the manifest's output directory, runs `write(stream)` (which
/// returns the data row count), and records the file.
template <class Writer>
void emit(RunManifest& m, const std::string& name, Writer&& write) {
    std::filesystem::create_directories(m.output_dir);
    const auto path = m.output_dir / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw ConfigError("cannot write output file '" + path.string() + "'");
    }
    const std::size_t rows = write(os);
    os.flush();
    if (!os) {
        throw std::runtime_error("write failed for '" + path.string() + "'");
    }
    m.files.push_back({name, rows});
}

inline RunManifest start(const std::string& command, const ExperimentConfig& c) {
    RunManifest m;
    m.command = command;
    m.config = c.echo;
    m.output_dir = c.output;
    return m;
}

/// Index i with |i dt - t| tiny, or a configuration error.
inline std::size_t grid_index(double t, double dt, const char* solver) {
    const double q = t / dt;
    const auto i = static_cast<std::size_t>(std::llround(q));
    if (std::abs(q - static_cast<double>(i)) > 1e-9 * std::max(1.0, q)) {
        throw ConfigError(std::string(solver) + " solver needs output times on the dt grid");
    }
    return i;
}

inline SolutionTrace rk4_modes_trace(const SpectralField& y0, const HistoryFunction& phi, const ExperimentConfig& c) {
    const EigenBasis& basis = y0.basis();
    const double dt = c.step();
    if (dt > c.flow.tau / 10.0 * (1.0 + 1e-12)) {
        throw ConfigError("rk4-modes solver needs dt <= tau/10");
    }
    // Classical RK4 is stable for lambda dt up to about 2.78.
    if (basis.eigenvalue(basis.modes()) * dt > 2.5) {
        throw ConfigError("rk4-modes solver unstable for the highest mode: reduce dt or modes");
    }
    SolutionTrace trace;
    trace.params = c.flow;
    trace.provenance = "rk4-modes";
    trace.times = c.times;
    trace.fields.assign(c.times.size(), SpectralField(basis));
    const double T = c.times.back();
    for (std::size_t k = 1; k <= basis.modes(); ++k) {
        reference::ModeDDEConfig cfg;
        cfg.lambda = basis.eigenvalue(k);
        cfg.a = c.flow.a;
        cfg.tau = c.flow.tau;
        cfg.dt = dt;
        cfg.y0 = y0.coeff(k);
        if (phi.is_zero()) {
            cfg.history = [](double) { return 0.0; };
        } else {
            cfg.history = [&phi, k](double s) { return phi.mode_value(k, s); };
        }
        if (T <= 0.0) {
            trace.fields[0].coeff(k) = cfg.y0;
            continue;
        }
        const auto mode = reference::rk4_dde_mode(cfg, T);
        for (std::size_t i = 0; i < c.times.size(); ++i) {
            trace.fields[i].coeff(k) = mode.value_at(c.times[i]);
        }
    }
    return trace;
}

}  // namespace detail

/// Solves with the configured solver and writes trace_coeffs.csv (spectral
/// solvers) and trace_grid.csv.
inline RunManifest cmd_simulate(const ExperimentConfig& c) {
    RunManifest m = detail::start("simulate", c);
    const auto y0 = initial_field(c);
    const auto phi = build_history(c, y0);
    const auto mesh = uniform_mesh(c.L, c.nx);

    SolutionTrace trace;
    switch (c.solver) {
        case SolverKind::ClosedForm:
            trace = closed_form_trace(y0, phi, c.times, c.flow, c.quad);
            break;
        case SolverKind::Picard: {
            const double T = c.times.back();
            if (!(T > 0.0)) {
                throw ConfigError("picard solver needs a positive final time");
            }
            const auto full = picard_solve(y0, phi, T, c.picard_iterations, c.step(), c.flow, c.quad);
            trace.params = c.flow;
            trace.provenance = full.provenance;
            for (double t : c.times) {
                trace.times.push_back(t);
                trace.fields.push_back(full.fields.at(detail::grid_index(t, c.step(), "picard")));
            }
            break;
        }
        case SolverKind::Rk4Modes:
            trace = detail::rk4_modes_trace(y0, phi, c);
            break;
        case SolverKind::Hybrid: {
            if (c.initial.rfind("dirac@", 0) == 0) {
                throw ConfigError("hybrid solver needs grid-representable initial data, not a Dirac measure");
            }
            const reference::MeshParams hm{c.nx, c.ns, c.step()};
            if (c.step() > c.flow.tau / static_cast<double>(c.ns) * (1.0 + 1e-12)) {
                throw ConfigError("hybrid solver needs dt <= tau/ns");
            }
            const auto grid =
                reference::hybrid_simulate(reference::sample_field(y0, c.nx), phi, hm, c.flow.a, c.flow.tau, c.times);
            detail::emit(m, "trace_grid.csv", [&](std::ostream& os) { return write_grid_csv(os, grid); });
            m.summary = "hybrid trace written";
            return m;
        }
    }
    detail::emit(m, "trace_coeffs.csv", [&](std::ostream& os) { return write_coeff_csv(os, trace); });
    detail::emit(m, "trace_grid.csv", [&](std::ostream& os) { return write_grid_csv(os, trace, mesh); });
    m.summary = solver_name(c.solver) + " trace written";
    return m;
}

/// Self-contained matplotlib script drawing one panel per instant from `csv_name`.
inline std::string figure_plot_script(const std::string& csv_name, double tau) {
    std::ostringstream os;
    os << "#!/usr/bin/env python3\n"
          "\"\"\"Plots right-limit derivative panels from "
       << csv_name
       << ".\"\"\"\n"
          "import csv\n"
          "import math\n"
          "import os\n"
          "import sys\n"
          "\n"
          "import matplotlib\n"
          "\n"
          "matplotlib.use(\"Agg\")\n"
          "import matplotlib.pyplot as plt\n"
          "\n"
          "TAU = "
       << format_double(tau)
       << "\n"
          "HERE = os.path.dirname(os.path.abspath(__file__))\n"
          "\n"
          "\n"
          "def main():\n"
          "    panels = {}\n"
          "    with open(os.path.join(HERE, \""
       << csv_name
       << "\")) as fh:\n"
          "        for row in csv.DictReader(fh):\n"
          "            t = float(row[\"t\"])\n"
          "            panels.setdefault(t, ([], []))\n"
          "            panels[t][0].append(float(row[\"x\"]))\n"
          "            panels[t][1].append(float(row[\"value\"]))\n"
          "    times = sorted(panels)\n"
          "    cols = min(3, len(times))\n"
          "    rows = math.ceil(len(times) / cols)\n"
          "    fig, axes = plt.subplots(rows, cols, figsize=(4 * cols, 3 * rows), squeeze=False)\n"
          "    for ax, t in zip(axes.flat, times):\n"
          "        xs, ys = panels[t]\n"
          "        order = int(math.floor(t / TAU + 1e-12))\n"
          "        ax.plot(xs, ys, color=\"tab:blue\", linewidth=1.0)\n"
          "        ax.set_title(f\"t = {t:g}, derivative order {order}\")\n"
          "        ax.set_xlabel(\"x\")\n"
          "    for ax in list(axes.flat)[len(times):]:\n"
          "        ax.axis(\"off\")\n"
          "    fig.tight_layout()\n"
          "    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(HERE, \"figure6.png\")\n"
          "    fig.savefig(out, dpi=150)\n"
          "\n"
          "\n"
          "if __name__ == \"__main__\":\n"
          "    main()\n";
    return os.str();
}

/// Right-limit derivative panels (order floor(t/tau)) for zero history:
/// figure6.csv plus figure6_plot.py.
inline RunManifest cmd_figure6(const ExperimentConfig& c) {
    if (c.history != HistoryKind::Zero) {
        throw UnsupportedConfiguration("figure6 requires zero history");
    }
    RunManifest m = detail::start("figure6", c);
    const auto y0 = initial_field(c);
    const auto panels = right_limit_panels(y0, c.times, c.flow, c.nx);
    detail::emit(m, "figure6.csv", [&](std::ostream& os) { return write_grid_csv(os, panels); });
    detail::emit(m, "figure6_plot.py", [&](std::ostream& os) {
        const auto script = figure_plot_script("figure6.csv", c.flow.tau);
        os << script;
        return static_cast<std::size_t>(std::count(script.begin(), script.end(), '\n'));
    });
    m.summary = std::to_string(panels.times.size()) + " panels written";
    return m;
}

/// Runs a validation suite and writes validate_results.csv; exit 1 if any check fails.
inline RunManifest cmd_validate(const ExperimentConfig& c) {
    const auto& names = validation::suite_names();
    if (c.suite != "all" && std::find(names.begin(), names.end(), c.suite) == names.end()) {
        throw ConfigError("unknown suite '" + c.suite + "'");
    }
    RunManifest m = detail::start("validate", c);
    const auto rows = validation::run_suite(c.suite);
    std::size_t failed = 0;
    detail::emit(m, "validate_results.csv", [&](std::ostream& os) {
        os << "suite,name,value,threshold,pass\n";
        for (const auto& r : rows) {
            os << r.suite << ',' << r.name << ',' << format_double(r.value) << ',' << format_double(r.threshold) << ','
               << (r.pass ? "true" : "false") << '\n';
            failed += r.pass ? 0 : 1;
        }
        return rows.size();
    });
    m.exit_code = failed == 0 ? kExitOk : kExitNumerical;
    m.summary = std::to_string(rows.size() - failed) + "/" + std::to_string(rows.size()) + " checks passed";
    return m;
}

/// Compatibility report (compatibility.txt), endpoint jumps at 0 and tau
/// (endpoint_jumps.csv), and for zero history the lattice jump table (jumps.csv).
inline RunManifest cmd_diagnose(const ExperimentConfig& c) {
    RunManifest m = detail::start("diagnose", c);
    const auto y0 = initial_field(c);
    const auto phi = build_history(c, y0);
    if (c.r > phi.max_derivative_order()) {
        throw ConfigError("r = " + std::to_string(c.r) + " exceeds the history's derivative order " +
                          std::to_string(phi.max_derivative_order()));
    }
    const auto rep = diagnostics::compatibility_check(y0, phi, c.flow, c.r, c.tol, {c.s});
    detail::emit(m, "compatibility.txt", [&](std::ostream& os) {
        std::size_t lines = 0;
        auto kv = [&](const std::string& k, const std::string& v) {
            os << k << " = " << v << '\n';
            ++lines;
        };
        auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
        kv("r", std::to_string(rep.r));
        kv("s", format_double(rep.s.value));
        kv("tol", format_double(rep.tol));
        kv("condition_1_history_regular", flag(rep.regular_history));
        kv("condition_2_g_regular", flag(rep.regular_g));
        kv("condition_3_derivatives_match", flag(rep.matching_derivatives));
        kv("all_hold", flag(rep.all_hold()));
        for (unsigned k = 0; k <= rep.r; ++k) {
            const auto ks = std::to_string(k);
            kv("violation_" + ks, format_double(rep.violations[k]));
            kv("scale_" + ks, format_double(rep.scales[k]));
            kv("g_norm_" + ks, format_double(hs_norm(rep.g[k], {0.0})));
            kv("g_tail_fraction_" + ks, format_double(rep.g_tail[k]));
        }
        for (std::size_t i = 0; i < rep.history_tail.size(); ++i) {
            kv("history_tail_fraction_" + std::to_string(i), format_double(rep.history_tail[i]));
        }
        kv("note", rep.note);
        return lines;
    });

    const auto endpoint = diagnostics::endpoint_jump_report(y0, phi, c.flow, c.r, c.quad);
    detail::emit(m, "endpoint_jumps.csv", [&](std::ostream& os) {
        os << "t,k,predicted_norm,measured_norm,abs_error,scale\n";
        for (const auto& r : endpoint) {
            os << format_double(r.t) << ',' << r.order << ',' << format_double(r.predicted_norm) << ','
               << format_double(r.measured_norm) << ',' << format_double(r.abs_error) << ','
               << format_double(r.scale) << '\n';
        }
        return endpoint.size();
    });

    if (phi.is_zero()) {
        const auto lattice = diagnostics::lattice_jump_report(y0, phi, c.flow, c.j_max);
        detail::emit(m, "jumps.csv", [&](std::ostream& os) {
            os << "j,predicted_norm,measured_norm,rel_error\n";
            for (const auto& r : lattice) {
                os << r.j << ',' << format_double(r.predicted_norm) << ',' << format_double(r.measured_norm) << ','
                   << format_double(r.rel_error) << '\n';
            }
            return lattice.size();
        });
    }
    m.summary = rep.all_hold() ? "compatibility conditions hold" : "compatibility conditions fail";
    return m;
}

inline nlohmann::json manifest_json(const RunManifest& m) {
    nlohmann::json j;
    j["command"] = m.command;
    j["version"] = m.version;
    j["config"] = m.config;
    j["wall_clock_seconds"] = m.wall_clock_seconds;
    j["exit_code"] = m.exit_code;
    j["summary"] = m.summary;
    j["files"] = nlohmann::json::array();
    for (const auto& f : m.files) {
        j["files"].push_back({{"path", f.path}, {"rows", f.rows}});
    }
    return j;
}

inline void write_manifest(const RunManifest& m) {
    std::filesystem::create_directories(m.output_dir);
    std::ofstream os(m.output_dir / "manifest.json", std::ios::binary);
    os << manifest_json(m).dump(2) << '\n';
}

/// Splits "--key value" / "--key=value" tokens into overrides.
inline KeyValues parse_overrides(const std::vector<std::string>& tokens) {
    KeyValues kv;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::string& tok = tokens[i];
        if (tok.rfind("--", 0) != 0 || tok.size() <= 2) {
            throw ConfigError("unexpected argument '" + tok + "'");
        }
        const std::string body = tok.substr(2);
        const auto eq = body.find('=');
        if (eq != std::string::npos) {
            kv.set(body.substr(0, eq), body.substr(eq + 1));
            continue;
        }
        if (i + 1 >= tokens.size()) {
            throw ConfigError("flag '" + tok + "' needs a value");
        }
        kv.set(body, tokens[++i]);
    }
    return kv;
}

/// Entry point: delay-heat <simulate|figure6|validate|diagnose> [--config path] [--key value ...].
/// Returns the process exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Delayed heat equation solver and experiment runner", "delay-heat"};
    app.require_subcommand(1, 1);
    std::string config_path;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"simulate", "solve and write coefficient and grid traces"},
        {"figure6", "right-limit derivative panels for a Dirac initial state"},
        {"validate", "run a validation suite (--suite name)"},
        {"diagnose", "compatibility conditions and jump tables up to order --r"},
    };
    for (const auto& [name, desc] : commands) {
        auto* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", config_path, "key = value configuration file");
        sub->allow_extras();
    }

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }
    CLI::App* sub = app.get_subcommands().front();

    const auto start = std::chrono::steady_clock::now();
    try {
        const auto overrides = parse_overrides(sub->remaining());
        const auto config = load_config(config_path, overrides);
        RunManifest m;
        const std::string name = sub->get_name();
        if (name == "simulate") {
            m = cmd_simulate(config);
        } else if (name == "figure6") {
            m = cmd_figure6(config);
        } else if (name == "validate") {
            m = cmd_validate(config);
        } else {
            m = cmd_diagnose(config);
        }
        m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_manifest(m);
        out << name << ": " << m.summary << " (" << m.output_dir.string() << ")\n";
        return m.exit_code;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InvalidArgument& e) {
        err << "invalid argument: " << e.what() << '\n';
        return kExitConfig;
    } catch (const UnsupportedConfiguration& e) {
        err << "unsupported configuration: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace delay_heat::cli
