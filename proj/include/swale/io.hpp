#pragma once

// Run configuration, output writers and the batch driver.
//
// Config files are "key = value" lines; '#' starts a comment. Every key is
// also accepted as a command-line override, which wins over the file.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "swale/diagnostics.hpp"
#include "swale/errors.hpp"
#include "swale/fem.hpp"
#include "swale/model.hpp"
#include "swale/scenarios.hpp"
#include "swale/stepper.hpp"

namespace swale {

struct RunConfig {
    std::string scenario = "test1";
    /// M1, M2, M3 or a target triangle count.
    std::string mesh = "M1";
    ScenarioSpec spec = test1_spec();
    std::filesystem::path output_dir = "out";
    /// Also write the initial mass and stiffness matrices in coordinate format.
    bool dump_operators = false;
};

/// One "key = value" assignment; line 0 marks a command-line override.
struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, res.ptr};
}

inline double parse_double(std::string_view s, const ConfigEntry& e) {
    double x = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(x))
        throw ConfigError("expected a number, got '" + std::string(s) + "'", e.key, e.line);
    return x;
}

inline int parse_int(std::string_view s, const ConfigEntry& e) {
    int x = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError("expected an integer, got '" + std::string(s) + "'", e.key, e.line);
    return x;
}

inline bool parse_bool(std::string_view s, const ConfigEntry& e) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("expected true or false, got '" + std::string(s) + "'", e.key, e.line);
}

inline Vec2 parse_vec2(std::string_view s, const ConfigEntry& e) {
    const auto comma = s.find(',');
    if (comma == std::string_view::npos)
        throw ConfigError("expected 'x,y', got '" + std::string(s) + "'", e.key, e.line);
    return {parse_double(trim(s.substr(0, comma)), e), parse_double(trim(s.substr(comma + 1)), e)};
}

struct KeyHandler {
    const char* key;
    const char* help;
    std::function<void(RunConfig&, std::string_view, const ConfigEntry&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class Member>
KeyHandler double_key(const char* key, const char* help, Member member) {
    return {key, help, [member](RunConfig& c, std::string_view v, const ConfigEntry& e) { c.spec.*member = parse_double(v, e); },
            [member](const RunConfig& c) { return format_double(c.spec.*member); }};
}

template <class Member>
KeyHandler int_key(const char* key, const char* help, Member member) {
    return {key, help, [member](RunConfig& c, std::string_view v, const ConfigEntry& e) { c.spec.*member = parse_int(v, e); },
            [member](const RunConfig& c) { return std::to_string(c.spec.*member); }};
}

/// Keys that choose the scenario; applied before every other key.
inline bool is_scenario_key(std::string_view key) { return key == "scenario" || key == "mesh"; }

inline const std::vector<KeyHandler>& key_handlers() {
    static const std::vector<KeyHandler> handlers = {
        {"scenario", "test1 or test2",
         [](RunConfig& c, std::string_view v, const ConfigEntry& e) {
             if (v != "test1" && v != "test2")
                 throw ConfigError("unknown scenario '" + std::string(v) + "' (expected test1 or test2)", e.key, e.line);
             c.scenario = v;
         },
         [](const RunConfig& c) { return c.scenario; }},
        {"mesh", "M1, M2, M3 or a target triangle count",
         [](RunConfig& c, std::string_view v, const ConfigEntry& e) {
             if (v != "M1" && v != "M2" && v != "M3" && parse_int(v, e) < 16)
                 throw ConfigError("custom mesh needs at least 16 triangles", e.key, e.line);
             c.mesh = v;
         },
         [](const RunConfig& c) { return c.mesh; }},
        double_key("dt", "time step [s]", &ScenarioSpec::dt),
        double_key("t_end", "final time [s]", &ScenarioSpec::t_end),
        double_key("fp_tol", "fixed-point relative tolerance", &ScenarioSpec::fp_tol),
        int_key("fp_max", "fixed-point iteration cap", &ScenarioSpec::fp_max),
        double_key("relaxation", "fixed-point relaxation in (0, 1]", &ScenarioSpec::relaxation),
        double_key("h_min", "interior thickness floor [m]", &ScenarioSpec::h_min),
        double_key("cd", "quadratic drag coefficient", &ScenarioSpec::cd),
        double_key("nu", "viscosity [m^2/s]", &ScenarioSpec::nu),
        double_key("gravity", "gravitational acceleration [m/s^2]", &ScenarioSpec::gravity),
        double_key("forcing_amplitude", "body force magnitude [m/s^2]", &ScenarioSpec::forcing_amplitude),
        double_key("forcing_duration", "forcing is active for 0 < t < duration [s]", &ScenarioSpec::forcing_duration),
        {"forcing_direction", "forcing direction as x,y",
         [](RunConfig& c, std::string_view v, const ConfigEntry& e) { c.spec.forcing_direction = parse_vec2(v, e); },
         [](const RunConfig& c) {
             return format_double(c.spec.forcing_direction.x()) + "," + format_double(c.spec.forcing_direction.y());
         }},
        double_key("contact_line_kappa", "contact-line regularization strength", &ScenarioSpec::contact_line_kappa),
        {"contact_line_enabled", "true or false",
         [](RunConfig& c, std::string_view v, const ConfigEntry& e) { c.spec.contact_line_enabled = parse_bool(v, e); },
         [](const RunConfig& c) { return std::string(c.spec.contact_line_enabled ? "true" : "false"); }},
        {"pressure_form", "gradient or divergence",
         [](RunConfig& c, std::string_view v, const ConfigEntry& e) {
             if (v == "gradient")
                 c.spec.pressure_form = PressureForm::gradient;
             else if (v == "divergence")
                 c.spec.pressure_form = PressureForm::divergence;
             else
                 throw ConfigError("expected gradient or divergence, got '" + std::string(v) + "'", e.key, e.line);
         },
         [](const RunConfig& c) {
             return std::string(c.spec.pressure_form == PressureForm::gradient ? "gradient" : "divergence");
         }},
        int_key("output_every", "steps between diagnostics rows", &ScenarioSpec::output_every),
        int_key("snapshot_every", "steps between VTK snapshots, 0 disables", &ScenarioSpec::snapshot_every),
        {"output_dir", "directory for all outputs",
         [](RunConfig& c, std::string_view v, const ConfigEntry& e) {
             if (v.empty()) throw ConfigError("must not be empty", e.key, e.line);
             c.output_dir = std::string(v);
         },
         [](const RunConfig& c) { return c.output_dir.string(); }},
        {"dump_operators", "write initial mass and stiffness matrices",
         [](RunConfig& c, std::string_view v, const ConfigEntry& e) { c.dump_operators = parse_bool(v, e); },
         [](const RunConfig& c) { return std::string(c.dump_operators ? "true" : "false"); }},
    };
    return handlers;
}

inline const KeyHandler* find_handler(std::string_view key) {
    for (const auto& h : key_handlers())
        if (key == h.key) return &h;
    return nullptr;
}

inline int mesh_target_of(const std::string& mesh) {
    if (mesh == "M1" || mesh == "M2" || mesh == "M3") return triangle_target(parse_mesh_variant(mesh));
    return std::stoi(mesh);
}

}  // namespace detail

/// Splits config text into entries. Unknown keys, malformed lines and
/// repeated keys are errors carrying the line number.
inline std::vector<ConfigEntry> parse_config_entries(std::istream& in) {
    std::vector<ConfigEntry> entries;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string_view text = raw;
        if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
        text = detail::trim(text);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("expected 'key = value', got '" + std::string(text) + "'", {}, line);
        ConfigEntry e{std::string(detail::trim(text.substr(0, eq))), std::string(detail::trim(text.substr(eq + 1))), line};
        if (e.key.empty()) throw ConfigError("missing key before '='", {}, line);
        if (detail::find_handler(e.key) == nullptr) throw ConfigError("unknown key", e.key, line);
        if (e.value.empty()) throw ConfigError("missing value", e.key, line);
        for (const auto& prev : entries)
            if (prev.key == e.key)
                throw ConfigError("repeated key (first set on line " + std::to_string(prev.line) + ")", e.key, line);
        entries.push_back(std::move(e));
    }
    return entries;
}

/// Builds the configuration from file entries followed by overrides. The
/// scenario and mesh are resolved first so that the remaining keys adjust
/// that scenario's parameters.
inline RunConfig resolve_config(const std::vector<ConfigEntry>& file, const std::vector<ConfigEntry>& overrides = {}) {
    std::vector<ConfigEntry> all = file;
    all.insert(all.end(), overrides.begin(), overrides.end());
    for (const auto& e : all)
        if (detail::find_handler(e.key) == nullptr) throw ConfigError("unknown key", e.key, e.line);

    RunConfig config;
    for (const auto& e : all)
        if (detail::is_scenario_key(e.key)) detail::find_handler(e.key)->set(config, e.value, e);
    const int target = detail::mesh_target_of(config.mesh);
    config.spec = config.scenario == "test2" ? test2_spec(target) : test1_spec(target);
    for (const auto& e : all)
        if (!detail::is_scenario_key(e.key)) detail::find_handler(e.key)->set(config, e.value, e);

    try {
        config.spec.validate();
    } catch (const ConfigError& err) {
        int line = 0;
        for (const auto& e : all)
            if (e.key == err.key()) line = e.line;
        if (line > 0) throw ConfigError(err.what(), {}, line);
        throw;
    }
    return config;
}

inline RunConfig parse_config(const std::filesystem::path& path, const std::vector<ConfigEntry>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    return resolve_config(parse_config_entries(in), overrides);
}

/// The fully resolved configuration in config-file syntax.
inline std::string format_manifest(const RunConfig& config) {
    std::string out;
    for (const auto& h : detail::key_handlers()) out += std::string(h.key) + " = " + h.get(config) + "\n";
    return out;
}

/// One "key  default  description" line per key, for --help.
inline std::string describe_keys() {
    const RunConfig defaults;
    std::string out;
    for (const auto& h : detail::key_handlers()) {
        std::string line = "  " + std::string(h.key);
        line.resize(24, ' ');
        std::string value = h.get(defaults);
        value.resize(std::max<std::size_t>(value.size() + 1, 10), ' ');
        out += line + value + " " + h.help + "\n";
    }
    return out;
}

inline constexpr const char* kDiagnosticsHeader =
    "t,kinetic,potential,mass,probe_radius,probe_ground_level,fp_iters,min_area";

inline std::string format_diagnostics_row(const DiagnosticsRow& row) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g", row.t, row.kinetic, row.potential,
                  row.mass, row.probe_radius, row.probe_ground_level, row.fp_iters, row.min_area);
    return buf;
}

/// Legacy ASCII VTK unstructured grid of linear triangles with thickness,
/// free surface, speed and velocity as point data.
inline void write_vtk(std::ostream& out, const SimState& s) {
    const auto n = s.mesh.vertex_count();
    const auto nt = s.mesh.triangle_count();
    const ScalarField eta = s.eta();
    char buf[128];
    const auto num = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return std::string(buf);
    };

    out << "# vtk DataFile Version 3.0\n";
    out << "shallow water state t=" << num(s.t) << " step=" << s.step << "\n";
    out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << n << " double\n";
    for (const Vec2& p : s.mesh.vertices()) out << num(p.x()) << ' ' << num(p.y()) << " 0\n";
    out << "CELLS " << nt << ' ' << 4 * nt << "\n";
    for (const Triangle& t : s.mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << "\n";
    out << "CELL_TYPES " << nt << "\n";
    for (std::size_t t = 0; t < nt; ++t) out << "5\n";
    out << "POINT_DATA " << n << "\n";
    const auto scalars = [&](const char* name, auto&& value) {
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (Index v = 0; v < static_cast<Index>(n); ++v) out << num(value(v)) << "\n";
    };
    scalars("h", [&](Index v) { return s.h(v); });
    scalars("eta", [&](Index v) { return eta(v); });
    scalars("speed", [&](Index v) { return s.u.row(v).norm(); });
    out << "VECTORS u double\n";
    for (Index v = 0; v < static_cast<Index>(n); ++v) out << num(s.u(v, 0)) << ' ' << num(s.u(v, 1)) << " 0\n";
}

inline std::string snapshot_name(long step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "mesh_%06ld.vtk", step);
    return buf;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    body(out);
    out.flush();
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace detail

/// Runs the configured scenario to t_end, writing diagnostics.csv, snapshots
/// and run_manifest into output_dir. Returns 0 on success and 2 when the
/// simulation aborts; in that case the CSV ends with a row for the last valid
/// state and a single "error: ..." line goes to err.
inline int run(const RunConfig& config, std::ostream& err = std::cerr) {
    const auto& dir = config.output_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        err << "error: kind=IOError step=0 detail=cannot create '" << dir.string() << "': " << ec.message() << "\n";
        return 2;
    }

    std::ofstream csv;
    long last_row_step = -1;
    std::optional<Simulation> sim;
    const auto write_row = [&](int fp_iters) {
        const SimState& s = sim->state();
        csv << format_diagnostics_row(diagnostics(s, sim->spec(), fp_iters)) << "\n";
        csv.flush();
        last_row_step = s.step;
    };
    const auto snapshot = [&]() {
        const SimState& s = sim->state();
        detail::write_file(dir / snapshot_name(s.step), [&](std::ostream& out) { write_vtk(out, s); });
    };

    long failed_step = 0;
    try {
        detail::write_file(dir / "run_manifest", [&](std::ostream& out) { out << format_manifest(config); });
        sim.emplace(config.spec, build_state(config.spec));
        if (config.dump_operators) {
            const TriMesh& mesh = sim->state().mesh;
            detail::write_file(dir / "mass.coo", [&](std::ostream& out) { write_coordinate_format(out, assemble_mass(mesh)); });
            detail::write_file(dir / "stiffness.coo",
                               [&](std::ostream& out) { write_coordinate_format(out, assemble_stiffness(mesh)); });
        }

        csv.open(dir / "diagnostics.csv", std::ios::binary);
        if (!csv) throw Error("cannot open '" + (dir / "diagnostics.csv").string() + "' for writing");
        csv << kDiagnosticsHeader << "\n";
        write_row(0);
        const int snap = config.spec.snapshot_every;
        if (snap > 0) snapshot();

        const long total = sim->total_steps();
        for (long n = 1; n <= total; ++n) {
            failed_step = n;
            const StepReport& report = sim->step();
            if (n % config.spec.output_every == 0 || n == total) write_row(report.fixed_point_iterations);
            if (snap > 0 && (n % snap == 0 || n == total)) snapshot();
        }
        if (!csv) throw Error("failed writing diagnostics.csv");
        return 0;
    } catch (const Error& e) {
        if (sim && csv.is_open() && last_row_step != sim->state().step) {
            try {
                write_row(sim->last_report().fixed_point_iterations);
            } catch (const Error&) {
            }
        }
        err << "error: kind=" << e.kind() << " step=" << failed_step << " detail=" << e.what() << "\n";
        return 2;
    }
}

}  // namespace swale
