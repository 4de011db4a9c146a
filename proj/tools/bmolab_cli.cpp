// Batch experiment driver: loads a JSON config, runs one of the five
// commands, and writes deterministic JSON (and optionally CSV) reports.
//
// Exit codes: 0 success, 1 configuration / I-O error, 2 a checked
// mathematical property failed.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bmolab/bmo.hpp"
#include "bmolab/errors.hpp"
#include "bmolab/gf1.hpp"
#include "bmolab/grid_ops.hpp"
#include "bmolab/integrand_config.hpp"
#include "bmolab/json_out.hpp"
#include "bmolab/parallel.hpp"
#include "bmolab/report_json.hpp"
#include "bmolab/rng.hpp"
#include "bmolab/taylor.hpp"
#include "bmolab/variational.hpp"

using nlohmann::json;
using namespace bmolab;

namespace {

struct Options {
    std::string command;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    int workers = 0;
    bool no_timestamp = false;
    bool csv = false;
};

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json config;
    try {
        in >> config;
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    return config;
}

const json& require_field(const json& config, const std::string& key) {
    if (!config.contains(key))
        throw ConfigError("config field '" + key + "' is required");
    return config.at(key);
}

Grid grid_from_json(const json& spec) {
    const int dim = require_field(spec, "dim").get<int>();
    const std::vector<int> shape = require_field(spec, "shape").get<std::vector<int>>();
    const double spacing = require_field(spec, "spacing").get<double>();
    std::vector<double> origin;
    if (spec.contains("origin")) origin = spec.at("origin").get<std::vector<double>>();
    try {
        return Grid(dim, shape, spacing, origin);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config field 'grid' is invalid: ") + e.what());
    }
}

/// Tensor fields come from GF1 files or from seeded generators.
TensorField field_from_json(const json& spec, const std::optional<Grid>& grid, int rows,
                            std::uint64_t seed, std::string& hashed_bytes) {
    if (spec.contains("gf1")) {
        const std::string path = spec.at("gf1").get<std::string>();
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open GF1 input: " + path);
        std::stringstream buffer;
        buffer << in.rdbuf();
        hashed_bytes += buffer.str();
        return read_gf1(buffer, path);
    }
    if (!spec.contains("generator"))
        throw ConfigError("field source needs 'gf1' or 'generator'");
    if (!grid) throw ConfigError("generator field sources need a 'grid' in the config");
    const json& gen = spec.at("generator");
    const std::string type = require_field(gen, "type").get<std::string>();
    const std::int64_t cells = grid->cell_count();
    const int comps = rows * grid->dim();
    if (type == "zeros") return TensorField::zeros(*grid, rows);
    if (type == "constant") {
        const double value = gen.value("value", 1.0);
        return TensorField(*grid, rows,
                           std::vector<double>(static_cast<std::size_t>(cells) * comps, value));
    }
    if (type == "random") {
        Rng rng(Rng::derive(seed, gen.value("stream", 0)));
        const double amp = gen.value("amplitude", 1.0);
        std::vector<double> v(static_cast<std::size_t>(cells) * comps);
        for (double& x : v) x = rng.uniform(-amp, amp);
        TensorField field(*grid, rows, std::move(v));
        if (gen.contains("bmo_norm")) {
            const double target = gen.at("bmo_norm").get<double>();
            const double current = bmo_norm_value(field);
            if (!(current > 0.0)) throw ConfigError("generator produced a constant field");
            std::vector<double> scaled(field.values().begin(), field.values().end());
            for (double& x : scaled) x *= target / current;
            field = TensorField(*grid, rows, std::move(scaled));
        }
        return field;
    }
    throw ConfigError("field generator '" + type +
                      "' is unknown; known generators: zeros, constant, random");
}

BoundaryCondition bc_from_json(const json& spec, const Grid& grid, int rows) {
    const std::string kind = require_field(spec, "kind").get<std::string>();
    if (kind == "neumann") return BoundaryCondition::neumann();

    ScalarGridFunction data = [&] {
        if (!spec.contains("data") || spec.at("data").is_null())
            return ScalarGridFunction::zeros(grid, rows);
        const json& d = spec.at("data");
        if (d.contains("affine")) {
            const json& aff = d.at("affine");
            const auto a_rows =
                require_field(aff, "A").get<std::vector<std::vector<double>>>();
            const auto b = require_field(aff, "b").get<std::vector<double>>();
            if (static_cast<int>(a_rows.size()) != rows ||
                static_cast<int>(b.size()) != rows)
                throw ConfigError("bc.data.affine: A and b must have N rows");
            std::vector<double> a_flat;
            for (const auto& row : a_rows) {
                if (static_cast<int>(row.size()) != grid.dim())
                    throw ConfigError("bc.data.affine: A rows must have n entries");
                a_flat.insert(a_flat.end(), row.begin(), row.end());
            }
            return affine_function(grid, rows, a_flat, b);
        }
        throw ConfigError("bc.data: only 'affine' (or null for zero) is supported");
    }();

    if (kind == "dirichlet") return BoundaryCondition::dirichlet(std::move(data));
    if (kind == "mixed") {
        std::vector<Face> faces;
        for (const std::string& name :
             require_field(spec, "faces").get<std::vector<std::string>>()) {
            if (name.size() != 2 || (name[1] != '-' && name[1] != '+') || name[0] < 'x' ||
                name[0] > 'z')
                throw ConfigError("bc.faces: use axis letters with a sign, e.g. \"x-\"");
            faces.push_back(Face{name[0] - 'x', name[1] == '+'});
        }
        try {
            return BoundaryCondition::mixed(std::move(faces), std::move(data));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("bc.faces: ") + e.what());
        }
    }
    throw ConfigError("bc.kind '" + kind +
                      "' is unknown; known kinds: dirichlet, neumann, mixed");
}

std::optional<Loads> loads_from_json(const json& config) {
    if (!config.contains("loads")) return std::nullopt;
    Loads loads;
    const json& spec = config.at("loads");
    if (spec.contains("body")) loads.body = spec.at("body").get<std::vector<double>>();
    if (spec.contains("surface"))
        loads.surface = spec.at("surface").get<std::vector<double>>();
    return loads;
}

std::vector<PerturbationKind> generators_from_json(const json& config) {
    const std::vector<PerturbationKind> all = {
        PerturbationKind::bump, PerturbationKind::oscillation, PerturbationKind::log_spike,
        PerturbationKind::smoothed_noise};
    if (!config.contains("generators")) return all;
    std::vector<PerturbationKind> kinds;
    for (const std::string& name : config.at("generators").get<std::vector<std::string>>()) {
        bool found = false;
        for (PerturbationKind k : all) {
            if (name == perturbation_name(k)) {
                kinds.push_back(k);
                found = true;
            }
        }
        if (!found)
            throw ConfigError("generators: '" + name +
                              "' is unknown; known: bump, oscillation, log_spike, "
                              "smoothed_noise");
    }
    if (kinds.empty()) throw ConfigError("generators: list must not be empty");
    return kinds;
}

/// nlohmann values (sorted keys) -> deterministic report values.
JsonValue echo_json(const json& j) {
    switch (j.type()) {
    case json::value_t::object: {
        JsonValue out = JsonValue::object();
        for (const auto& [key, value] : j.items()) out.set(key, echo_json(value));
        return out;
    }
    case json::value_t::array: {
        JsonValue out = JsonValue::array();
        for (const json& item : j) out.push(echo_json(item));
        return out;
    }
    case json::value_t::string:
        return JsonValue(j.get<std::string>());
    case json::value_t::boolean:
        return JsonValue(j.get<bool>());
    case json::value_t::number_integer:
        return JsonValue(j.get<std::int64_t>());
    case json::value_t::number_unsigned:
        return JsonValue(j.get<std::uint64_t>());
    case json::value_t::number_float:
        return JsonValue(j.get<double>());
    default:
        return JsonValue();
    }
}

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + path);
    out << text;
    if (!out) throw ConfigError("write failed: " + path);
}

std::string csv_path_for(const std::string& output) {
    const std::size_t dot = output.rfind('.');
    if (dot == std::string::npos) return output + ".csv";
    return output.substr(0, dot) + ".csv";
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct RunContext {
    json config;
    std::uint64_t seed = 0;
    bool no_timestamp = false;
    bool csv = false;
    std::string output;
    std::string hashed_bytes; // config dump + raw input files
};

JsonValue report_header(const std::string& command, const RunContext& ctx) {
    JsonValue out = JsonValue::object();
    out.set("command", command);
    if (!ctx.no_timestamp) out.set("timestamp", iso_timestamp());
    out.set("seed", ctx.seed);
    out.set("inputs_fnv1a", fnv1a_hex(ctx.hashed_bytes));
    out.set("config", echo_json(ctx.config));
    return out;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int run_bmo_norm(RunContext& ctx) {
    const json& config = ctx.config;
    std::optional<Grid> grid;
    if (config.contains("grid")) grid = grid_from_json(config.at("grid"));
    const TensorField field = field_from_json(require_field(config, "input"), grid,
                                              config.value("rows", 1), ctx.seed,
                                              ctx.hashed_bytes);
    const std::string mode_name = config.value("mode", "all");
    if (mode_name != "all" && mode_name != "dyadic")
        throw ConfigError("mode must be 'all' or 'dyadic'");
    const CubeMode mode = mode_name == "all" ? CubeMode::all : CubeMode::dyadic;

    const NormReport report = bmo_seminorm(field, mode);
    JsonValue out = report_header("bmo-norm", ctx);
    out.set("norm_report", json_of(field.grid(), report));

    int exit_code = 0;
    if (config.value("brute_check", false)) {
        const NormReport brute = bmo_seminorm_bruteforce(field);
        out.set("brute_report", json_of(field.grid(), brute));
        const double diff = std::abs(report.seminorm - brute.seminorm);
        const bool match = diff <= 1e-12 * (1.0 + brute.seminorm);
        out.set("brute_match", match);
        if (!match) exit_code = 2;
    }
    write_text_file(ctx.output, out.dump());
    return exit_code;
}

int run_interp_calibrate(RunContext& ctx) {
    const json& config = ctx.config;
    const Grid grid = grid_from_json(require_field(config, "grid"));
    const int rows = config.value("rows", 1);
    const double p = require_field(config, "p").get<double>();
    const double q = require_field(config, "q").get<double>();
    auto family = calibration_family_named(grid, rows, ctx.seed,
                                           config.value("random_members", 8));
    if (config.contains("extra_fields")) {
        std::optional<Grid> g = grid;
        int extra = 0;
        for (const json& spec : config.at("extra_fields"))
            family.push_back({"extra_" + std::to_string(extra++),
                              field_from_json(spec, g, rows, ctx.seed, ctx.hashed_bytes)});
    }
    const CalibrationReport report = calibrate(family, p, q);
    JsonValue out = report_header("interp-calibrate", ctx);
    out.set("calibration", json_of(report));
    write_text_file(ctx.output, out.dump());

    if (ctx.csv) {
        std::string csv = "name,ratio\n";
        for (const CalibrationMember& m : report.members)
            csv += m.name + "," + format_double(m.ratio) + "\n";
        write_text_file(csv_path_for(ctx.output), csv);
    }
    return 0;
}

int run_taylor_check(RunContext& ctx) {
    const json& config = ctx.config;
    std::optional<Grid> grid;
    if (config.contains("grid")) grid = grid_from_json(config.at("grid"));
    const int rows = config.value("rows", 1);
    const TensorField f =
        field_from_json(require_field(config, "f"), grid, rows, ctx.seed, ctx.hashed_bytes);
    const TensorField g =
        field_from_json(require_field(config, "g"), grid, rows,
                        Rng::derive(ctx.seed, 1), ctx.hashed_bytes);
    if (!(f.grid() == g.grid()) || f.rows() != g.rows())
        throw ConfigError("f and g must live on the same grid with the same shape");
    const Integrand w = integrand_from_json(require_field(config, "integrand"), f.rows(),
                                            f.grid().dim());
    const double big_m = require_field(config, "M").get<double>();
    const int nodes = config.value("nodes", 8);

    double j2;
    const json& j2_spec = require_field(config, "j2");
    if (j2_spec.is_string() && j2_spec.get<std::string>() == "calibrate") {
        auto family = calibration_family(f.grid(), rows, ctx.seed);
        std::vector<double> hv(g.values().begin(), g.values().end());
        for (std::size_t i = 0; i < hv.size(); ++i) hv[i] -= f.values()[i];
        TensorField h(f.grid(), rows, std::move(hv));
        if (bmo_norm_value(h) > 0.0) family.push_back(std::move(h));
        j2 = calibrate_j2(family, w.order(), w.order() + w.growth_r());
    } else if (j2_spec.is_number()) {
        j2 = j2_spec.get<double>();
    } else {
        throw ConfigError("j2 must be a number or \"calibrate\"");
    }

    const TaylorReport report = verify_taylor_inequality(w, f, g, big_m, j2, nodes);
    JsonValue out = report_header("taylor-check", ctx);
    out.set("taylor_report", json_of(report));
    write_text_file(ctx.output, out.dump());

    // Human summary table.
    double term_sum = 0.0;
    for (double t : report.expansion_terms) term_sum += t;
    std::printf("%-22s %20s\n", "quantity", "value");
    std::printf("%-22s %20.12e\n", "lhs", report.lhs);
    std::printf("%-22s %20.12e\n", "sum(terms)", term_sum);
    std::printf("%-22s %20.12e\n", "remainder", report.remainder_quadrature);
    std::printf("%-22s %20.12e\n", "identity_gap", report.identity_gap);
    std::printf("%-22s %20.12e\n", "c_bound", report.c_bound);
    std::printf("%-22s %20.12e\n", "inequality_margin", report.inequality_margin);

    const double scale = 1.0 + std::abs(report.lhs);
    const bool violated =
        report.pointwise_violations > 0 || !report.integrated_bound_ok ||
        report.identity_gap > 1e-10 * scale ||
        (report.j2_valid_for_field && report.inequality_margin < -1e-10 * scale);
    return violated ? 2 : 0;
}

int run_el_solve(RunContext& ctx) {
    const json& config = ctx.config;
    const Grid grid = grid_from_json(require_field(config, "grid"));
    const int rows = config.value("rows", 1);
    const Integrand w =
        integrand_from_json(require_field(config, "integrand"), rows, grid.dim());
    const BoundaryCondition bc = bc_from_json(require_field(config, "bc"), grid, rows);
    const std::optional<Loads> loads = loads_from_json(config);
    const double tol = config.value("tol", 1e-8);
    const int max_iter = config.value("max_iter", 100000);

    const std::string init_name = config.value("init", "data");
    ScalarGridFunction init = [&] {
        if (init_name == "zero") return ScalarGridFunction::zeros(grid, rows);
        if (init_name == "data") {
            if (bc.has_dirichlet()) return *bc.data();
            return ScalarGridFunction::zeros(grid, rows);
        }
        throw ConfigError("init must be 'data' or 'zero'");
    }();
    if (bc.has_dirichlet() && init_name == "zero") {
        std::vector<double> v(init.values().begin(), init.values().end());
        bc.enforce_data(grid, rows, v);
        init = ScalarGridFunction(grid, rows, std::move(v));
    }

    const Equilibrium eq = solve_el(w, bc, init, tol, max_iter,
                                    loads ? &*loads : nullptr);
    JsonValue out = report_header("el-solve", ctx);
    out.set("grid", json_of(grid));
    out.set("equilibrium", json_of(eq, config.value("include_state", true)));
    write_text_file(ctx.output, out.dump());
    if (config.contains("gradient_gf1"))
        write_gf1_file(config.at("gradient_gf1").get<std::string>(), gradient(eq.u_e));
    return 0;
}

int run_stress_test(RunContext& ctx) {
    const json& config = ctx.config;
    const Grid grid = grid_from_json(require_field(config, "grid"));
    const int rows = config.value("rows", 1);
    const Integrand w =
        integrand_from_json(require_field(config, "integrand"), rows, grid.dim());
    const BoundaryCondition bc = bc_from_json(require_field(config, "bc"), grid, rows);
    const std::optional<Loads> loads = loads_from_json(config);
    const Loads* loads_ptr = loads ? &*loads : nullptr;
    const json solver = config.value("solver", json::object());
    const double tol = solver.value("tol", 1e-8);
    const int max_iter = solver.value("max_iter", 200000);
    const int n_samples = config.value("n_samples", 100);
    const std::vector<PerturbationKind> generators = generators_from_json(config);

    ScalarGridFunction init =
        bc.has_dirichlet() ? *bc.data() : ScalarGridFunction::zeros(grid, rows);
    Equilibrium eq = solve_el(w, bc, init, tol, max_iter, loads_ptr);
    if (!eq.converged) {
        std::fprintf(stderr, "stress-test: equilibrium solve did not converge "
                             "(residual %.3e after %d iterations)\n",
                     eq.el_residual_norm, eq.solver_iterations);
    }
    // What-if knob: run the margins against a claimed coercivity constant
    // instead of the estimated one (sensitivity of the certificate to 4a).
    const bool coercivity_overridden = config.contains("coercivity_4a");
    if (coercivity_overridden)
        eq.coercivity_4a = config.at("coercivity_4a").get<double>();

    double j_constant;
    const json j_spec = config.value("j", json("calibrate"));
    if (j_spec.is_string() && j_spec.get<std::string>() == "calibrate") {
        const auto family = calibration_family(grid, rows, ctx.seed);
        j_constant = calibrate_j2(family, 2.0, 3.0);
    } else if (j_spec.is_number()) {
        j_constant = j_spec.get<double>();
    } else {
        throw ConfigError("j must be a number or \"calibrate\"");
    }

    // delta: a number runs that radius and gates the exit code on failures;
    // "sweep" searches for the largest failure-free radius.
    const json& delta_spec = require_field(config, "delta");
    bool sweep_mode = false;
    double delta;
    if (delta_spec.is_string() && delta_spec.get<std::string>() == "sweep") {
        sweep_mode = true;
        delta = config.value("sweep_start", 0.05);
    } else if (delta_spec.is_number()) {
        delta = delta_spec.get<double>();
    } else {
        throw ConfigError("delta must be a number or \"sweep\"");
    }

    StressReport report = [&] {
        if (!sweep_mode)
            return minimizer_stress_test(w, eq, bc, delta, generators, n_samples, ctx.seed,
                                         j_constant, loads_ptr);
        // Expand until failures appear, then let the bisection refine.
        double radius = delta;
        for (int growth = 0; growth < 12; ++growth) {
            StressReport trial =
                minimizer_stress_test(w, eq, bc, radius, generators, n_samples,
                                      Rng::derive(ctx.seed, 7000 + growth), j_constant,
                                      loads_ptr, false, 0);
            if (trial.failures > 0) break;
            radius *= 2.0;
        }
        return minimizer_stress_test(w, eq, bc, radius, generators, n_samples, ctx.seed,
                                     j_constant, loads_ptr);
    }();

    JsonValue out = report_header("stress-test", ctx);
    out.set("grid", json_of(grid));
    out.set("equilibrium", json_of(eq, false));
    out.set("coercivity_overridden", coercivity_overridden);
    out.set("stress_report", json_of(report));
    if (config.contains("q_variant")) {
        const double q = require_field(config.at("q_variant"), "q").get<double>();
        double jq = j_constant;
        if (config.at("q_variant").contains("j"))
            jq = config.at("q_variant").at("j").get<double>();
        else if (q != 3.0) {
            const auto family = calibration_family(grid, rows, ctx.seed);
            jq = calibrate_j2(family, 2.0, q);
        }
        out.set("q_variant", json_of(remark_q_variant(report, q, jq)));
    }
    write_text_file(ctx.output, out.dump());

    if (ctx.csv) {
        std::string csv = "id,generator,skipped,grad_bmo,grad_l2sq,grad_l3,"
                          "energy_delta,margin,ineq47_ok,j_valid\n";
        for (const StressSample& s : report.samples) {
            csv += std::to_string(s.id);
            csv += ",";
            csv += perturbation_name(s.kind);
            csv += s.skipped ? ",1," : ",0,";
            csv += format_double(s.grad_bmo) + "," + format_double(s.grad_l2sq) + "," +
                   format_double(s.grad_l3) + "," + format_double(s.energy_delta) + "," +
                   format_double(s.margin);
            csv += s.ineq47_ok ? ",1" : ",0";
            csv += s.j_valid ? ",1\n" : ",0\n";
        }
        write_text_file(csv_path_for(ctx.output), csv);
    }

    if (!sweep_mode && report.failures > 0) return 2;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"BMO-norm experiments: seminorm sweeps, interpolation calibration, "
                 "expansion-inequality checks, equilibrium solves and minimizer "
                 "stress tests"};
    app.require_subcommand(1);

    Options opt;
    std::uint64_t seed_flag = 0;
    bool seed_given = false;
    for (const char* name :
         {"bmo-norm", "interp-calibrate", "taylor-check", "el-solve", "stress-test"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", opt.config_path, "experiment config (JSON)")
            ->required();
        sub->add_option("--seed", seed_flag, "override the config seed")
            ->each([&](const std::string&) { seed_given = true; });
        sub->add_option("--workers", opt.workers, "cap OpenMP worker threads");
        sub->add_flag("--no-timestamp", opt.no_timestamp,
                      "omit the timestamp field (byte-reproducible reports)");
        sub->add_flag("--csv", opt.csv, "also write the tabular CSV view");
        sub->callback([&, name] { opt.command = name; });
    }
    CLI11_PARSE(app, argc, argv);

    try {
        RunContext ctx;
        ctx.config = load_config(opt.config_path);
        if (ctx.config.contains("command") &&
            ctx.config.at("command").get<std::string>() != opt.command)
            throw ConfigError("config field 'command' says '" +
                              ctx.config.at("command").get<std::string>() +
                              "' but the CLI ran '" + opt.command + "'");
        ctx.seed = seed_given ? seed_flag : ctx.config.value("seed", 0ULL);
        ctx.no_timestamp = opt.no_timestamp;
        ctx.csv = opt.csv;
        ctx.output = ctx.config.value("output", std::string());
        if (ctx.output.empty())
            throw ConfigError("config field 'output' is required");
        if (opt.workers > 0) set_workers(opt.workers);
        ctx.hashed_bytes = ctx.config.dump();

        if (opt.command == "bmo-norm") return run_bmo_norm(ctx);
        if (opt.command == "interp-calibrate") return run_interp_calibrate(ctx);
        if (opt.command == "taylor-check") return run_taylor_check(ctx);
        if (opt.command == "el-solve") return run_el_solve(ctx);
        if (opt.command == "stress-test") return run_stress_test(ctx);
        throw ConfigError("unknown command " + opt.command);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
