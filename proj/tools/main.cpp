#include "config.hpp"
#include "report.hpp"

#include <wgstokes/wgstokes.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <vector>

namespace fs = std::filesystem;
using wgs::cli::ReportRow;
using wgs::cli::StudyConfig;
using wgs::cli::UsageError;

namespace {

// A failing library call; main turns it into exit code 1.
struct ModuleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(wgs_status status, const std::string& what)
{
    if (status != WGS_OK) {
        throw ModuleError(what + ": " + wgs_status_string(status) + ": " + wgs_last_error());
    }
}

using MeshPtr = std::unique_ptr<wgs_mesh, decltype(&wgs_mesh_free)>;
using SolutionPtr = std::unique_ptr<wgs_solution, decltype(&wgs_solution_free)>;

wgs_family family_of(const StudyConfig& c) { return c.mesh == "tri" ? WGS_MESH_TRIANGLE : WGS_MESH_NONCONVEX_L; }

wgs_problem problem_of(const StudyConfig& c)
{
    if (c.problem == "patch-k1") return WGS_PROBLEM_PATCH_K1;
    if (c.problem == "patch-k2") return WGS_PROBLEM_PATCH_K2;
    return WGS_PROBLEM_S1;
}

MeshPtr generated_mesh(const StudyConfig& c, int level)
{
    wgs_mesh* m = nullptr;
    check(wgs_mesh_build(family_of(c), 1 << level, &m), "building mesh");
    return {m, wgs_mesh_free};
}

MeshPtr file_mesh(const std::string& path)
{
    wgs_mesh* m = nullptr;
    check(wgs_mesh_read(path.c_str(), &m), "reading " + path);
    return {m, wgs_mesh_free};
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path);
    out << text;
    if (!out) throw ModuleError("cannot write " + path.string());
}

void prepare_out(const StudyConfig& c)
{
    if (c.out.empty()) return;
    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec) throw ModuleError("cannot create " + c.out + ": " + ec.message());
}

int run_solve(const StudyConfig& c)
{
    const auto t0 = std::chrono::steady_clock::now();
    wgs_solve_options options;
    wgs_solve_options_default(&options);
    options.quad_degree = c.quad_degree;
    options.solver = c.solver == "minres" ? WGS_SOLVER_MINRES : WGS_SOLVER_DIRECT;
    options.r_shift = c.r_shift;

    std::vector<ReportRow> rows;
    auto extras = nlohmann::json::array();
    SolutionPtr finest(nullptr, wgs_solution_free);
    const auto solve_one = [&](const wgs_mesh* mesh, int level, int n) {
        const auto ts = std::chrono::steady_clock::now();
        wgs_solution* s = nullptr;
        check(wgs_solve(mesh, problem_of(c), c.order, &options, &s), "solving level " + std::to_string(level));
        SolutionPtr sol(s, wgs_solution_free);
        wgs_error_report e{};
        wgs_solve_info info{};
        check(wgs_solution_errors(sol.get(), &e), "measuring errors");
        check(wgs_solution_info(sol.get(), &info), "reading solve statistics");
        ReportRow row;
        row.level = level;
        row.n = n;
        row.h = e.h;
        row.ndofs = e.n_dofs;
        row.errors = {e.err_l2, e.err_energy, e.err_pressure};
        row.residual = info.residual;
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - ts).count();
        rows.push_back(row);
        extras.push_back({{"n_u", info.n_u},
                          {"n_p", info.n_p},
                          {"nnz", info.nnz},
                          {"solve_seconds", info.seconds},
                          {"refinement_steps", info.iterations},
                          {"pressure_integral", info.pressure_integral},
                          {"divergence_residual", info.divergence_residual}});
        std::cerr << "level " << level << ": h = " << e.h << ", ndofs = " << e.n_dofs << ", "
                  << wgs::cli::format_error(e.err_l2) << " / " << wgs::cli::format_error(e.err_energy) << " / "
                  << wgs::cli::format_error(e.err_pressure) << " (" << row.seconds << " s)\n";
        finest = std::move(sol);
    };

    if (!c.mesh_file.empty()) {
        const auto mesh = file_mesh(c.mesh_file);
        solve_one(mesh.get(), 0, 0);
    } else {
        for (int level = c.levels.first; level <= c.levels.last; ++level) {
            const auto mesh = generated_mesh(c, level);
            solve_one(mesh.get(), level, 1 << level);
        }
    }
    wgs::cli::fill_rates(rows);

    const std::string title = c.problem + ", " + (c.mesh_file.empty() ? c.mesh : c.mesh_file) + ", k = " +
                              std::to_string(c.order);
    const auto markdown = wgs::cli::to_markdown(rows, title);
    std::cout << markdown;

    if (!c.export_vtk.empty()) check(wgs_solution_write_vtk(finest.get(), c.export_vtk.c_str()), "writing VTK");
    if (!c.out.empty()) {
        auto levels = wgs::cli::rows_to_json(rows);
        for (std::size_t i = 0; i < rows.size(); ++i) levels[i].update(extras[i]);
        const nlohmann::json summary = {
            {"version", wgs_version()},
            {"config", wgs::cli::to_json(c)},
            {"levels", levels},
            {"total_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
        write_file(fs::path(c.out) / "rates.csv", wgs::cli::to_csv(rows));
        write_file(fs::path(c.out) / "rates.md", markdown);
        write_file(fs::path(c.out) / "summary.json", summary.dump(2) + "\n");
    }
    return 0;
}

int run_probe(const StudyConfig& c)
{
    nlohmann::json result = {{"version", wgs_version()}, {"config", wgs::cli::to_json(c)}};
    auto norm = nlohmann::json::array();
    auto infsup = nlohmann::json::array();
    for (int level = c.levels.first; level <= c.levels.last; ++level) {
        const int n = 1 << level;
        const auto mesh = generated_mesh(c, level);
        if (c.norm_equivalence) {
            wgs_ratio_stats r{};
            check(wgs_probe_norm_equivalence(mesh.get(), c.order, c.samples, c.seed, &r), "norm-equivalence probe");
            norm.push_back({{"level", level},
                            {"n", n},
                            {"min", r.min},
                            {"max", r.max},
                            {"mean", r.mean},
                            {"samples", r.samples},
                            {"rejected", r.rejected}});
            std::cerr << "level " << level << ": ratio in [" << r.min << ", " << r.max << "]\n";
        }
        if (c.infsup) {
            wgs_infsup_result r{};
            check(wgs_probe_infsup(mesh.get(), c.order, &r), "inf-sup probe");
            infsup.push_back({{"level", level},
                              {"n", n},
                              {"beta", r.beta},
                              {"min_eig_with_constants", r.min_eig_with_constants},
                              {"n_u", r.n_u},
                              {"n_p", r.n_p}});
            std::cerr << "level " << level << ": beta_h = " << r.beta << "\n";
        }
    }
    if (c.norm_equivalence) result["norm_equivalence"] = norm;
    if (c.infsup) result["infsup"] = infsup;
    const auto text = result.dump(2) + "\n";
    std::cout << text;
    if (!c.out.empty()) write_file(fs::path(c.out) / "probe.json", text);
    return 0;
}

int run_mesh_check(const StudyConfig& c)
{
    std::vector<std::pair<std::string, MeshPtr>> meshes;
    if (!c.mesh_file.empty()) {
        meshes.emplace_back(c.mesh_file, file_mesh(c.mesh_file));
    } else {
        for (int level = c.levels.first; level <= c.levels.last; ++level)
            meshes.emplace_back(c.mesh + " level " + std::to_string(level), generated_mesh(c, level));
    }
    if (!c.write_mesh.empty() && meshes.size() != 1) throw UsageError("--write needs exactly one mesh");

    int total = 0;
    for (const auto& [name, mesh] : meshes) {
        wgs_mesh_info info{};
        check(wgs_mesh_info_get(mesh.get(), &info), "mesh info");
        int violations = 0;
        std::vector<char> buffer(1 << 16, '\0');
        check(wgs_mesh_validate(mesh.get(), &violations, buffer.data(), buffer.size()), "validating mesh");
        std::cout << name << ": " << info.n_vertices << " vertices, " << info.n_cells << " cells ("
                  << info.n_nonconvex_cells << " non-convex), " << info.n_edges << " edges ("
                  << info.n_boundary_edges << " on the boundary), max " << info.max_edges_per_cell
                  << " edges per cell, h = " << info.h << ": "
                  << (violations == 0 ? std::string("ok") : std::to_string(violations) + " violation(s)") << "\n";
        if (violations > 0) std::cout << buffer.data() << "\n";
        total += violations;
    }
    if (!c.write_mesh.empty()) check(wgs_mesh_write(meshes.front().second.get(), c.write_mesh.c_str()), "writing mesh");
    return total == 0 ? 0 : 1;
}

// Options shared by the subcommands; each is recorded with its config key so
// that explicit flags override the config file.
struct Flags {
    std::vector<std::pair<CLI::Option*, std::string>> options;
    std::string levels;
    std::string config;

    void add(CLI::Option* opt, const std::string& key) { options.emplace_back(opt, key); }

    std::set<std::string> given() const
    {
        std::set<std::string> keys;
        for (const auto& [opt, key] : options)
            if (opt->count() > 0) keys.insert(key);
        return keys;
    }
};

void add_mesh_options(CLI::App* sub, StudyConfig& c, Flags& f)
{
    f.add(sub->add_option("--mesh", c.mesh, "mesh family: tri or nonconvex-l"), "mesh");
    f.add(sub->add_option("--levels", f.levels, "levels A..B; level i has 2^i subdivisions per side"), "levels");
    sub->add_option("--config", f.config, "JSON file with defaults; flags win");
}

} // namespace

int main(int argc, char** argv)
{
    StudyConfig c;
    Flags f;
    CLI::App app{"Stabilizer-free weak Galerkin solver for 2D Stokes flow on polygonal meshes"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(wgs_version()));

    auto* solve = app.add_subcommand("solve", "convergence study against a manufactured solution");
    add_mesh_options(solve, c, f);
    f.add(solve->add_option("--problem", c.problem, "s1, patch-k1 or patch-k2"), "problem");
    f.add(solve->add_option("--mesh-file", c.mesh_file, "solve on a mesh in text format instead"), "mesh_file");
    f.add(solve->add_option("--order", c.order, "velocity degree k (1..3)"), "order");
    f.add(solve->add_option("--solver", c.solver, "direct or minres"), "solver");
    f.add(solve->add_option("--out", c.out, "directory for rates.csv, rates.md and summary.json"), "out");
    f.add(solve->add_option("--export-vtk", c.export_vtk, "VTK file with u_0 and p_h on the finest level"),
          "export_vtk");
    f.add(solve->add_option("--quad-degree", c.quad_degree, "minimum quadrature degree (0: problem default)"),
          "quad_degree");
    f.add(solve->add_option("--r-shift", c.r_shift, "offset added to the weak operator degree (experiments only)"),
          "r_shift");

    auto* probe = app.add_subcommand("probe", "empirical stability constants");
    add_mesh_options(probe, c, f);
    f.add(probe->add_option("--order", c.order, "velocity degree k (1..3)"), "order");
    f.add(probe->add_flag("--norm-equivalence", c.norm_equivalence, "ratio of energy norm to discrete H1 norm"),
          "norm_equivalence");
    f.add(probe->add_flag("--infsup", c.infsup, "discrete inf-sup constant"), "infsup");
    f.add(probe->add_option("--seed", c.seed, "random seed"), "seed");
    f.add(probe->add_option("--samples", c.samples, "random fields per level"), "samples");
    f.add(probe->add_option("--out", c.out, "directory for probe.json"), "out");

    auto* mesh_check = app.add_subcommand("mesh-check", "validate generated meshes or a mesh file");
    add_mesh_options(mesh_check, c, f);
    f.add(mesh_check->add_option("--mesh-file", c.mesh_file, "mesh in text format"), "mesh_file");
    f.add(mesh_check->add_option("--write", c.write_mesh, "write the (single) mesh in text format"), "write_mesh");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        c.command = app.get_subcommands().front()->get_name();
        if (!f.config.empty()) {
            std::ifstream in(f.config);
            if (!in) throw UsageError("cannot open config file " + f.config);
            nlohmann::json file;
            try {
                in >> file;
            } catch (const nlohmann::json::exception& e) {
                throw UsageError("config file " + f.config + ": " + e.what());
            }
            wgs::cli::apply_config_file(c, file, f.given());
        }
        if (!f.levels.empty()) c.levels = wgs::cli::parse_levels(f.levels);
        wgs::cli::validate(c);
        prepare_out(c);
        if (c.command == "solve") return run_solve(c);
        if (c.command == "probe") return run_probe(c);
        return run_mesh_check(c);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\nRun with --help for more information.\n";
        return 2;
    } catch (const ModuleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
