#include "wgstokes/wgstokes.h"

#include "core/assembly.hpp"
#include "core/error.hpp"
#include "core/export.hpp"
#include "core/mesh.hpp"
#include "core/verification.hpp"
#include "core/weakops.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <exception>
#include <memory>
#include <optional>
#include <string>

struct wgs_mesh {
    wgs::mesh::PolyMesh mesh;
};

struct wgs_solution {
    wgs::mesh::PolyMesh mesh;
    wgs::weak::ElementSet elements;
    wgs::assembly::SolveResult result;
    std::optional<wgs::verify::ManufacturedSolution> exact;
};

namespace {

thread_local std::string last_error;

wgs_status status_of(wgs::ErrorCode code)
{
    return static_cast<wgs_status>(static_cast<int>(code));
}

template <typename F>
wgs_status guarded(F&& body)
{
    try {
        last_error.clear();
        body();
        return WGS_OK;
    } catch (const wgs::Error& e) {
        last_error = e.what();
        return status_of(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "internal-error: out of memory";
        return WGS_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = std::string("internal-error: ") + e.what();
        return WGS_ERR_INTERNAL;
    }
}

void require(bool ok, const char* what)
{
    if (!ok) throw wgs::Error(wgs::ErrorCode::InvalidArgument, what);
}

wgs::mesh::Family family_of(wgs_family f)
{
    switch (f) {
    case WGS_MESH_TRIANGLE: return wgs::mesh::Family::Triangle;
    case WGS_MESH_NONCONVEX_L: return wgs::mesh::Family::NonconvexL;
    case WGS_MESH_CUSTOM: return wgs::mesh::Family::Custom;
    }
    throw wgs::Error(wgs::ErrorCode::InvalidArgument, "unknown mesh family");
}

wgs_family family_of(wgs::mesh::Family f)
{
    switch (f) {
    case wgs::mesh::Family::Triangle: return WGS_MESH_TRIANGLE;
    case wgs::mesh::Family::NonconvexL: return WGS_MESH_NONCONVEX_L;
    case wgs::mesh::Family::Custom: break;
    }
    return WGS_MESH_CUSTOM;
}

wgs::verify::ManufacturedSolution problem_of(wgs_problem p)
{
    switch (p) {
    case WGS_PROBLEM_S1: return wgs::verify::solution_s1();
    case WGS_PROBLEM_PATCH_K1: return wgs::verify::solution_patch_k1();
    case WGS_PROBLEM_PATCH_K2: return wgs::verify::solution_patch_k2();
    }
    throw wgs::Error(wgs::ErrorCode::InvalidArgument, "unknown problem");
}

wgs::assembly::SolverKind solver_of(const wgs_solve_options* o)
{
    if (!o) return wgs::assembly::SolverKind::Direct;
    switch (o->solver) {
    case WGS_SOLVER_DIRECT: return wgs::assembly::SolverKind::Direct;
    case WGS_SOLVER_MINRES: return wgs::assembly::SolverKind::Minres;
    }
    throw wgs::Error(wgs::ErrorCode::InvalidArgument, "unknown solver");
}

void check_order(int k) { require(k >= 1 && k <= 3, "velocity degree k must be 1, 2 or 3"); }

int r_shift_of(const wgs_solve_options* o) { return o ? o->r_shift : 0; }

wgs_solution* run_solve(const wgs::mesh::PolyMesh& mesh, int k, int quad_degree, const wgs_solve_options* options,
                        const wgs::weak::VectorFn& f, const wgs::weak::VectorFn& g)
{
    auto sol = std::make_unique<wgs_solution>();
    sol->mesh = mesh;
    sol->elements = wgs::weak::build_element_set(sol->mesh, k, quad_degree, r_shift_of(options));
    const auto system = wgs::assembly::assemble(sol->mesh, sol->elements, f, g);
    sol->result = wgs::assembly::solve(sol->mesh, system, solver_of(options));
    return sol.release();
}

} // namespace

extern "C" {

const char* wgs_version(void) { return "1.0.0"; }

const char* wgs_last_error(void) { return last_error.c_str(); }

const char* wgs_status_string(wgs_status status)
{
    if (status == WGS_OK) return "ok";
    if (status < WGS_ERR_INVALID_ARGUMENT || status > WGS_ERR_IO) return "unknown-error";
    return wgs::to_string(static_cast<wgs::ErrorCode>(static_cast<int>(status)));
}

wgs_status wgs_mesh_build(wgs_family family, int n, wgs_mesh** out)
{
    return guarded([&] {
        require(out != nullptr, "null output pointer");
        require(family != WGS_MESH_CUSTOM, "custom meshes are read from files or polygons");
        auto m = std::make_unique<wgs_mesh>();
        m->mesh = wgs::mesh::build_mesh(family_of(family), n);
        *out = m.release();
    });
}

wgs_status wgs_mesh_from_polygons(const double* xy, size_t n_vertices, const int* cell_sizes, size_t n_cells,
                                  const int* cell_vertices, wgs_mesh** out)
{
    return guarded([&] {
        require(out != nullptr, "null output pointer");
        require(xy && cell_sizes && cell_vertices, "null input array");
        std::vector<wgs::mesh::Vertex2> vertices(n_vertices);
        for (size_t i = 0; i < n_vertices; ++i) vertices[i] = {xy[2 * i], xy[2 * i + 1]};
        std::vector<std::vector<int>> cells(n_cells);
        size_t pos = 0;
        for (size_t c = 0; c < n_cells; ++c) {
            require(cell_sizes[c] >= 3, "a cell needs at least 3 vertices");
            for (int j = 0; j < cell_sizes[c]; ++j) {
                const int v = cell_vertices[pos++];
                require(v >= 0 && static_cast<size_t>(v) < n_vertices, "cell vertex index out of range");
                cells[c].push_back(v);
            }
        }
        auto m = std::make_unique<wgs_mesh>();
        m->mesh = wgs::mesh::from_polygons(std::move(vertices), cells);
        *out = m.release();
    });
}

wgs_status wgs_mesh_read(const char* path, wgs_mesh** out)
{
    return guarded([&] {
        require(path && out, "null argument");
        auto m = std::make_unique<wgs_mesh>();
        m->mesh = wgs::mesh::load(path);
        *out = m.release();
    });
}

wgs_status wgs_mesh_write(const wgs_mesh* mesh, const char* path)
{
    return guarded([&] {
        require(mesh && path, "null argument");
        wgs::mesh::save(path, mesh->mesh);
    });
}

wgs_status wgs_mesh_info_get(const wgs_mesh* mesh, wgs_mesh_info* out)
{
    return guarded([&] {
        require(mesh && out, "null argument");
        const auto& m = mesh->mesh;
        wgs_mesh_info info{};
        info.n_vertices = m.n_vertices();
        info.n_cells = m.n_cells();
        info.n_edges = m.n_edges();
        info.n_boundary_edges = m.n_boundary_edges();
        for (const auto& c : m.cells) {
            if (!c.convex) ++info.n_nonconvex_cells;
            info.max_edges_per_cell = std::max(info.max_edges_per_cell, c.n_edges());
        }
        info.subdivisions = m.subdivisions;
        info.h = m.h;
        info.family = family_of(m.family);
        *out = info;
    });
}

wgs_status wgs_mesh_validate(const wgs_mesh* mesh, int* n_violations, char* buffer, size_t buffer_size)
{
    return guarded([&] {
        require(mesh && n_violations, "null argument");
        const auto report = wgs::mesh::validate(mesh->mesh);
        *n_violations = static_cast<int>(report.violations.size());
        if (buffer && buffer_size > 0) {
            std::string text;
            for (const auto& v : report.violations) text += v + "\n";
            const size_t n = std::min(text.size(), buffer_size - 1);
            std::memcpy(buffer, text.data(), n);
            buffer[n] = '\0';
        }
    });
}

void wgs_mesh_free(wgs_mesh* mesh) { delete mesh; }

void wgs_solve_options_default(wgs_solve_options* options)
{
    if (!options) return;
    options->quad_degree = 0;
    options->solver = WGS_SOLVER_DIRECT;
    options->r_shift = 0;
}

wgs_status wgs_solve(const wgs_mesh* mesh, wgs_problem problem, int k, const wgs_solve_options* options,
                     wgs_solution** out)
{
    return guarded([&] {
        require(mesh && out, "null argument");
        check_order(k);
        auto exact = problem_of(problem);
        const int quad = options && options->quad_degree > 0 ? options->quad_degree
                                                             : wgs::verify::default_quad_degree(exact);
        auto* sol = run_solve(mesh->mesh, k, quad, options, exact.f,
                              exact.homogeneous ? wgs::weak::VectorFn{} : exact.u);
        sol->exact = std::move(exact);
        *out = sol;
    });
}

wgs_status wgs_solve_custom(const wgs_mesh* mesh, const wgs_custom_problem* problem, int k,
                            const wgs_solve_options* options, wgs_solution** out)
{
    return guarded([&] {
        require(mesh && problem && out, "null argument");
        require(problem->f != nullptr, "custom problem needs a right-hand side f");
        check_order(k);
        const auto p = *problem;
        const auto vec = [user = p.user](wgs_vector_fn fn) -> wgs::weak::VectorFn {
            if (!fn) return {};
            return [fn, user](double x, double y) {
                double v[2] = {0.0, 0.0};
                fn(x, y, v, user);
                return std::array<double, 2>{v[0], v[1]};
            };
        };
        const int quad = options && options->quad_degree > 0 ? options->quad_degree : 2 * std::max(p.data_degree, 1) + 2;
        auto* sol = run_solve(mesh->mesh, k, quad, options, vec(p.f), vec(p.g));
        if (p.u && p.grad_u && p.p) {
            wgs::verify::ManufacturedSolution exact;
            exact.name = "custom";
            exact.degree = p.data_degree;
            exact.u = vec(p.u);
            exact.f = vec(p.f);
            exact.grad_u = [fn = p.grad_u, user = p.user](double x, double y) {
                double t[4] = {0.0, 0.0, 0.0, 0.0};
                fn(x, y, t, user);
                return std::array<double, 4>{t[0], t[1], t[2], t[3]};
            };
            exact.p = [fn = p.p, user = p.user](double x, double y) { return fn(x, y, user); };
            sol->exact = std::move(exact);
        }
        *out = sol;
    });
}

wgs_status wgs_solution_errors(const wgs_solution* solution, wgs_error_report* out)
{
    return guarded([&] {
        require(solution && out, "null argument");
        require(solution->exact.has_value(), "solution has no exact reference");
        const auto e = wgs::verify::compute_errors(solution->mesh, solution->elements, solution->result, *solution->exact);
        *out = {e.e_l2, e.e_energy, e.e_pressure, e.h, e.n_dofs};
    });
}

wgs_status wgs_solution_info(const wgs_solution* solution, wgs_solve_info* out)
{
    return guarded([&] {
        require(solution && out, "null argument");
        const auto& s = solution->result.stats;
        wgs_solve_info info{};
        info.n_u = s.n_u;
        info.n_p = s.n_p;
        info.n_total = s.n_total;
        info.nnz = s.nnz;
        info.iterations = s.iterations;
        info.residual = s.residual;
        info.seconds = s.seconds;
        info.pressure_integral = wgs::assembly::pressure_integral(solution->elements, solution->result.pressure);
        info.divergence_residual =
            wgs::assembly::divergence_residual(solution->mesh, solution->elements, solution->result.u);
        *out = info;
    });
}

wgs_status wgs_solution_cell_values(const wgs_solution* solution, double* u0, double* p)
{
    return guarded([&] {
        require(solution != nullptr, "null argument");
        const auto v = wgs::io::centroid_values(solution->mesh, solution->elements, solution->result);
        for (Eigen::Index c = 0; c < v.rows(); ++c) {
            if (u0) {
                u0[2 * c] = v(c, 0);
                u0[2 * c + 1] = v(c, 1);
            }
            if (p) p[c] = v(c, 2);
        }
    });
}

wgs_status wgs_solution_write_vtk(const wgs_solution* solution, const char* path)
{
    return guarded([&] {
        require(solution && path, "null argument");
        wgs::io::write_vtk(std::string(path), solution->mesh, solution->elements, solution->result);
    });
}

void wgs_solution_free(wgs_solution* solution) { delete solution; }

wgs_status wgs_run_convergence(wgs_problem problem, wgs_family family, int k, const int* subdivisions, int n_levels,
                               const wgs_solve_options* options, wgs_rate_row* rows, wgs_progress_fn progress,
                               void* user)
{
    return guarded([&] {
        require(subdivisions && rows, "null argument");
        require(n_levels >= 1, "at least one level is required");
        require(family != WGS_MESH_CUSTOM, "convergence studies need a generated mesh family");
        check_order(k);
        const auto exact = problem_of(problem);
        wgs::verify::RunOptions opts;
        opts.quad_degree = options ? options->quad_degree : 0;
        opts.solver = solver_of(options);
        opts.r_shift = r_shift_of(options);
        int index = 0;
        const auto to_row = [](const wgs::verify::RateRow& r) {
            wgs_rate_row row{};
            row.level = r.level;
            row.n = r.n;
            row.h = r.errors.h;
            row.n_dofs = r.errors.n_dofs;
            row.err_l2 = r.errors.e_l2;
            row.err_energy = r.errors.e_energy;
            row.err_pressure = r.errors.e_pressure;
            row.has_rates = r.has_rates ? 1 : 0;
            row.rate_l2 = r.rates[0];
            row.rate_energy = r.rates[1];
            row.rate_pressure = r.rates[2];
            row.residual = r.stats.residual;
            row.seconds = r.seconds;
            return row;
        };
        opts.on_level = [&](const wgs::verify::RateRow& r) {
            rows[index] = to_row(r);
            if (progress) progress(&rows[index], user);
            ++index;
        };
        const std::vector<int> ns(subdivisions, subdivisions + n_levels);
        wgs::verify::run_convergence(exact, family_of(family), k, ns, opts);
    });
}

wgs_status wgs_probe_norm_equivalence(const wgs_mesh* mesh, int k, int n_samples, uint64_t seed,
                                      wgs_ratio_stats* out)
{
    return guarded([&] {
        require(mesh && out, "null argument");
        check_order(k);
        const auto st = wgs::verify::probe_norm_equivalence(mesh->mesh, k, n_samples, seed);
        *out = {st.min, st.max, st.mean, st.samples, st.rejected};
    });
}

wgs_status wgs_probe_infsup(const wgs_mesh* mesh, int k, wgs_infsup_result* out)
{
    return guarded([&] {
        require(mesh && out, "null argument");
        check_order(k);
        const auto r = wgs::verify::probe_infsup(mesh->mesh, k);
        *out = {r.beta, r.min_eig_with_constants, r.n_u, r.n_p};
    });
}

} // extern "C"
