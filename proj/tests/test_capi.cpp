#include <wgstokes/wgstokes.h>

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir()
{
    const fs::path dir = fs::temp_directory_path() / ("wgs_capi_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir;
}

// u = (x^2, -2xy), p = x - 1/2, f = -lap u + grad p = (-1, 0).
void k2_u(double x, double y, double out[2], void*)
{
    out[0] = x * x;
    out[1] = -2 * x * y;
}
void k2_grad(double x, double y, double out[4], void*)
{
    out[0] = 2 * x;
    out[1] = 0;
    out[2] = -2 * y;
    out[3] = -2 * x;
}
double k2_p(double x, double, void* user)
{
    ++*static_cast<int*>(user);
    return x - 0.5;
}
void k2_f(double, double, double out[2], void*)
{
    out[0] = -1;
    out[1] = 0;
}

} // namespace

TEST_CASE("status strings and version")
{
    CHECK(std::string(wgs_status_string(WGS_OK)) == "ok");
    CHECK(std::string(wgs_status_string(WGS_ERR_PROBE_TOO_LARGE)) == "probe-too-large");
    CHECK(std::string(wgs_version()).size() > 0);
}

TEST_CASE("mesh handles")
{
    wgs_mesh* mesh = nullptr;
    REQUIRE(wgs_mesh_build(WGS_MESH_NONCONVEX_L, 4, &mesh) == WGS_OK);
    wgs_mesh_info info{};
    REQUIRE(wgs_mesh_info_get(mesh, &info) == WGS_OK);
    CHECK(info.n_cells == 32);
    CHECK(info.n_nonconvex_cells == 16);
    CHECK(info.subdivisions == 4);
    CHECK(info.family == WGS_MESH_NONCONVEX_L);
    CHECK(info.n_vertices - info.n_edges + info.n_cells == 1);

    int violations = -1;
    char buffer[256];
    CHECK(wgs_mesh_validate(mesh, &violations, buffer, sizeof buffer) == WGS_OK);
    CHECK(violations == 0);

    const auto path = (scratch_dir() / "l4.mesh").string();
    REQUIRE(wgs_mesh_write(mesh, path.c_str()) == WGS_OK);
    wgs_mesh* back = nullptr;
    REQUIRE(wgs_mesh_read(path.c_str(), &back) == WGS_OK);
    wgs_mesh_info info2{};
    wgs_mesh_info_get(back, &info2);
    CHECK(info2.n_cells == info.n_cells);
    CHECK(info2.n_edges == info.n_edges);
    CHECK(info2.family == WGS_MESH_CUSTOM);
    wgs_mesh_free(back);
    wgs_mesh_free(mesh);
}

TEST_CASE("errors are reported through status codes")
{
    wgs_mesh* mesh = nullptr;
    CHECK(wgs_mesh_build(WGS_MESH_TRIANGLE, 0, &mesh) == WGS_ERR_INVALID_ARGUMENT);
    CHECK(mesh == nullptr);
    CHECK(std::string(wgs_last_error()).size() > 0);
    CHECK(wgs_mesh_build(WGS_MESH_TRIANGLE, 2, nullptr) == WGS_ERR_INVALID_ARGUMENT);
    CHECK(wgs_mesh_read("/nonexistent/mesh.txt", &mesh) == WGS_ERR_IO);
    CHECK(wgs_mesh_info_get(nullptr, nullptr) == WGS_ERR_INVALID_ARGUMENT);

    const double xy[] = {0, 0, 1, 0, 2, 0};
    const int sizes[] = {3};
    const int ids[] = {0, 1, 2};
    CHECK(wgs_mesh_from_polygons(xy, 3, sizes, 1, ids, &mesh) == WGS_ERR_DEGENERATE_CELL);

    REQUIRE(wgs_mesh_build(WGS_MESH_TRIANGLE, 2, &mesh) == WGS_OK);
    wgs_solution* sol = nullptr;
    CHECK(wgs_solve(mesh, WGS_PROBLEM_S1, 0, nullptr, &sol) == WGS_ERR_INVALID_ARGUMENT);
    CHECK(wgs_solve(mesh, WGS_PROBLEM_S1, 4, nullptr, &sol) == WGS_ERR_INVALID_ARGUMENT);
    CHECK(sol == nullptr);
    wgs_infsup_result inf{};
    wgs_mesh_free(mesh);
    REQUIRE(wgs_mesh_build(WGS_MESH_TRIANGLE, 64, &mesh) == WGS_OK);
    CHECK(wgs_probe_infsup(mesh, 1, &inf) == WGS_ERR_PROBE_TOO_LARGE);
    wgs_mesh_free(mesh);
    wgs_mesh_free(nullptr);
    wgs_solution_free(nullptr);
}

TEST_CASE("solve, errors, cell values and export")
{
    wgs_mesh* mesh = nullptr;
    REQUIRE(wgs_mesh_build(WGS_MESH_TRIANGLE, 4, &mesh) == WGS_OK);
    wgs_solve_options opts;
    wgs_solve_options_default(&opts);
    CHECK(opts.r_shift == 0);
    CHECK(opts.solver == WGS_SOLVER_DIRECT);

    wgs_solution* sol = nullptr;
    REQUIRE(wgs_solve(mesh, WGS_PROBLEM_PATCH_K1, 1, &opts, &sol) == WGS_OK);
    wgs_error_report err{};
    REQUIRE(wgs_solution_errors(sol, &err) == WGS_OK);
    CHECK(err.err_l2 <= 1e-8);
    CHECK(err.err_energy <= 1e-8);
    CHECK(err.err_pressure <= 1e-8);
    wgs_solve_info info{};
    REQUIRE(wgs_solution_info(sol, &info) == WGS_OK);
    CHECK(info.residual <= 1e-10);
    CHECK(std::abs(info.pressure_integral) <= 1e-10);
    CHECK(info.divergence_residual <= 1e-10);
    CHECK(info.n_total == info.n_u + info.n_p + 1);

    // u = (y, -x) at the centroids.
    std::vector<double> u0(2 * 32), p(32);
    REQUIRE(wgs_solution_cell_values(sol, u0.data(), p.data()) == WGS_OK);
    wgs_mesh_info mi{};
    wgs_mesh_info_get(mesh, &mi);
    REQUIRE(mi.n_cells == 32);
    for (double v : p) CHECK(std::abs(v) <= 1e-8);

    const auto path = (scratch_dir() / "patch.vtk").string();
    REQUIRE(wgs_solution_write_vtk(sol, path.c_str()) == WGS_OK);
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    CHECK(first.rfind("# vtk DataFile", 0) == 0);
    wgs_solution_free(sol);
    wgs_mesh_free(mesh);
}

TEST_CASE("custom problems through callbacks")
{
    wgs_mesh* mesh = nullptr;
    REQUIRE(wgs_mesh_build(WGS_MESH_NONCONVEX_L, 2, &mesh) == WGS_OK);
    int calls = 0;
    wgs_custom_problem prob{};
    prob.f = k2_f;
    prob.g = k2_u;
    prob.u = k2_u;
    prob.grad_u = k2_grad;
    prob.p = k2_p;
    prob.user = &calls;
    prob.data_degree = 2;
    wgs_solution* sol = nullptr;
    REQUIRE(wgs_solve_custom(mesh, &prob, 2, nullptr, &sol) == WGS_OK);
    CHECK(calls == 0);
    wgs_error_report err{};
    REQUIRE(wgs_solution_errors(sol, &err) == WGS_OK);
    CHECK(calls > 0);
    CHECK(err.err_l2 <= 1e-8);
    CHECK(err.err_energy <= 1e-8);
    CHECK(err.err_pressure <= 1e-8);
    wgs_solution_free(sol);

    // Without an exact solution there is nothing to measure against.
    prob.u = nullptr;
    REQUIRE(wgs_solve_custom(mesh, &prob, 2, nullptr, &sol) == WGS_OK);
    CHECK(wgs_solution_errors(sol, &err) == WGS_ERR_INVALID_ARGUMENT);
    wgs_solution_free(sol);

    prob.f = nullptr;
    CHECK(wgs_solve_custom(mesh, &prob, 2, nullptr, &sol) == WGS_ERR_INVALID_ARGUMENT);
    wgs_mesh_free(mesh);
}

TEST_CASE("convergence study and probes")
{
    const int levels[] = {2, 4, 8};
    std::vector<wgs_rate_row> rows(3);
    int progress = 0;
    REQUIRE(wgs_run_convergence(WGS_PROBLEM_S1, WGS_MESH_TRIANGLE, 1, levels, 3, nullptr, rows.data(),
                                [](const wgs_rate_row*, void* user) { ++*static_cast<int*>(user); },
                                &progress) == WGS_OK);
    CHECK(progress == 3);
    CHECK(rows[0].has_rates == 0);
    CHECK(rows[2].has_rates == 1);
    CHECK(rows[2].h < rows[1].h);
    CHECK(rows[2].err_l2 < rows[1].err_l2);
    CHECK(rows[2].rate_l2 ==
          doctest::Approx(std::log(rows[1].err_l2 / rows[2].err_l2) / std::log(rows[1].h / rows[2].h)));

    wgs_mesh* mesh = nullptr;
    REQUIRE(wgs_mesh_build(WGS_MESH_TRIANGLE, 4, &mesh) == WGS_OK);
    wgs_ratio_stats stats{};
    REQUIRE(wgs_probe_norm_equivalence(mesh, 1, 20, 99, &stats) == WGS_OK);
    CHECK(stats.samples == 20);
    CHECK(stats.min > 0.0);
    CHECK(wgs_probe_norm_equivalence(mesh, 1, 5, 99, &stats) == WGS_ERR_INVALID_ARGUMENT);
    wgs_infsup_result inf{};
    REQUIRE(wgs_probe_infsup(mesh, 1, &inf) == WGS_OK);
    CHECK(inf.beta > 0.0);
    wgs_mesh_free(mesh);
}
