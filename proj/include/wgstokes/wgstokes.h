#ifndef WGSTOKES_WGSTOKES_H
#define WGSTOKES_WGSTOKES_H

/*
 * Stabilizer-free weak Galerkin solver for the 2D Stokes equations on
 * polygonal meshes. All functions return a wgs_status; on failure the message
 * of the most recent error on the calling thread is available from
 * wgs_last_error().
 */

#include <stddef.h>
#include <stdint.h>

#if defined(WGS_BUILDING_LIBRARY)
#define WGS_API __attribute__((visibility("default")))
#else
#define WGS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct wgs_mesh wgs_mesh;
typedef struct wgs_solution wgs_solution;

typedef enum wgs_status {
    WGS_OK = 0,
    WGS_ERR_INVALID_ARGUMENT = 1,
    WGS_ERR_DEGENERATE_CELL = 2,
    WGS_ERR_CONDITIONING = 3,
    WGS_ERR_SINGULAR_SYSTEM = 4,
    WGS_ERR_PROBE_TOO_LARGE = 5,
    WGS_ERR_INTERNAL = 6,
    WGS_ERR_IO = 7
} wgs_status;

typedef enum wgs_family {
    WGS_MESH_TRIANGLE = 0,
    WGS_MESH_NONCONVEX_L = 1,
    WGS_MESH_CUSTOM = 2
} wgs_family;

typedef enum wgs_problem {
    WGS_PROBLEM_S1 = 0,
    WGS_PROBLEM_PATCH_K1 = 1,
    WGS_PROBLEM_PATCH_K2 = 2
} wgs_problem;

typedef enum wgs_solver {
    WGS_SOLVER_DIRECT = 0,
    WGS_SOLVER_MINRES = 1
} wgs_solver;

WGS_API const char* wgs_version(void);
WGS_API const char* wgs_last_error(void);
WGS_API const char* wgs_status_string(wgs_status status);

/* Meshes of the unit square. */

typedef struct wgs_mesh_info {
    int n_vertices;
    int n_cells;
    int n_edges;
    int n_boundary_edges;
    int n_nonconvex_cells;
    int max_edges_per_cell;
    int subdivisions; /* 0 for meshes not produced by a generator */
    double h;
    wgs_family family;
} wgs_mesh_info;

/* n subdivisions per side (n >= 1). */
WGS_API wgs_status wgs_mesh_build(wgs_family family, int n, wgs_mesh** out);
/* xy: 2 * n_vertices coordinates; cell i uses cell_sizes[i] consecutive
 * entries of cell_vertices. */
WGS_API wgs_status wgs_mesh_from_polygons(const double* xy, size_t n_vertices, const int* cell_sizes,
                                          size_t n_cells, const int* cell_vertices, wgs_mesh** out);
WGS_API wgs_status wgs_mesh_read(const char* path, wgs_mesh** out);
WGS_API wgs_status wgs_mesh_write(const wgs_mesh* mesh, const char* path);
WGS_API wgs_status wgs_mesh_info_get(const wgs_mesh* mesh, wgs_mesh_info* out);
/* Stores the number of violations in *n_violations and writes them,
 * newline separated and truncated to buffer_size, into buffer (may be NULL). */
WGS_API wgs_status wgs_mesh_validate(const wgs_mesh* mesh, int* n_violations, char* buffer, size_t buffer_size);
WGS_API void wgs_mesh_free(wgs_mesh* mesh);

/* Solving. */

typedef struct wgs_solve_options {
    int quad_degree; /* minimum quadrature degree; 0 selects the problem default */
    wgs_solver solver;
    /* Added to the weak operator degree r of every cell. 0 (the default) is
     * the stable choice; other values are for experiments. */
    int r_shift;
} wgs_solve_options;

WGS_API void wgs_solve_options_default(wgs_solve_options* options);

typedef void (*wgs_vector_fn)(double x, double y, double out[2], void* user);
typedef void (*wgs_tensor_fn)(double x, double y, double out[4], void* user);
typedef double (*wgs_scalar_fn)(double x, double y, void* user);

/* f is required. g (Dirichlet data) may be NULL for u = 0 on the boundary.
 * u, grad_u (row-major, d u_a / d x_b) and p are optional; when all three are
 * given, wgs_solution_errors measures against them. */
typedef struct wgs_custom_problem {
    wgs_vector_fn f;
    wgs_vector_fn g;
    wgs_vector_fn u;
    wgs_tensor_fn grad_u;
    wgs_scalar_fn p;
    void* user;
    int data_degree;
} wgs_custom_problem;

WGS_API wgs_status wgs_solve(const wgs_mesh* mesh, wgs_problem problem, int k, const wgs_solve_options* options,
                             wgs_solution** out);
WGS_API wgs_status wgs_solve_custom(const wgs_mesh* mesh, const wgs_custom_problem* problem, int k,
                                    const wgs_solve_options* options, wgs_solution** out);

typedef struct wgs_error_report {
    double err_l2;
    double err_energy;
    double err_pressure;
    double h;
    long n_dofs;
} wgs_error_report;

typedef struct wgs_solve_info {
    int n_u;
    int n_p;
    int n_total;
    long nnz;
    int iterations;
    double residual;
    double seconds;
    double pressure_integral;
    double divergence_residual;
} wgs_solve_info;

WGS_API wgs_status wgs_solution_errors(const wgs_solution* solution, wgs_error_report* out);
WGS_API wgs_status wgs_solution_info(const wgs_solution* solution, wgs_solve_info* out);
/* u0 (2 per cell) and p_h (1 per cell) evaluated at the cell centroids;
 * either pointer may be NULL. */
WGS_API wgs_status wgs_solution_cell_values(const wgs_solution* solution, double* u0, double* p);
/* Legacy VTK polydata with u0 and p_h as cell data. */
WGS_API wgs_status wgs_solution_write_vtk(const wgs_solution* solution, const char* path);
WGS_API void wgs_solution_free(wgs_solution* solution);

/* Convergence studies on generated meshes. */

typedef struct wgs_rate_row {
    int level;
    int n;
    double h;
    long n_dofs;
    double err_l2;
    double err_energy;
    double err_pressure;
    int has_rates;
    double rate_l2;
    double rate_energy;
    double rate_pressure;
    double residual;
    double seconds;
} wgs_rate_row;

typedef void (*wgs_progress_fn)(const wgs_rate_row* row, void* user);

/* rows must hold n_levels entries; progress may be NULL. */
WGS_API wgs_status wgs_run_convergence(wgs_problem problem, wgs_family family, int k, const int* subdivisions,
                                       int n_levels, const wgs_solve_options* options, wgs_rate_row* rows,
                                       wgs_progress_fn progress, void* user);

/* Probes of the discrete stability constants. */

typedef struct wgs_ratio_stats {
    double min;
    double max;
    double mean;
    int samples;
    int rejected;
} wgs_ratio_stats;

typedef struct wgs_infsup_result {
    double beta;
    double min_eig_with_constants;
    int n_u;
    int n_p;
} wgs_infsup_result;

WGS_API wgs_status wgs_probe_norm_equivalence(const wgs_mesh* mesh, int k, int n_samples, uint64_t seed,
                                              wgs_ratio_stats* out);
WGS_API wgs_status wgs_probe_infsup(const wgs_mesh* mesh, int k, wgs_infsup_result* out);

#ifdef __cplusplus
}
#endif

#endif
