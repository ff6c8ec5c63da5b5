#pragma once

#include "core/assembly.hpp"
#include "core/mesh.hpp"
#include "core/weakops.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace wgs::verify {

using weak::ScalarFn;
using weak::TensorFn;
using weak::VectorFn;

struct ManufacturedSolution {
    std::string name;
    std::string regularity;
    VectorFn u;
    TensorFn grad_u;
    ScalarFn p;
    VectorFn f; // -lap u + grad p
    int degree = 0; // polynomial degree of u (quadrature selection)
    bool homogeneous = false; // u = 0 on the boundary
};

/// u = (-g_y, g_x), g = 16 (x - x^2)^2 (y - y^2)^2, p = (y - 1/2)^3.
ManufacturedSolution solution_s1();
/// u = (y, -x), p = 0.
ManufacturedSolution solution_patch_k1();
/// u = (x^2, -2xy), p = x - 1/2.
ManufacturedSolution solution_patch_k2();
/// "s1", "patch-k1" or "patch-k2".
ManufacturedSolution solution_by_name(const std::string& name);

/// Default minimum quadrature degree for a problem: exact for |u|^2.
int default_quad_degree(const ManufacturedSolution& sol);

struct ErrorReport {
    double e_l2 = 0.0;
    double e_energy = 0.0;
    double e_pressure = 0.0;
    double h = 0.0;
    long n_dofs = 0;
};

/// ||u - u_0||, ||Q_h(grad u) - grad_w u_h|| and ||Q_0 p - p_h|| (the
/// projection of p shifted to zero mean).
ErrorReport compute_errors(const mesh::PolyMesh& mesh, const weak::ElementSet& elements,
                           const assembly::SolveResult& result, const ManufacturedSolution& exact);

/// log(e1 / e2) / log(h1 / h2).
double observed_order(double e1, double e2, double h1, double h2);

struct RateRow {
    int level = 0;
    int n = 0;
    ErrorReport errors;
    bool has_rates = false;
    std::array<double, 3> rates{}; // l2, energy, pressure
    assembly::SolveStats stats;
    double seconds = 0.0;
};

struct RateTable {
    std::string problem;
    mesh::Family family = mesh::Family::Triangle;
    int k = 1;
    std::vector<RateRow> rows;
};

/// Fills `rates` for every row after the first.
void compute_rates(RateTable& table);

struct RunOptions {
    int quad_degree = 0; // 0: default_quad_degree(problem)
    int r_shift = 0;     // see LocalElement::build
    assembly::SolverKind solver = assembly::SolverKind::Direct;
    std::function<void(const RateRow&)> on_level;
};

/// Solves on meshes with n = subdivisions[i] and tabulates errors and orders.
RateTable run_convergence(const ManufacturedSolution& problem, mesh::Family family, int k,
                          const std::vector<int>& subdivisions, const RunOptions& options = {});

/// Global stiffness-like matrices on V_h (boundary unknowns included).
struct FullSpaceOperators {
    assembly::DofMap dofs;
    Eigen::SparseMatrix<double> A;  // (grad_w u, grad_w v)
    Eigen::SparseMatrix<double> H1; // discrete H1 seminorm Gram matrix
    Eigen::MatrixXd kernel;         // orthonormal basis of the constant fields (2 columns)
};

FullSpaceOperators full_space_operators(const mesh::PolyMesh& mesh, const weak::ElementSet& elements);

struct RatioStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    int samples = 0;
    int rejected = 0; // kernel-like draws
};

/// |||v||| / ||v||_{1,h} over random v in V_h with the constant kernel removed.
RatioStats probe_norm_equivalence(const mesh::PolyMesh& mesh, int k, int n_samples, std::uint64_t seed);

struct InfSupResult {
    double beta = 0.0;
    double min_eig_with_constants = 0.0;
    int n_u = 0;
    int n_p = 0;
};

inline constexpr int kMaxProbeVelocityDofs = 6000;

/// sqrt of the smallest eigenvalue of B A^{-1} B^T against the pressure mass
/// matrix on zero-mean pressures.
InfSupResult probe_infsup(const mesh::PolyMesh& mesh, int k, int max_velocity_dofs = kMaxProbeVelocityDofs);

struct SpdReport {
    bool cholesky_ok = false;
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
};

/// Cholesky attempt plus extreme eigenvalues of the reduced velocity block.
SpdReport check_velocity_spd(const assembly::GlobalSystem& system, int max_dofs = kMaxProbeVelocityDofs);

} // namespace wgs::verify
