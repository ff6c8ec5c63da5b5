#pragma once

#include "core/mesh.hpp"
#include "core/weakops.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace wgs::assembly {

using weak::ElementSet;
using weak::ScalarFn;
using weak::VectorFn;

/// Global numbering: interior velocity blocks per cell, then edge velocity
/// blocks per retained edge, then pressure per cell, then one multiplier for
/// the zero-mean pressure constraint. Boundary edges are eliminated unless
/// `include_boundary` is set (used for operators on V_h rather than V_h^0).
struct DofMap {
    int k = 1;
    bool include_boundary = false;
    int n_cells = 0;
    int per_cell_v0 = 0;
    int per_edge = 0;
    int per_cell_p = 0;
    std::vector<int> edge_offset; // -1 for eliminated boundary edges
    int n_u = 0;
    int n_p = 0;

    int cell_offset(int cell) const { return cell * per_cell_v0; }
    int pressure_offset(int cell) const { return n_u + cell * per_cell_p; }
    int multiplier() const { return n_u + n_p; }
    int n_total() const { return n_u + n_p + 1; }
};

DofMap build_dof_map(const mesh::PolyMesh& mesh, int k, bool include_boundary = false);

/// Maps local velocity unknowns of a cell to global ones. Edge coefficients
/// are stored in the edge's global orientation (lower vertex id first); a cell
/// traversing the edge the other way sees Legendre coefficient j with sign
/// (-1)^j.
struct LocalMap {
    std::vector<int> global;  // -1 where eliminated
    std::vector<double> sign; // +1 or -1
    std::vector<int> edge_entry; // index into WeakField::edges, -1 for v0 entries
};

LocalMap local_velocity_map(const mesh::PolyMesh& mesh, const DofMap& dofs, int cell);

/// Discrete velocity {u_0, u_b}: per-cell interior coefficients and per-edge
/// coefficients (global orientation) for every edge including the boundary.
struct WeakField {
    int k = 1;
    Eigen::VectorXd interior;
    Eigen::VectorXd edges;

    /// Local velocity vector of a cell in its own edge orientation.
    Eigen::VectorXd local(const mesh::PolyMesh& mesh, int cell) const;
};

/// Q_h u on every cell and edge (edges projected once, in global orientation).
WeakField interpolate(const mesh::PolyMesh& mesh, const ElementSet& elements, const VectorFn& u);

struct GlobalSystem {
    DofMap dofs;
    Eigen::SparseMatrix<double> matrix; // [[A, -B^T, 0], [-B, 0, c^T], [0, c, 0]]
    Eigen::VectorXd rhs;
    WeakField boundary; // Q_b g on boundary edges, zero elsewhere
};

/// Assembles the stabilizer-free scheme. `g` (Dirichlet data) may be empty,
/// meaning homogeneous boundary conditions.
GlobalSystem assemble(const mesh::PolyMesh& mesh, const ElementSet& elements, const VectorFn& f, const VectorFn& g = {});

enum class SolverKind { Direct, Minres };

SolverKind solver_from_string(const std::string& name);
const char* to_string(SolverKind kind);

struct SolveStats {
    int n_u = 0;
    int n_p = 0;
    int n_total = 0;
    long nnz = 0;
    double residual = 0.0;
    int iterations = 0;
    double seconds = 0.0;
};

struct SolveResult {
    WeakField u;
    Eigen::VectorXd pressure; // per-cell P_{k-1} coefficients
    double multiplier = 0.0;
    SolveStats stats;
};

/// Relative residual tolerance required of every solve.
inline constexpr double kResidualTolerance = 1e-10;

SolveResult solve(const mesh::PolyMesh& mesh, const GlobalSystem& system, SolverKind kind = SolverKind::Direct);

/// Velocity block A of the assembled system (on V_h^0).
Eigen::SparseMatrix<double> velocity_block(const GlobalSystem& system);

/// (grad_w u, grad_w v) over every velocity unknown of `dofs` (V_h when the
/// map includes boundary edges).
Eigen::SparseMatrix<double> assemble_velocity_operator(const mesh::PolyMesh& mesh, const ElementSet& elements,
                                                       const DofMap& dofs);

/// Discrete divergence operator (div_w v, q) with rows = pressure unknowns
/// (0-based within the pressure block) and columns = velocity unknowns.
Eigen::SparseMatrix<double> assemble_divergence_operator(const mesh::PolyMesh& mesh, const ElementSet& elements,
                                                         const DofMap& dofs);

/// Integral of the discrete pressure over the domain.
double pressure_integral(const ElementSet& elements, const Eigen::VectorXd& pressure);

/// max over pressure basis functions q of |(div_w u_h, q)|.
double divergence_residual(const mesh::PolyMesh& mesh, const ElementSet& elements, const WeakField& u);

} // namespace wgs::assembly
