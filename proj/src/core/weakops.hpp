#pragma once

#include "core/mesh.hpp"
#include "core/polybasis.hpp"
#include "core/quadrature.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace wgs::weak {

using mesh::Vertex2;

using ScalarFn = std::function<double(double, double)>;
using VectorFn = std::function<std::array<double, 2>(double, double)>;
/// Row-major 2x2 tensor: {T_xx, T_xy, T_yx, T_yy}; for a gradient, T_ab = d u_a / d x_b.
using TensorFn = std::function<std::array<double, 4>(double, double)>;

/// Degree of the weak gradient/divergence space: N + k - 1 on convex cells,
/// 2N + k - 1 on non-convex cells.
int select_r(int n_edges, bool convex, int k);
int select_r(const mesh::Cell& cell, int k);

/// Local velocity unknowns of V(k, T): the interior block (x then y
/// component, dim P_k each) followed by one block per edge in cell order
/// (x then y component, k + 1 Legendre coefficients each).
struct LocalDofLayout {
    int k = 1;
    int n_edges = 0;

    int dim_k() const { return poly::dim_Pm(k); }
    int n_v0() const { return 2 * dim_k(); }
    int n_vb_per_edge() const { return 2 * (k + 1); }
    int n_velocity() const { return n_v0() + n_edges * n_vb_per_edge(); }
    int n_pressure() const { return poly::dim_Pm(k - 1); }
    int v0_index(int comp, int j) const { return comp * dim_k() + j; }
    int edge_offset(int edge) const { return n_v0() + edge * n_vb_per_edge(); }
    int vb_index(int edge, int comp, int j) const { return edge_offset(edge) + comp * (k + 1) + j; }
};

/// Coefficients of the weak gradient in [P_r]^{2x2}, stacked as four scalar
/// blocks (xx, xy, yx, yy) in the element's orthonormal P_r basis.
struct WeakGradientOperator {
    int r = 0;
    Eigen::MatrixXd matrix; // 4 dim P_r x n_velocity
};

struct WeakDivergenceOperator {
    int r = 0;
    Eigen::MatrixXd matrix; // dim P_r x n_velocity
};

struct LocalBlocks {
    Eigen::MatrixXd A; // (grad_w u, grad_w v)_T
    Eigen::MatrixXd B; // (div_w v, q)_T, rows = pressure basis
};

/// Everything about one cell shape that does not depend on data: bases,
/// quadrature, weak operators and local matrices. Geometry is stored relative
/// to the centroid, so translated copies share it.
struct ShapeData;

/// A cell of the mesh with its local weak Galerkin operators. Copies are cheap
/// and share the underlying shape data.
class LocalElement {
public:
    /// `min_quad_degree` raises the cell/edge quadrature degree above the
    /// default 2r + 2 (e.g. for high-degree data). `r_shift` is added to
    /// select_r; anything but 0 leaves the regime where the scheme is known to
    /// be stable and exists for experiments only.
    static LocalElement build(std::span<const Vertex2> polygon, int k, int min_quad_degree = 0, int r_shift = 0);
    static LocalElement build(const mesh::PolyMesh& mesh, int cell, int k, int min_quad_degree = 0,
                              int r_shift = 0);

    /// Same shape placed with its centroid at `centroid`.
    LocalElement translated(Vertex2 centroid) const;

    int k() const;
    int r() const;
    int n_edges() const;
    bool convex() const;
    double area() const;
    double diameter() const;
    int quad_degree() const;
    Vertex2 centroid() const { return origin_; }
    const LocalDofLayout& layout() const;
    const poly::OrthonormalCellBasis& basis() const;

    const WeakGradientOperator& gradient() const;
    const WeakDivergenceOperator& divergence() const;
    const LocalBlocks& blocks() const;
    /// Scalar mass matrix of the P_r basis (identity up to roundoff).
    const Eigen::MatrixXd& mass_r() const;
    /// Gram matrix of the local discrete H1 seminorm
    /// ||grad v0||^2 + h_T^{-1} ||v0 - vb||^2_{dT}.
    const Eigen::MatrixXd& h1_matrix() const;
    /// Polygon vertices in world coordinates.
    std::vector<Vertex2> polygon() const;
    /// Outward unit normal and length of local edge i.
    Vertex2 normal(int edge) const;
    double edge_length(int edge) const;

    /// Quadrature in world coordinates.
    poly::QuadratureRule quadrature() const;

    /// (f, v0)_T as a local velocity vector (edge entries are zero).
    Eigen::VectorXd load(const VectorFn& f) const;
    /// L2 projection onto [P_k(T)]^2.
    Eigen::VectorXd project_Q0(const VectorFn& u) const;
    /// L2 projection onto [P_k(e)]^2 of local edge i (cell orientation).
    Eigen::VectorXd project_Qb(int edge, const VectorFn& u) const;
    /// Q_h u = {Q_0 u, Q_b u} as a local velocity vector.
    Eigen::VectorXd project_Qh(const VectorFn& u) const;
    /// L2 projection onto the pressure space P_{k-1}(T).
    Eigen::VectorXd project_pressure(const ScalarFn& p) const;
    /// L2 projections onto P_r(T) and [P_r(T)]^{2x2}.
    Eigen::VectorXd project_Qh_scalar(const ScalarFn& f) const;
    Eigen::VectorXd project_Qh_tensor(const TensorFn& t) const;
    /// Weak gradient/divergence of {u|_T, u|_dT} computed directly from u.
    Eigen::VectorXd weak_gradient_of(const VectorFn& u) const;
    Eigen::VectorXd weak_divergence_of(const VectorFn& u) const;

    /// Values of the P_r basis at world points (rows = points).
    Eigen::MatrixXd eval_basis(std::span<const Vertex2> points) const;
    /// Values of v0 (two columns) at world points, from local velocity dofs.
    Eigen::MatrixX2d eval_velocity(const Eigen::VectorXd& local_dofs, std::span<const Vertex2> points) const;

    /// Basis values / weights at the element's own quadrature points.
    const Eigen::MatrixXd& basis_at_quadrature() const;
    std::span<const double> quadrature_weights() const;

private:
    LocalElement(std::shared_ptr<const ShapeData> shape, Vertex2 origin)
        : shape_(std::move(shape)), origin_(origin) {}

    Eigen::VectorXd solve_mass(const Eigen::VectorXd& rhs) const;
    Eigen::VectorXd solve_mass_prefix(int n, const Eigen::VectorXd& rhs) const;

    std::shared_ptr<const ShapeData> shape_;
    Vertex2 origin_;
};

/// Local elements for every cell of a mesh. Cells that are translates of each
/// other (same vertex offsets from the centroid within 1e-12) share one
/// shape, so structured meshes build only a handful of operators.
struct ElementSet {
    int k = 1;
    int quad_degree = 0;
    int r_shift = 0;
    std::vector<LocalElement> elements;
    int n_unique_shapes = 0;
};

ElementSet build_element_set(const mesh::PolyMesh& mesh, int k, int min_quad_degree = 0, int r_shift = 0);

} // namespace wgs::weak
