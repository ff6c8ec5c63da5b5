#pragma once

#include "core/quadrature.hpp"

#include <Eigen/Dense>

#include <array>
#include <span>
#include <vector>

namespace wgs::poly {

/// Dimension of P_m in d = 2 variables.
constexpr int dim_Pm(int m) { return m < 0 ? 0 : (m + 1) * (m + 2) / 2; }

/// Exponents (a, b) of x^a y^b, graded by total degree and then by decreasing a.
std::vector<std::array<int, 2>> monomial_exponents(int m);

/// Values and gradients of a basis at a set of points (rows = points).
struct BasisGradients {
    Eigen::MatrixXd dx;
    Eigen::MatrixXd dy;
};

/// phi_alpha(x) = ((x - x_T) / h_T)^alpha for |alpha| <= m.
class ScaledMonomialBasis {
public:
    ScaledMonomialBasis(Vertex2 center, double scale, int degree);

    int degree() const { return degree_; }
    int dim() const { return dim_Pm(degree_); }
    Vertex2 center() const { return center_; }
    double scale() const { return scale_; }

    Eigen::MatrixXd eval(std::span<const Vertex2> points) const;
    BasisGradients eval_grad(std::span<const Vertex2> points) const;

private:
    Vertex2 center_;
    double scale_;
    int degree_;
    std::vector<std::array<int, 2>> exponents_;
};

/// L2(T)-orthonormal basis of P_m(T), built by Gram-Schmidt (two passes) over
/// the scaled monomials, where each new function is x or y times an earlier
/// orthonormal function. The recurrence coefficients are stored so the basis
/// can be evaluated at arbitrary points. The first dim_Pm(j) functions span
/// P_j for every j <= m.
///
/// Construction and evaluation run in extended precision: replaying the
/// recurrence amplifies rounding errors with the degree, and the weak
/// operators need values and derivatives that agree to near double accuracy.
class OrthonormalCellBasis {
public:
    /// `rule` must integrate P_{2m} exactly over the cell.
    OrthonormalCellBasis(Vertex2 center, double scale, int degree, const QuadratureRule& rule);

    int degree() const { return degree_; }
    int dim() const { return dim_Pm(degree_); }
    Vertex2 center() const { return center_; }
    double scale() const { return scale_; }

    Eigen::MatrixXd eval(std::span<const Vertex2> points) const;
    /// Values and gradients in one pass (the recurrence needs both).
    std::pair<Eigen::MatrixXd, BasisGradients> eval_with_grad(std::span<const Vertex2> points) const;

private:
    struct Step {
        int parent;
        int direction; // 0: multiply by x, 1: by y
    };

    using Real = long double;
    using MatrixXr = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
    using VectorXr = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

    Vertex2 center_;
    double scale_;
    int degree_;
    Real constant_;
    std::vector<Step> steps_;
    MatrixXr coeffs_; // upper-triangular recurrence coefficients, diagonal = normalization
};

/// Legendre polynomials L_0..L_k of the edge parameter t in [-1, 1].
class EdgeBasis {
public:
    explicit EdgeBasis(int degree) : degree_(degree) {}

    int degree() const { return degree_; }
    int dim() const { return degree_ + 1; }

    /// rows = parameters, cols = basis functions.
    Eigen::MatrixXd eval(std::span<const double> params) const;
    /// Diagonal of the edge mass matrix: int_e L_i^2 ds = |e| / (2i + 1).
    Eigen::VectorXd mass_diagonal(double length) const;

private:
    int degree_;
};

/// M_ij = sum_q w_q phi_i(x_q) phi_j(x_q), given basis values at the rule points.
Eigen::MatrixXd mass_matrix(const Eigen::MatrixXd& values, std::span<const double> weights);

/// Scaled-monomial mass matrix on a polygon (quadrature degree 2m).
Eigen::MatrixXd monomial_mass_matrix(std::span<const Vertex2> polygon, bool convex, int m);

} // namespace wgs::poly
