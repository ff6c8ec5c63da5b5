#include "core/polybasis.hpp"

#include "core/error.hpp"

#include <cmath>

namespace wgs::poly {

std::vector<std::array<int, 2>> monomial_exponents(int m)
{
    std::vector<std::array<int, 2>> e;
    e.reserve(dim_Pm(m));
    for (int d = 0; d <= m; ++d)
        for (int b = 0; b <= d; ++b) e.push_back({d - b, b});
    return e;
}

ScaledMonomialBasis::ScaledMonomialBasis(Vertex2 center, double scale, int degree)
    : center_(center), scale_(scale), degree_(degree), exponents_(monomial_exponents(degree))
{
    if (degree < 0) throw Error(ErrorCode::InvalidArgument, "negative basis degree");
    if (!(scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "basis scale must be positive");
}

namespace {

// Powers xi^0..xi^m for each point, row-major (point, power).
Eigen::MatrixXd powers(const Eigen::VectorXd& xi, int m)
{
    Eigen::MatrixXd p(xi.size(), m + 1);
    p.col(0).setOnes();
    for (int j = 1; j <= m; ++j) p.col(j) = p.col(j - 1).cwiseProduct(xi);
    return p;
}

} // namespace

Eigen::MatrixXd ScaledMonomialBasis::eval(std::span<const Vertex2> points) const
{
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::VectorXd xi(n), eta(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        xi[i] = (points[i].x - center_.x) / scale_;
        eta[i] = (points[i].y - center_.y) / scale_;
    }
    const auto px = powers(xi, degree_);
    const auto py = powers(eta, degree_);
    Eigen::MatrixXd v(n, dim());
    for (int j = 0; j < dim(); ++j) v.col(j) = px.col(exponents_[j][0]).cwiseProduct(py.col(exponents_[j][1]));
    return v;
}

BasisGradients ScaledMonomialBasis::eval_grad(std::span<const Vertex2> points) const
{
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::VectorXd xi(n), eta(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        xi[i] = (points[i].x - center_.x) / scale_;
        eta[i] = (points[i].y - center_.y) / scale_;
    }
    const auto px = powers(xi, degree_);
    const auto py = powers(eta, degree_);
    BasisGradients g{Eigen::MatrixXd::Zero(n, dim()), Eigen::MatrixXd::Zero(n, dim())};
    for (int j = 0; j < dim(); ++j) {
        const auto [a, b] = exponents_[j];
        if (a > 0) g.dx.col(j) = (a / scale_) * px.col(a - 1).cwiseProduct(py.col(b));
        if (b > 0) g.dy.col(j) = (b / scale_) * px.col(a).cwiseProduct(py.col(b - 1));
    }
    return g;
}

OrthonormalCellBasis::OrthonormalCellBasis(Vertex2 center, double scale, int degree, const QuadratureRule& rule)
    : center_(center), scale_(scale), degree_(degree)
{
    if (degree < 0) throw Error(ErrorCode::InvalidArgument, "negative basis degree");
    if (rule.degree < 2 * degree) {
        throw Error(ErrorCode::InvalidArgument, "quadrature must be exact for twice the basis degree");
    }
    const int m = dim();
    const auto np = static_cast<Eigen::Index>(rule.size());
    VectorXr w(np);
    MatrixXr xy(np, 2);
    for (Eigen::Index i = 0; i < np; ++i) {
        w[i] = rule.weights[i];
        xy(i, 0) = (Real(rule.points[i].x) - center.x) / scale;
        xy(i, 1) = (Real(rule.points[i].y) - center.y) / scale;
    }

    constant_ = 1 / std::sqrt(w.sum());
    const auto exps = monomial_exponents(degree);
    steps_.resize(m);
    coeffs_ = MatrixXr::Zero(m, m);
    coeffs_(0, 0) = 1;
    MatrixXr q(np, m);
    q.col(0).setConstant(constant_);

    for (int idx = 1; idx < m; ++idx) {
        const auto [a, b] = exps[idx];
        const int d = a + b;
        Step step;
        if (a > 0) {
            step = {dim_Pm(d - 2) + b, 0};
        } else {
            step = {dim_Pm(d - 2) + (b - 1), 1};
        }
        steps_[idx] = step;
        VectorXr v = xy.col(step.direction).cwiseProduct(q.col(step.parent));
        const Real before = std::sqrt(w.dot(v.cwiseAbs2()));
        VectorXr h = VectorXr::Zero(idx);
        for (int pass = 0; pass < 2; ++pass) {
            const VectorXr hp = q.leftCols(idx).transpose() * w.cwiseProduct(v);
            v.noalias() -= q.leftCols(idx) * hp;
            h += hp;
        }
        const Real nrm = std::sqrt(w.dot(v.cwiseAbs2()));
        if (!(nrm > Real(1e-13) * before)) {
            throw Error(ErrorCode::ConditioningFailure,
                        "orthonormalization lost rank at basis function " + std::to_string(idx));
        }
        coeffs_.col(idx).head(idx) = h;
        coeffs_(idx, idx) = nrm;
        // Store the replayed column so later steps see exactly what eval produces.
        q.col(idx) = (xy.col(step.direction).cwiseProduct(q.col(step.parent)) - q.leftCols(idx) * h) / nrm;
    }
}

Eigen::MatrixXd OrthonormalCellBasis::eval(std::span<const Vertex2> points) const
{
    return eval_with_grad(points).first;
}

std::pair<Eigen::MatrixXd, BasisGradients> OrthonormalCellBasis::eval_with_grad(std::span<const Vertex2> points) const
{
    const int m = dim();
    const auto np = static_cast<Eigen::Index>(points.size());
    MatrixXr xy(np, 2);
    for (Eigen::Index i = 0; i < np; ++i) {
        xy(i, 0) = (Real(points[i].x) - center_.x) / scale_;
        xy(i, 1) = (Real(points[i].y) - center_.y) / scale_;
    }
    MatrixXr v(np, m), gx(np, m), gy(np, m);
    v.col(0).setConstant(constant_);
    gx.col(0).setZero();
    gy.col(0).setZero();
    const Real inv_scale = 1 / Real(scale_);
    for (int idx = 1; idx < m; ++idx) {
        const auto [parent, dir] = steps_[idx];
        const auto h = coeffs_.col(idx).head(idx);
        const Real nrm = coeffs_(idx, idx);
        v.col(idx) = (xy.col(dir).cwiseProduct(v.col(parent)) - v.leftCols(idx) * h) / nrm;
        gx.col(idx) = xy.col(dir).cwiseProduct(gx.col(parent)) - gx.leftCols(idx) * h;
        gy.col(idx) = xy.col(dir).cwiseProduct(gy.col(parent)) - gy.leftCols(idx) * h;
        if (dir == 0) {
            gx.col(idx) += inv_scale * v.col(parent);
        } else {
            gy.col(idx) += inv_scale * v.col(parent);
        }
        gx.col(idx) /= nrm;
        gy.col(idx) /= nrm;
    }
    return {v.cast<double>(), BasisGradients{gx.cast<double>(), gy.cast<double>()}};
}

Eigen::MatrixXd EdgeBasis::eval(std::span<const double> params) const
{
    const auto n = static_cast<Eigen::Index>(params.size());
    Eigen::MatrixXd v(n, dim());
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = params[i];
        double p0 = 1.0, p1 = t;
        v(i, 0) = 1.0;
        if (degree_ >= 1) v(i, 1) = t;
        for (int j = 2; j <= degree_; ++j) {
            const double p2 = ((2.0 * j - 1.0) * t * p1 - (j - 1.0) * p0) / j;
            v(i, j) = p2;
            p0 = p1;
            p1 = p2;
        }
    }
    return v;
}

Eigen::VectorXd EdgeBasis::mass_diagonal(double length) const
{
    Eigen::VectorXd d(dim());
    for (int j = 0; j < dim(); ++j) d[j] = length / (2.0 * j + 1.0);
    return d;
}

Eigen::MatrixXd mass_matrix(const Eigen::MatrixXd& values, std::span<const double> weights)
{
    Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
    Eigen::MatrixXd m = values.transpose() * w.asDiagonal() * values;
    return 0.5 * (m + m.transpose());
}

Eigen::MatrixXd monomial_mass_matrix(std::span<const Vertex2> polygon, bool convex, int m)
{
    const auto g = mesh::cell_geometry(polygon);
    const auto rule = cell_quadrature(polygon, convex, 2 * m);
    const ScaledMonomialBasis basis(g.centroid, g.diameter, m);
    return mass_matrix(basis.eval(rule.points), rule.weights);
}

} // namespace wgs::poly
