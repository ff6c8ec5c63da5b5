#include "core/weakops.hpp"

#include "core/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <tuple>

namespace wgs::weak {

using poly::dim_Pm;

int select_r(int n_edges, bool convex, int k)
{
    if (n_edges < 3) throw Error(ErrorCode::InvalidArgument, "a cell needs at least 3 edges");
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "velocity degree k must be >= 1");
    return convex ? n_edges + k - 1 : 2 * n_edges + k - 1;
}

int select_r(const mesh::Cell& cell, int k) { return select_r(cell.n_edges(), cell.convex, k); }

struct EdgeData {
    poly::EdgeQuadrature quad; // local frame
    Vertex2 normal;
    Eigen::MatrixXd phi;    // cell basis at edge points
    Eigen::MatrixXd lambda; // edge basis at edge points
    Eigen::VectorXd lambda_mass;
};

struct ShapeData {
    int k = 1;
    int r = 0;
    bool convex = true;
    double area = 0.0;
    double diameter = 0.0;
    int quad_degree = 0;
    std::vector<Vertex2> polygon; // local frame, centroid at the origin
    LocalDofLayout layout;
    poly::QuadratureRule rule; // local frame
    std::unique_ptr<poly::OrthonormalCellBasis> basis;
    Eigen::MatrixXd phi;
    poly::BasisGradients dphi;
    std::vector<EdgeData> edges;

    Eigen::MatrixXd mass;
    Eigen::LLT<Eigen::MatrixXd> mass_llt;
    Eigen::FullPivLU<Eigen::MatrixXd> mass_lu;
    bool use_lu = false;

    WeakGradientOperator gradient;
    WeakDivergenceOperator divergence;
    LocalBlocks blocks;
    Eigen::MatrixXd h1;

    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const
    {
        return use_lu ? Eigen::MatrixXd(mass_lu.solve(rhs)) : Eigen::MatrixXd(mass_llt.solve(rhs));
    }
};

namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(const std::vector<double>& v)
{
    return {v.data(), static_cast<Eigen::Index>(v.size())};
}

void factor_mass(ShapeData& s)
{
    s.mass_llt.compute(s.mass);
    if (s.mass_llt.info() == Eigen::Success) return;
    s.mass_lu.compute(s.mass);
    if (!s.mass_lu.isInvertible()) {
        throw Error(ErrorCode::ConditioningFailure, "singular P_" + std::to_string(s.r) + " mass matrix");
    }
    s.use_lu = true;
}

std::shared_ptr<const ShapeData> build_shape(std::span<const Vertex2> world_polygon, int k, int min_quad_degree,
                                             int r_shift)
{
    const int n = static_cast<int>(world_polygon.size());
    const auto geom = mesh::cell_geometry(world_polygon);
    auto s = std::make_shared<ShapeData>();
    s->k = k;
    s->convex = mesh::is_convex(world_polygon);
    s->r = select_r(n, s->convex, k) + r_shift;
    if (s->r < k) {
        throw Error(ErrorCode::InvalidArgument, "weak operator degree " + std::to_string(s->r) + " below k");
    }
    s->area = geom.area;
    s->diameter = geom.diameter;
    s->quad_degree = std::max(2 * s->r + 2, min_quad_degree);
    s->layout = {k, n};
    for (const auto& v : world_polygon) s->polygon.push_back(v - geom.centroid);

    s->rule = poly::cell_quadrature(s->polygon, s->convex, s->quad_degree);
    s->basis = std::make_unique<poly::OrthonormalCellBasis>(Vertex2{0.0, 0.0}, s->diameter, s->r, s->rule);
    std::tie(s->phi, s->dphi) = s->basis->eval_with_grad(s->rule.points);

    const poly::EdgeBasis edge_basis(k);
    for (int i = 0; i < n; ++i) {
        EdgeData e;
        const Vertex2 a = s->polygon[i];
        const Vertex2 b = s->polygon[(i + 1) % n];
        e.quad = poly::edge_quadrature(a, b, s->quad_degree);
        const Vertex2 t = b - a;
        e.normal = (1.0 / e.quad.length) * Vertex2{t.y, -t.x};
        e.phi = s->basis->eval(e.quad.rule.points);
        e.lambda = edge_basis.eval(e.quad.params);
        e.lambda_mass = edge_basis.mass_diagonal(e.quad.length);
        s->edges.push_back(std::move(e));
    }

    const Eigen::Index m = s->basis->dim();
    const auto W = as_vector(s->rule.weights).asDiagonal();
    s->mass = poly::mass_matrix(s->phi, s->rule.weights);
    factor_mass(*s);

    const auto& L = s->layout;
    const int dk = L.dim_k();
    const int nv = L.n_velocity();
    const int kp1 = k + 1;
    const Eigen::MatrixXd phik = s->phi.leftCols(dk);

    // Right-hand sides of the defining relations, column per velocity unknown.
    //   gradient:   -(v0, div phi)_T + <vb, phi n>_dT  for phi = phi_i E_ab
    //   divergence: -(v0, grad w)_T + <vb . n, w>_dT   for w = phi_i
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(4 * m, nv);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, nv);
    const Eigen::MatrixXd cdx = -(s->dphi.dx.transpose() * W * phik);
    const Eigen::MatrixXd cdy = -(s->dphi.dy.transpose() * W * phik);
    for (int a = 0; a < 2; ++a) {
        R.block((2 * a + 0) * m, L.v0_index(a, 0), m, dk) = cdx;
        R.block((2 * a + 1) * m, L.v0_index(a, 0), m, dk) = cdy;
    }
    S.block(0, L.v0_index(0, 0), m, dk) = cdx;
    S.block(0, L.v0_index(1, 0), m, dk) = cdy;
    for (int i = 0; i < n; ++i) {
        const auto& e = s->edges[i];
        const Eigen::MatrixXd pl = e.phi.transpose() * as_vector(e.quad.rule.weights).asDiagonal() * e.lambda;
        const double nb[2] = {e.normal.x, e.normal.y};
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) R.block((2 * a + b) * m, L.vb_index(i, a, 0), m, kp1) = nb[b] * pl;
            S.block(0, L.vb_index(i, a, 0), m, kp1) = nb[a] * pl;
        }
    }

    s->gradient.r = s->r;
    s->gradient.matrix.resize(4 * m, nv);
    for (int blk = 0; blk < 4; ++blk) s->gradient.matrix.middleRows(blk * m, m) = s->solve(R.middleRows(blk * m, m));
    s->divergence.r = s->r;
    s->divergence.matrix = s->solve(S);

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nv, nv);
    for (int blk = 0; blk < 4; ++blk) {
        const auto G = s->gradient.matrix.middleRows(blk * m, m);
        A.noalias() += G.transpose() * s->mass * G;
    }
    s->blocks.A = 0.5 * (A + A.transpose());
    const int np = L.n_pressure();
    s->blocks.B = s->mass.leftCols(np).transpose() * s->divergence.matrix;

    // Discrete H1 seminorm.
    Eigen::MatrixXd h1 = Eigen::MatrixXd::Zero(nv, nv);
    const Eigen::MatrixXd gx = s->dphi.dx.leftCols(dk);
    const Eigen::MatrixXd gy = s->dphi.dy.leftCols(dk);
    const Eigen::MatrixXd K = gx.transpose() * W * gx + gy.transpose() * W * gy;
    for (int a = 0; a < 2; ++a) h1.block(L.v0_index(a, 0), L.v0_index(a, 0), dk, dk) += K;
    for (int i = 0; i < n; ++i) {
        const auto& e = s->edges[i];
        const auto np_e = e.phi.rows();
        for (int a = 0; a < 2; ++a) {
            Eigen::MatrixXd jump = Eigen::MatrixXd::Zero(np_e, nv);
            jump.middleCols(L.v0_index(a, 0), dk) = e.phi.leftCols(dk);
            jump.middleCols(L.vb_index(i, a, 0), kp1) = -e.lambda;
            h1.noalias() += jump.transpose() * as_vector(e.quad.rule.weights).asDiagonal() * jump / s->diameter;
        }
    }
    s->h1 = 0.5 * (h1 + h1.transpose());
    return s;
}

} // namespace

LocalElement LocalElement::build(std::span<const Vertex2> polygon, int k, int min_quad_degree, int r_shift)
{
    const auto geom = mesh::cell_geometry(polygon);
    return LocalElement(build_shape(polygon, k, min_quad_degree, r_shift), geom.centroid);
}

LocalElement LocalElement::build(const mesh::PolyMesh& mesh, int cell, int k, int min_quad_degree, int r_shift)
{
    return build(mesh.polygon(cell), k, min_quad_degree, r_shift);
}

LocalElement LocalElement::translated(Vertex2 centroid) const { return LocalElement(shape_, centroid); }

int LocalElement::k() const { return shape_->k; }
int LocalElement::r() const { return shape_->r; }
int LocalElement::n_edges() const { return shape_->layout.n_edges; }
bool LocalElement::convex() const { return shape_->convex; }
double LocalElement::area() const { return shape_->area; }
double LocalElement::diameter() const { return shape_->diameter; }
int LocalElement::quad_degree() const { return shape_->quad_degree; }
const LocalDofLayout& LocalElement::layout() const { return shape_->layout; }
const poly::OrthonormalCellBasis& LocalElement::basis() const { return *shape_->basis; }
const WeakGradientOperator& LocalElement::gradient() const { return shape_->gradient; }
const WeakDivergenceOperator& LocalElement::divergence() const { return shape_->divergence; }
const LocalBlocks& LocalElement::blocks() const { return shape_->blocks; }
const Eigen::MatrixXd& LocalElement::mass_r() const { return shape_->mass; }
const Eigen::MatrixXd& LocalElement::h1_matrix() const { return shape_->h1; }
const Eigen::MatrixXd& LocalElement::basis_at_quadrature() const { return shape_->phi; }
std::span<const double> LocalElement::quadrature_weights() const { return shape_->rule.weights; }
Vertex2 LocalElement::normal(int edge) const { return shape_->edges.at(edge).normal; }
double LocalElement::edge_length(int edge) const { return shape_->edges.at(edge).quad.length; }

std::vector<Vertex2> LocalElement::polygon() const
{
    std::vector<Vertex2> p;
    for (const auto& v : shape_->polygon) p.push_back(v + origin_);
    return p;
}

poly::QuadratureRule LocalElement::quadrature() const
{
    poly::QuadratureRule rule = shape_->rule;
    for (auto& p : rule.points) p = p + origin_;
    return rule;
}

Eigen::VectorXd LocalElement::solve_mass(const Eigen::VectorXd& rhs) const { return shape_->solve(rhs); }

Eigen::VectorXd LocalElement::solve_mass_prefix(int n, const Eigen::VectorXd& rhs) const
{
    // The first n basis functions span a nested polynomial space; its mass
    // matrix is the leading block.
    return shape_->mass.topLeftCorner(n, n).llt().solve(rhs);
}

Eigen::VectorXd LocalElement::load(const VectorFn& f) const
{
    const auto& s = *shape_;
    const int dk = s.layout.dim_k();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(s.layout.n_velocity());
    const auto np = static_cast<Eigen::Index>(s.rule.size());
    Eigen::MatrixX2d fv(np, 2);
    for (Eigen::Index q = 0; q < np; ++q) {
        const Vertex2 x = s.rule.points[q] + origin_;
        const auto v = f(x.x, x.y);
        fv(q, 0) = v[0] * s.rule.weights[q];
        fv(q, 1) = v[1] * s.rule.weights[q];
    }
    const Eigen::MatrixXd proj = s.phi.leftCols(dk).transpose() * fv;
    out.segment(s.layout.v0_index(0, 0), dk) = proj.col(0);
    out.segment(s.layout.v0_index(1, 0), dk) = proj.col(1);
    return out;
}

Eigen::VectorXd LocalElement::project_Q0(const VectorFn& u) const
{
    const int dk = shape_->layout.dim_k();
    const Eigen::VectorXd rhs = load(u).head(2 * dk);
    Eigen::VectorXd out(2 * dk);
    out.head(dk) = solve_mass_prefix(dk, rhs.head(dk));
    out.tail(dk) = solve_mass_prefix(dk, rhs.tail(dk));
    return out;
}

Eigen::VectorXd LocalElement::project_Qb(int edge, const VectorFn& u) const
{
    const auto& e = shape_->edges.at(edge);
    const int kp1 = shape_->k + 1;
    Eigen::VectorXd out(2 * kp1);
    const auto np = static_cast<Eigen::Index>(e.quad.rule.size());
    Eigen::MatrixX2d uv(np, 2);
    for (Eigen::Index q = 0; q < np; ++q) {
        const Vertex2 x = e.quad.rule.points[q] + origin_;
        const auto v = u(x.x, x.y);
        uv(q, 0) = v[0] * e.quad.rule.weights[q];
        uv(q, 1) = v[1] * e.quad.rule.weights[q];
    }
    const Eigen::MatrixXd proj = e.lambda.transpose() * uv;
    out.head(kp1) = proj.col(0).cwiseQuotient(e.lambda_mass);
    out.tail(kp1) = proj.col(1).cwiseQuotient(e.lambda_mass);
    return out;
}

Eigen::VectorXd LocalElement::project_Qh(const VectorFn& u) const
{
    const auto& L = shape_->layout;
    Eigen::VectorXd out(L.n_velocity());
    out.head(L.n_v0()) = project_Q0(u);
    for (int i = 0; i < L.n_edges; ++i) out.segment(L.edge_offset(i), L.n_vb_per_edge()) = project_Qb(i, u);
    return out;
}

Eigen::VectorXd LocalElement::project_pressure(const ScalarFn& p) const
{
    const auto& s = *shape_;
    const int np = s.layout.n_pressure();
    const auto nq = static_cast<Eigen::Index>(s.rule.size());
    Eigen::VectorXd pw(nq);
    for (Eigen::Index q = 0; q < nq; ++q) {
        const Vertex2 x = s.rule.points[q] + origin_;
        pw[q] = p(x.x, x.y) * s.rule.weights[q];
    }
    return solve_mass_prefix(np, s.phi.leftCols(np).transpose() * pw);
}

Eigen::VectorXd LocalElement::project_Qh_scalar(const ScalarFn& f) const
{
    const auto& s = *shape_;
    const auto np = static_cast<Eigen::Index>(s.rule.size());
    Eigen::VectorXd fw(np);
    for (Eigen::Index q = 0; q < np; ++q) {
        const Vertex2 x = s.rule.points[q] + origin_;
        fw[q] = f(x.x, x.y) * s.rule.weights[q];
    }
    return solve_mass(s.phi.transpose() * fw);
}

Eigen::VectorXd LocalElement::project_Qh_tensor(const TensorFn& t) const
{
    const auto& s = *shape_;
    const auto np = static_cast<Eigen::Index>(s.rule.size());
    const Eigen::Index m = s.basis->dim();
    Eigen::MatrixX4d tw(np, 4);
    for (Eigen::Index q = 0; q < np; ++q) {
        const Vertex2 x = s.rule.points[q] + origin_;
        const auto v = t(x.x, x.y);
        for (int c = 0; c < 4; ++c) tw(q, c) = v[c] * s.rule.weights[q];
    }
    const Eigen::MatrixXd rhs = s.phi.transpose() * tw;
    Eigen::VectorXd out(4 * m);
    for (int c = 0; c < 4; ++c) out.segment(c * m, m) = solve_mass(rhs.col(c));
    return out;
}

Eigen::VectorXd LocalElement::weak_gradient_of(const VectorFn& u) const
{
    const auto& s = *shape_;
    const Eigen::Index m = s.basis->dim();
    const auto np = static_cast<Eigen::Index>(s.rule.size());
    Eigen::MatrixX2d uw(np, 2);
    for (Eigen::Index q = 0; q < np; ++q) {
        const Vertex2 x = s.rule.points[q] + origin_;
        const auto v = u(x.x, x.y);
        uw(q, 0) = v[0] * s.rule.weights[q];
        uw(q, 1) = v[1] * s.rule.weights[q];
    }
    Eigen::VectorXd rhs(4 * m);
    for (int a = 0; a < 2; ++a) {
        rhs.segment((2 * a + 0) * m, m) = -(s.dphi.dx.transpose() * uw.col(a));
        rhs.segment((2 * a + 1) * m, m) = -(s.dphi.dy.transpose() * uw.col(a));
    }
    for (const auto& e : s.edges) {
        const auto ne = static_cast<Eigen::Index>(e.quad.rule.size());
        Eigen::MatrixX2d ue(ne, 2);
        for (Eigen::Index q = 0; q < ne; ++q) {
            const Vertex2 x = e.quad.rule.points[q] + origin_;
            const auto v = u(x.x, x.y);
            ue(q, 0) = v[0] * e.quad.rule.weights[q];
            ue(q, 1) = v[1] * e.quad.rule.weights[q];
        }
        const Eigen::MatrixXd pu = e.phi.transpose() * ue;
        const double nb[2] = {e.normal.x, e.normal.y};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) rhs.segment((2 * a + b) * m, m) += nb[b] * pu.col(a);
    }
    Eigen::VectorXd out(4 * m);
    for (int blk = 0; blk < 4; ++blk) out.segment(blk * m, m) = solve_mass(rhs.segment(blk * m, m));
    return out;
}

Eigen::VectorXd LocalElement::weak_divergence_of(const VectorFn& u) const
{
    const auto& s = *shape_;
    const auto np = static_cast<Eigen::Index>(s.rule.size());
    Eigen::MatrixX2d uw(np, 2);
    for (Eigen::Index q = 0; q < np; ++q) {
        const Vertex2 x = s.rule.points[q] + origin_;
        const auto v = u(x.x, x.y);
        uw(q, 0) = v[0] * s.rule.weights[q];
        uw(q, 1) = v[1] * s.rule.weights[q];
    }
    Eigen::VectorXd rhs = -(s.dphi.dx.transpose() * uw.col(0) + s.dphi.dy.transpose() * uw.col(1));
    for (const auto& e : s.edges) {
        const auto ne = static_cast<Eigen::Index>(e.quad.rule.size());
        Eigen::VectorXd un(ne);
        for (Eigen::Index q = 0; q < ne; ++q) {
            const Vertex2 x = e.quad.rule.points[q] + origin_;
            const auto v = u(x.x, x.y);
            un[q] = (v[0] * e.normal.x + v[1] * e.normal.y) * e.quad.rule.weights[q];
        }
        rhs += e.phi.transpose() * un;
    }
    return solve_mass(rhs);
}

Eigen::MatrixXd LocalElement::eval_basis(std::span<const Vertex2> points) const
{
    std::vector<Vertex2> local;
    local.reserve(points.size());
    for (const auto& p : points) local.push_back(p - origin_);
    return shape_->basis->eval(local);
}

Eigen::MatrixX2d LocalElement::eval_velocity(const Eigen::VectorXd& local_dofs, std::span<const Vertex2> points) const
{
    const int dk = shape_->layout.dim_k();
    const Eigen::MatrixXd phi = eval_basis(points).leftCols(dk);
    Eigen::MatrixX2d out(phi.rows(), 2);
    out.col(0) = phi * local_dofs.segment(shape_->layout.v0_index(0, 0), dk);
    out.col(1) = phi * local_dofs.segment(shape_->layout.v0_index(1, 0), dk);
    return out;
}

ElementSet build_element_set(const mesh::PolyMesh& mesh, int k, int min_quad_degree, int r_shift)
{
    ElementSet set;
    set.k = k;
    set.quad_degree = min_quad_degree;
    set.r_shift = r_shift;
    const int nc = mesh.n_cells();

    // Shape key: vertex offsets from the centroid on a 1e-12 lattice.
    std::vector<std::vector<std::int64_t>> keys(nc);
    for (int c = 0; c < nc; ++c) {
        const auto& cell = mesh.cells[c];
        auto& key = keys[c];
        key.reserve(2 * cell.vertex_ids.size());
        for (int v : cell.vertex_ids) {
            const Vertex2 d = mesh.vertices[v] - cell.centroid;
            key.push_back(std::llround(d.x * 1e12));
            key.push_back(std::llround(d.y * 1e12));
        }
    }
    std::map<std::vector<std::int64_t>, int> unique;
    std::vector<int> representative;
    std::vector<int> shape_of(nc);
    for (int c = 0; c < nc; ++c) {
        auto [it, inserted] = unique.emplace(keys[c], static_cast<int>(representative.size()));
        if (inserted) representative.push_back(c);
        shape_of[c] = it->second;
    }

    std::vector<std::optional<LocalElement>> shapes(representative.size());
    const int ns = static_cast<int>(representative.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < ns; ++s) {
        try {
            shapes[s] = LocalElement::build(mesh, representative[s], k, min_quad_degree, r_shift);
        } catch (...) {
#pragma omp critical
            failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    set.elements.reserve(nc);
    for (int c = 0; c < nc; ++c) set.elements.push_back(shapes[shape_of[c]]->translated(mesh.cells[c].centroid));
    set.n_unique_shapes = ns;
    return set;
}

} // namespace wgs::weak
